//! Flat key=value configuration files with `[section]` headers.
//! Unknown sections or keys are rejected so typos surface immediately;
//! every run writes back the fully resolved configuration it used.

use std::collections::BTreeMap;
use std::path::Path;

use kt_core::models::{Architecture, DktPlusConfig, ModelConfig};
use kt_core::synth::{default_corpus_config, DepartmentShare, SynthConfig};
use kt_core::train::{Optimizer, TrainConfig};

use crate::CliError;

/// Parsed `[section] key = value` file contents.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile, CliError> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(CliError::Config(format!(
                        "line {}: malformed section header '{raw}'",
                        lineno + 1
                    )));
                }
                current = line[1..line.len() - 1].trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "line {}: expected key = value, got '{raw}'",
                    lineno + 1
                )));
            };
            if current.is_empty() {
                return Err(CliError::Config(format!(
                    "line {}: key outside any [section]",
                    lineno + 1
                )));
            }
            let prev = sections
                .get_mut(&current)
                .expect("section inserted above")
                .insert(key.trim().to_string(), value.trim().to_string());
            if prev.is_some() {
                return Err(CliError::Config(format!(
                    "line {}: duplicate key '{}' in [{}]",
                    lineno + 1,
                    key.trim(),
                    current
                )));
            }
        }
        Ok(ConfigFile { sections })
    }

    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        ConfigFile::parse(&text)
    }

    fn section(&self, name: &str) -> Option<&BTreeMap<String, String>> {
        self.sections.get(name)
    }

    /// Every section must be consumed by some reader; call after all
    /// readers ran with the set of sections they recognize.
    pub fn reject_unknown_sections(&self, known: &[&str]) -> Result<(), CliError> {
        for name in self.sections.keys() {
            if !known.contains(&name.as_str()) {
                return Err(CliError::Config(format!("unknown config section [{name}]")));
            }
        }
        Ok(())
    }
}

/// Typed reader over one section that records which keys were consumed
/// and rejects the rest.
struct SectionReader<'a> {
    name: &'a str,
    map: Option<&'a BTreeMap<String, String>>,
    consumed: Vec<String>,
}

impl<'a> SectionReader<'a> {
    fn new(file: &'a ConfigFile, name: &'a str) -> SectionReader<'a> {
        SectionReader {
            name,
            map: file.section(name),
            consumed: Vec::new(),
        }
    }

    fn raw(&mut self, key: &str) -> Option<&'a str> {
        self.consumed.push(key.to_string());
        self.map.and_then(|m| m.get(key)).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, into: &mut T) -> Result<(), CliError>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(raw) = self.raw(key) {
            *into = raw.parse().map_err(|e| {
                CliError::Config(format!("[{}] {key} = '{raw}': {e}", self.name))
            })?;
        }
        Ok(())
    }

    fn parse_opt<T: std::str::FromStr>(
        &mut self,
        key: &str,
        into: &mut Option<T>,
    ) -> Result<(), CliError>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(raw) = self.raw(key) {
            if raw.eq_ignore_ascii_case("none") {
                *into = None;
            } else {
                *into = Some(raw.parse().map_err(|e| {
                    CliError::Config(format!("[{}] {key} = '{raw}': {e}", self.name))
                })?);
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<(), CliError> {
        if let Some(map) = self.map {
            for key in map.keys() {
                if !self.consumed.contains(key) {
                    return Err(CliError::Config(format!(
                        "unknown key '{key}' in [{}]",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Reads `[synth]`, starting from the named preset (default when absent).
pub fn read_synth_config(file: &ConfigFile, preset: Option<&str>) -> Result<SynthConfig, CliError> {
    let mut reader = SectionReader::new(file, "synth");
    let preset_name = reader
        .raw("preset")
        .map(str::to_string)
        .or_else(|| preset.map(str::to_string))
        .unwrap_or_else(|| "default".to_string());
    let mut config = match preset_name.as_str() {
        "default" => default_corpus_config(),
        "univ" => kt_core::synth::univ_shape_config(),
        "coe" => kt_core::synth::coe_shape_config(),
        other => {
            return Err(CliError::Config(format!(
                "unknown synth preset '{other}' (expected default, univ or coe)"
            )))
        }
    };
    reader.parse("n_students", &mut config.n_students)?;
    reader.parse("n_skills", &mut config.n_skills)?;
    reader.parse("records_min", &mut config.records_per_student.0)?;
    reader.parse("records_max", &mut config.records_per_student.1)?;
    reader.parse_opt("total_records", &mut config.total_records)?;
    if let Some(raw) = reader.raw("years") {
        config.years = parse_year_range(raw)?;
    }
    reader.parse("target_pass_rate", &mut config.target_pass_rate)?;
    reader.parse("difficulty_spread", &mut config.difficulty_spread)?;
    reader.parse("ability_spread", &mut config.ability_spread)?;
    reader.parse("learning_rate_gain", &mut config.learning_rate_gain)?;
    reader.parse("clean_noise", &mut config.clean_noise)?;
    reader.parse("seed", &mut config.seed)?;
    reader.parse_opt("n_courses", &mut config.n_courses)?;
    reader.parse("skill_skew", &mut config.skill_skew)?;
    if let Some(raw) = reader.raw("department_mix") {
        config.department_mix = parse_department_mix(raw)?;
    }
    reader.finish()?;
    Ok(config)
}

fn parse_year_range(raw: &str) -> Result<Vec<i32>, CliError> {
    let bad = || CliError::Config(format!("years = '{raw}': expected like 2020..2023"));
    let (a, b) = raw.split_once("..").ok_or_else(bad)?;
    let from: i32 = a.trim().parse().map_err(|_| bad())?;
    let to: i32 = b.trim().parse().map_err(|_| bad())?;
    if to < from {
        return Err(bad());
    }
    Ok((from..=to).collect())
}

fn parse_department_mix(raw: &str) -> Result<Vec<DepartmentShare>, CliError> {
    raw.split(',')
        .map(|part| {
            let fields: Vec<&str> = part.trim().split(':').collect();
            if fields.len() != 3 {
                return Err(CliError::Config(format!(
                    "department_mix entry '{part}': expected CODE:COLLEGE:WEIGHT"
                )));
            }
            let weight: f64 = fields[2].parse().map_err(|_| {
                CliError::Config(format!("department_mix weight '{}' not a number", fields[2]))
            })?;
            Ok(DepartmentShare {
                code: fields[0].to_string(),
                college: fields[1].to_string(),
                weight,
            })
        })
        .collect()
}

/// Reads `[train]` over the published defaults.
pub fn read_train_config(file: &ConfigFile) -> Result<TrainConfig, CliError> {
    let mut config = TrainConfig::default();
    let mut reader = SectionReader::new(file, "train");
    reader.parse("batch_size", &mut config.batch_size)?;
    reader.parse("epochs", &mut config.epochs)?;
    reader.parse("learning_rate", &mut config.learning_rate)?;
    if let Some(raw) = reader.raw("optimizer") {
        config.optimizer = Optimizer::parse(raw).ok_or_else(|| {
            CliError::Config(format!("optimizer = '{raw}': expected adam or sgd"))
        })?;
    }
    reader.parse("max_seq_len", &mut config.max_seq_len)?;
    reader.parse("seed", &mut config.seed)?;
    reader.parse("beta1", &mut config.beta1)?;
    reader.parse("beta2", &mut config.beta2)?;
    reader.parse("epsilon", &mut config.epsilon)?;
    reader.parse_opt("gradient_clip_norm", &mut config.gradient_clip_norm)?;
    reader.parse("log_val_auc", &mut config.log_val_auc)?;
    reader.finish()?;
    Ok(config)
}

/// Reads `[model]` over the default hyperparameters.
pub fn read_model_config(file: &ConfigFile) -> Result<ModelConfig, CliError> {
    let mut config = ModelConfig::default();
    let mut lambdas = (
        config.dkt_plus.lambda_r,
        config.dkt_plus.lambda_w1,
        config.dkt_plus.lambda_w2,
    );
    let mut reader = SectionReader::new(file, "model");
    reader.parse("dkt_hidden", &mut config.dkt_hidden)?;
    reader.parse("lambda_r", &mut lambdas.0)?;
    reader.parse("lambda_w1", &mut lambdas.1)?;
    reader.parse("lambda_w2", &mut lambdas.2)?;
    reader.parse("dkvmn_slots", &mut config.dkvmn_slots)?;
    reader.parse("dkvmn_key_dim", &mut config.dkvmn_key_dim)?;
    reader.parse("dkvmn_value_dim", &mut config.dkvmn_value_dim)?;
    reader.parse("sakt_dim", &mut config.sakt_dim)?;
    reader.parse("sakt_heads", &mut config.sakt_heads)?;
    reader.parse("sakt_max_len", &mut config.sakt_max_len)?;
    reader.parse("kqn_dim", &mut config.kqn_dim)?;
    reader.finish()?;
    config.dkt_plus = DktPlusConfig {
        lambda_r: lambdas.0,
        lambda_w1: lambdas.1,
        lambda_w2: lambdas.2,
    };
    Ok(config)
}

/// Renders the resolved synth configuration for the run snapshot.
pub fn render_synth_config(config: &SynthConfig) -> String {
    let mix = config
        .department_mix
        .iter()
        .map(|d| format!("{}:{}:{}", d.code, d.college, d.weight))
        .collect::<Vec<_>>()
        .join(",");
    let mut out = String::from("[synth]\n");
    out.push_str(&format!("n_students = {}\n", config.n_students));
    out.push_str(&format!("n_skills = {}\n", config.n_skills));
    out.push_str(&format!("records_min = {}\n", config.records_per_student.0));
    out.push_str(&format!("records_max = {}\n", config.records_per_student.1));
    if let Some(total) = config.total_records {
        out.push_str(&format!("total_records = {total}\n"));
    }
    out.push_str(&format!(
        "years = {}..{}\n",
        config.years.first().unwrap(),
        config.years.last().unwrap()
    ));
    out.push_str(&format!("target_pass_rate = {}\n", config.target_pass_rate));
    out.push_str(&format!("difficulty_spread = {}\n", config.difficulty_spread));
    out.push_str(&format!("ability_spread = {}\n", config.ability_spread));
    out.push_str(&format!("learning_rate_gain = {}\n", config.learning_rate_gain));
    out.push_str(&format!("clean_noise = {}\n", config.clean_noise));
    out.push_str(&format!("seed = {}\n", config.seed));
    if let Some(n) = config.n_courses {
        out.push_str(&format!("n_courses = {n}\n"));
    }
    out.push_str(&format!("skill_skew = {}\n", config.skill_skew));
    out.push_str(&format!("department_mix = {mix}\n"));
    out
}

/// Renders the resolved train configuration for the run snapshot.
pub fn render_train_config(config: &TrainConfig) -> String {
    let clip = config
        .gradient_clip_norm
        .map(|c| c.to_string())
        .unwrap_or_else(|| "none".to_string());
    format!(
        "[train]\nbatch_size = {}\nepochs = {}\nlearning_rate = {}\noptimizer = {}\n\
         max_seq_len = {}\nseed = {}\nbeta1 = {}\nbeta2 = {}\nepsilon = {}\n\
         gradient_clip_norm = {clip}\nlog_val_auc = {}\n",
        config.batch_size,
        config.epochs,
        config.learning_rate,
        config.optimizer.tag(),
        config.max_seq_len,
        config.seed,
        config.beta1,
        config.beta2,
        config.epsilon,
        config.log_val_auc,
    )
}

/// Renders the resolved model hyperparameters for the run snapshot.
pub fn render_model_config(arch: Architecture, config: &ModelConfig) -> String {
    format!(
        "[model]\narch = {}\ndkt_hidden = {}\nlambda_r = {}\nlambda_w1 = {}\nlambda_w2 = {}\n\
         dkvmn_slots = {}\ndkvmn_key_dim = {}\ndkvmn_value_dim = {}\n\
         sakt_dim = {}\nsakt_heads = {}\nsakt_max_len = {}\nkqn_dim = {}\n",
        arch.tag(),
        config.dkt_hidden,
        config.dkt_plus.lambda_r,
        config.dkt_plus.lambda_w1,
        config.dkt_plus.lambda_w2,
        config.dkvmn_slots,
        config.dkvmn_key_dim,
        config.dkvmn_value_dim,
        config.sakt_dim,
        config.sakt_heads,
        config.sakt_max_len,
        config.kqn_dim,
    )
}
