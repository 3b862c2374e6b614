//! Self-describing binary checkpoints: a fixed little-endian header
//! (magic, version, architecture tag), a text manifest of shapes and
//! hyperparameters, then raw f64 tensor payloads. Loading restores
//! bit-identical parameters on any platform.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use kt_core::math::Matrix;
use kt_core::models::{Architecture, DktPlusConfig, KtModel, ModelConfig};

use crate::CliError;

const MAGIC: &[u8; 8] = b"KTCKPT01";
const VERSION: u32 = 1;

/// Everything a run persists: the model plus enough context to rebuild
/// and validate it.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: KtModel,
    pub vocab_size: usize,
    pub seed: u64,
    pub epochs_trained: usize,
    pub train_snapshot: String,
}

fn arch_tag_bytes(arch: Architecture) -> [u8; 8] {
    let mut out = [b' '; 8];
    for (slot, byte) in out.iter_mut().zip(arch.tag().bytes()) {
        *slot = byte;
    }
    out
}

pub fn save(checkpoint: &Checkpoint, path: &Path) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Io(format!("writing {}: {e}", path.display()));
    let model = &checkpoint.model;
    let params = model.params();

    let mut manifest = String::new();
    manifest.push_str(&format!("arch={}\n", model.architecture().tag()));
    manifest.push_str(&format!("vocab_size={}\n", checkpoint.vocab_size));
    manifest.push_str(&format!("seed={}\n", checkpoint.seed));
    manifest.push_str(&format!("epochs_trained={}\n", checkpoint.epochs_trained));
    for (key, value) in hyper_entries(model) {
        manifest.push_str(&format!("hyper.{key}={value}\n"));
    }
    for line in checkpoint.train_snapshot.lines() {
        if let Some((k, v)) = line.split_once('=') {
            if !k.trim().is_empty() && !line.trim().starts_with('[') {
                manifest.push_str(&format!("train.{}={}\n", k.trim(), v.trim()));
            }
        }
    }
    for id in params.ids() {
        let value = params.value(id);
        manifest.push_str(&format!(
            "tensor {} {} {}\n",
            params.name(id),
            value.rows(),
            value.cols()
        ));
    }

    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(MAGIC).map_err(io_err)?;
    file.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    file.write_all(&arch_tag_bytes(model.architecture())).map_err(io_err)?;
    file.write_all(&(manifest.len() as u64).to_le_bytes()).map_err(io_err)?;
    file.write_all(manifest.as_bytes()).map_err(io_err)?;
    for id in params.ids() {
        for v in params.value(id).data() {
            file.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    Ok(())
}

fn hyper_entries(model: &KtModel) -> Vec<(&'static str, String)> {
    match model {
        KtModel::Dkt(s) => vec![("dkt_hidden", s.hidden.to_string())],
        KtModel::DktPlus(s, cfg) => vec![
            ("dkt_hidden", s.hidden.to_string()),
            ("lambda_r", cfg.lambda_r.to_string()),
            ("lambda_w1", cfg.lambda_w1.to_string()),
            ("lambda_w2", cfg.lambda_w2.to_string()),
        ],
        KtModel::Dkvmn(s) => vec![
            ("dkvmn_slots", s.slots.to_string()),
            ("dkvmn_key_dim", s.key_dim.to_string()),
            ("dkvmn_value_dim", s.value_dim.to_string()),
        ],
        KtModel::Sakt(s) => vec![
            ("sakt_dim", s.dim.to_string()),
            ("sakt_heads", s.heads.to_string()),
            ("sakt_max_len", s.max_len.to_string()),
        ],
        KtModel::Kqn(s) => vec![("kqn_dim", s.dim.to_string())],
    }
}

pub fn load(path: &Path) -> Result<Checkpoint, CliError> {
    let io_err = |e: std::io::Error| CliError::Io(format!("reading {}: {e}", path.display()));
    let bad = |msg: String| CliError::Data(format!("checkpoint {}: {msg}", path.display()));
    let mut file = std::fs::File::open(path).map_err(io_err)?;
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(bad("bad magic (not a checkpoint file)".into()));
    }
    let mut version = [0u8; 4];
    file.read_exact(&mut version).map_err(io_err)?;
    let version = u32::from_le_bytes(version);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let mut tag = [0u8; 8];
    file.read_exact(&mut tag).map_err(io_err)?;
    let tag_str = std::str::from_utf8(&tag)
        .map_err(|_| bad("architecture tag is not UTF-8".into()))?
        .trim()
        .to_string();
    let arch = Architecture::parse(&tag_str).map_err(|e| bad(e.to_string()))?;
    let mut len = [0u8; 8];
    file.read_exact(&mut len).map_err(io_err)?;
    let manifest_len = u64::from_le_bytes(len) as usize;
    let mut manifest_bytes = vec![0u8; manifest_len];
    file.read_exact(&mut manifest_bytes).map_err(io_err)?;
    let manifest =
        String::from_utf8(manifest_bytes).map_err(|_| bad("manifest is not UTF-8".into()))?;

    let mut fields: BTreeMap<String, String> = BTreeMap::new();
    let mut tensors: Vec<(String, usize, usize)> = Vec::new();
    let mut train_lines: Vec<String> = Vec::new();
    for line in manifest.lines() {
        if let Some(rest) = line.strip_prefix("tensor ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad(format!("malformed tensor line '{line}'")));
            }
            let rows = parts[1].parse().map_err(|_| bad(format!("bad rows in '{line}'")))?;
            let cols = parts[2].parse().map_err(|_| bad(format!("bad cols in '{line}'")))?;
            tensors.push((parts[0].to_string(), rows, cols));
        } else if let Some(rest) = line.strip_prefix("train.") {
            train_lines.push(rest.to_string());
        } else if let Some((k, v)) = line.split_once('=') {
            fields.insert(k.to_string(), v.to_string());
        }
    }
    let get_field = |name: &str| -> Result<&String, CliError> {
        fields
            .get(name)
            .ok_or_else(|| bad(format!("manifest missing '{name}'")))
    };
    let vocab_size: usize = get_field("vocab_size")?
        .parse()
        .map_err(|_| bad("bad vocab_size".into()))?;
    let seed: u64 = get_field("seed")?.parse().map_err(|_| bad("bad seed".into()))?;
    let epochs_trained: usize = get_field("epochs_trained")?
        .parse()
        .map_err(|_| bad("bad epochs_trained".into()))?;
    if fields.get("arch").map(String::as_str) != Some(arch.tag()) {
        return Err(bad("manifest architecture disagrees with header tag".into()));
    }

    let mut model_config = ModelConfig::default();
    let mut lambdas = DktPlusConfig::ZERO;
    let hyper = |fields: &BTreeMap<String, String>, name: &str| -> Option<String> {
        fields.get(&format!("hyper.{name}")).cloned()
    };
    let parse_hyper = |raw: Option<String>, into: &mut usize| -> Result<(), CliError> {
        if let Some(raw) = raw {
            *into = raw.parse().map_err(|_| bad(format!("bad hyper value '{raw}'")))?;
        }
        Ok(())
    };
    parse_hyper(hyper(&fields, "dkt_hidden"), &mut model_config.dkt_hidden)?;
    parse_hyper(hyper(&fields, "dkvmn_slots"), &mut model_config.dkvmn_slots)?;
    parse_hyper(hyper(&fields, "dkvmn_key_dim"), &mut model_config.dkvmn_key_dim)?;
    parse_hyper(hyper(&fields, "dkvmn_value_dim"), &mut model_config.dkvmn_value_dim)?;
    parse_hyper(hyper(&fields, "sakt_dim"), &mut model_config.sakt_dim)?;
    parse_hyper(hyper(&fields, "sakt_heads"), &mut model_config.sakt_heads)?;
    parse_hyper(hyper(&fields, "sakt_max_len"), &mut model_config.sakt_max_len)?;
    parse_hyper(hyper(&fields, "kqn_dim"), &mut model_config.kqn_dim)?;
    for (name, slot) in [
        ("lambda_r", &mut lambdas.lambda_r),
        ("lambda_w1", &mut lambdas.lambda_w1),
        ("lambda_w2", &mut lambdas.lambda_w2),
    ] {
        if let Some(raw) = hyper(&fields, name) {
            *slot = raw.parse().map_err(|_| bad(format!("bad hyper value '{raw}'")))?;
        }
    }
    model_config.dkt_plus = lambdas;

    let mut model = KtModel::build(arch, vocab_size, &model_config, seed)
        .map_err(|e| bad(e.to_string()))?;
    for (name, rows, cols) in &tensors {
        let mut data = vec![0f64; rows * cols];
        let mut buf = [0u8; 8];
        for v in data.iter_mut() {
            file.read_exact(&mut buf).map_err(io_err)?;
            *v = f64::from_le_bytes(buf);
        }
        let params = model.params_mut();
        let id = params
            .id_by_name(name)
            .ok_or_else(|| bad(format!("unknown tensor '{name}' for {tag_str}")))?;
        let slot = params.value_mut(id);
        if slot.shape() != (*rows, *cols) {
            return Err(bad(format!(
                "tensor '{name}' shape {rows}x{cols} does not match expected {}x{}",
                slot.shape().0,
                slot.shape().1
            )));
        }
        *slot = Matrix::from_vec(*rows, *cols, data).map_err(|e| bad(e.to_string()))?;
    }

    Ok(Checkpoint {
        model,
        vocab_size,
        seed,
        epochs_trained,
        train_snapshot: train_lines.join("\n"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use kt_core::models::EncodedWindow;

    fn sample_window() -> EncodedWindow {
        EncodedWindow::new(vec![1, 3, 2, 4, 1], vec![1, 0, 1, 1, 0], vec![true; 5]).unwrap()
    }

    #[test]
    fn roundtrip_is_bit_identical_for_all_architectures() {
        let dir = tempfile::tempdir().unwrap();
        let window = sample_window();
        for arch in Architecture::ALL {
            let model = KtModel::build(
                arch,
                5,
                &ModelConfig {
                    dkt_hidden: 6,
                    dkvmn_slots: 3,
                    dkvmn_key_dim: 4,
                    dkvmn_value_dim: 4,
                    sakt_dim: 8,
                    sakt_heads: 2,
                    sakt_max_len: 16,
                    kqn_dim: 4,
                    ..ModelConfig::default()
                },
                77,
            )
            .unwrap();
            let before = model.predict(&window).unwrap();
            let path = dir.path().join(format!("{}.ktc", arch.tag().replace('+', "p")));
            save(
                &Checkpoint {
                    model,
                    vocab_size: 5,
                    seed: 77,
                    epochs_trained: 0,
                    train_snapshot: "batch_size = 256\nepochs = 0".into(),
                },
                &path,
            )
            .unwrap();
            let loaded = load(&path).unwrap();
            assert_eq!(loaded.vocab_size, 5);
            assert_eq!(loaded.model.architecture(), arch);
            let after = loaded.model.predict(&window).unwrap();
            for (a, b) in before.step_probs.iter().zip(&after.step_probs) {
                assert_eq!(a.to_bits(), b.to_bits(), "{arch:?}");
            }
        }
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ktc");
        std::fs::write(&path, b"NOTACKPT0000000000000000").unwrap();
        let err = load(&path).unwrap_err();
        assert!(err.to_string().contains("bad magic"));
    }
}
