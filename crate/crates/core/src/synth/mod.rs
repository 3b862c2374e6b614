//! Seeded generator of institution-shaped synthetic corpora. Outcomes
//! follow a two-parameter response model with a practice effect, so the
//! corpora carry real temporal signal and a computable Bayes-optimal
//! score for every record.

mod presets;

pub use presets::{coe_shape_config, default_corpus_config, univ_shape_config, COE_DEPARTMENTS};

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::{DatasetStatistics, Grade, RawRecord, StudentMetadata};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error("pass-rate calibration failed: target {target}, achieved {achieved}")]
    Calibration { target: f64, achieved: f64 },
}

/// One department's share of the student population.
#[derive(Debug, Clone)]
pub struct DepartmentShare {
    pub code: String,
    pub college: String,
    pub weight: f64,
}

/// Everything that determines a generated corpus. Identical configs
/// (including seed) produce bit-identical output.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_students: usize,
    pub n_skills: usize,
    /// Records per student drawn uniformly from this inclusive range.
    pub records_per_student: (usize, usize),
    /// When set, per-student counts are adjusted so the corpus has
    /// exactly this many records.
    pub total_records: Option<usize>,
    pub years: Vec<i32>,
    pub target_pass_rate: f64,
    pub difficulty_spread: f64,
    pub ability_spread: f64,
    pub learning_rate_gain: f64,
    pub department_mix: Vec<DepartmentShare>,
    /// Fraction of records emitted with an I/NG grade.
    pub clean_noise: f64,
    pub seed: u64,
    /// Explicit (subject, level) catalog; generated when absent.
    pub catalog: Option<Vec<(String, u32)>>,
    /// Distinct course numbers spread over the skills (bookkeeping for
    /// the statistics table); defaults to one course per skill.
    pub n_courses: Option<usize>,
    /// Per-year probability that a student's enrollment starts there.
    pub year_start_weights: Option<Vec<f64>>,
    /// Weight of enrollment duration d+1 years (truncated at the last
    /// year); students span their whole enrollment window when absent.
    pub duration_weights: Option<Vec<f64>>,
    /// Skill popularity skew; 0 = uniform.
    pub skill_skew: f64,
    /// When set, per-student record counts scale with enrollment length,
    /// modelling a constant yearly course load.
    pub records_scale_with_duration: bool,
    /// This many catalog-tail skills only occur in the final year (new
    /// courses), so they are reachable in the test split alone.
    pub skills_introduced_final_year: usize,
}

/// Bayes-side record of one emitted gradable interaction.
#[derive(Debug, Clone)]
pub struct GtRow {
    pub universal_id: String,
    /// Ordinal among the student's gradable records, 0-based.
    pub step: usize,
    pub probability: f64,
    pub correct: u8,
}

/// Generator bookkeeping: the latent parameters behind the corpus plus
/// exact counters used by oracle tests and the statistics table.
#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    /// theta per (student, skill cluster); clusters are course subjects.
    pub abilities: HashMap<(String, String), f64>,
    /// Per-skill difficulty, indexed by catalog position (skill_id - 1).
    pub difficulties: Vec<f64>,
    /// Per-skill discrimination, all positive.
    pub discriminations: Vec<f64>,
    /// Calibrated global intercept.
    pub intercept: f64,
    pub rows: Vec<GtRow>,
    pub distinct_courses: usize,
    pub total_records: usize,
    pub dirty_records: usize,
    pub per_student_counts: HashMap<String, usize>,
    pub per_skill_counts: Vec<usize>,
    /// Students assigned to each department code.
    pub department_counts: HashMap<String, usize>,
}

pub struct GeneratedCorpus {
    pub records: Vec<RawRecord>,
    pub metadata: StudentMetadata,
    pub ground_truth: GroundTruth,
}

fn validate(config: &SynthConfig) -> Result<(), SynthError> {
    let fail = |msg: String| Err(SynthError::InvalidConfig(msg));
    if config.n_skills < 2 {
        return fail(format!("n_skills must be >= 2, got {}", config.n_skills));
    }
    if config.years.is_empty() {
        return fail("years must be non-empty".into());
    }
    for w in config.years.windows(2) {
        if w[1] != w[0] + 1 {
            return fail(format!("years must be consecutive, got {:?}", config.years));
        }
    }
    if !(config.target_pass_rate > 0.0 && config.target_pass_rate < 1.0) {
        return fail(format!(
            "target_pass_rate must be in (0,1), got {}",
            config.target_pass_rate
        ));
    }
    let wsum: f64 = config.department_mix.iter().map(|d| d.weight).sum();
    if config.department_mix.is_empty() || (wsum - 1.0).abs() > 1e-9 {
        return fail(format!("department weights must sum to 1, got {wsum}"));
    }
    if config.records_per_student.0 == 0 || config.records_per_student.0 > config.records_per_student.1 {
        return fail(format!(
            "records_per_student range invalid: {:?}",
            config.records_per_student
        ));
    }
    if !(0.0..1.0).contains(&config.clean_noise) {
        return fail(format!("clean_noise must be in [0,1), got {}", config.clean_noise));
    }
    if config.difficulty_spread < 0.0 || config.ability_spread < 0.0 || config.learning_rate_gain < 0.0 {
        return fail("spreads and learning gain must be non-negative".into());
    }
    if let Some(cat) = &config.catalog {
        if cat.len() != config.n_skills {
            return fail(format!(
                "catalog has {} pairs but n_skills is {}",
                cat.len(),
                config.n_skills
            ));
        }
    }
    if let Some(nc) = config.n_courses {
        if nc < config.n_skills {
            return fail(format!(
                "n_courses {} must be >= n_skills {}",
                nc,
                config.n_skills
            ));
        }
    }
    Ok(())
}

/// Default catalog: plausible 4-character subjects crossed with course
/// levels, truncated to `n_skills` pairs, in ascending order.
fn generated_catalog(n_skills: usize) -> Vec<(String, u32)> {
    const SUBJECTS: [&str; 20] = [
        "ARCH", "BIOL", "CHEG", "CHEM", "CIVE", "COMP", "CVEG", "ELEG", "ENGL", "GEOL", "HIST",
        "KINE", "MATH", "MCEG", "MUSC", "PHIL", "PHYS", "PSYC", "SOCG", "STAT",
    ];
    let mut pairs = Vec::with_capacity(n_skills);
    'outer: for level in [1000u32, 2000, 3000, 4000, 5000] {
        for subject in SUBJECTS {
            pairs.push((subject.to_string(), level));
            if pairs.len() == n_skills {
                break 'outer;
            }
        }
    }
    if pairs.len() < n_skills {
        // more pairs than the base grid: extend with synthetic subjects
        let mut i = 0;
        while pairs.len() < n_skills {
            let code = format!("Z{}{}A", (b'A' + (i / 26) as u8) as char, (b'A' + (i % 26) as u8) as char);
            pairs.push((code, 1000));
            i += 1;
        }
    }
    pairs.sort();
    pairs
}

struct DraftRecord {
    student: usize,
    year: i32,
    skill: usize,
    course: usize,
    dirty: bool,
}

/// Generates a corpus: records CSV rows, per-student metadata and the
/// generator's ground truth. Identical seeds give identical corpora.
pub fn generate(config: &SynthConfig) -> Result<GeneratedCorpus, SynthError> {
    validate(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let catalog = match &config.catalog {
        Some(c) => {
            let mut c = c.clone();
            c.sort();
            c
        }
        None => generated_catalog(config.n_skills),
    };
    let n_skills = catalog.len();

    // course numbers per skill (bookkeeping only; the schema carries the
    // binned level, never the course number)
    let n_courses = config.n_courses.unwrap_or(n_skills).max(n_skills);
    let mut courses_per_skill = vec![n_courses / n_skills; n_skills];
    for slot in courses_per_skill.iter_mut().take(n_courses % n_skills) {
        *slot += 1;
    }
    let course_offset: Vec<usize> = courses_per_skill
        .iter()
        .scan(0usize, |acc, &c| {
            let start = *acc;
            *acc += c;
            Some(start)
        })
        .collect();

    // latent skill parameters
    let difficulties: Vec<f64> = (0..n_skills)
        .map(|_| gaussian(&mut rng) * config.difficulty_spread)
        .collect();
    let discriminations: Vec<f64> = (0..n_skills).map(|_| rng.gen_range(0.75..1.25)).collect();

    // skill popularity
    let weights: Vec<f64> = if config.skill_skew == 0.0 {
        vec![1.0; n_skills]
    } else {
        let mut ranks: Vec<usize> = (0..n_skills).collect();
        ranks.shuffle(&mut rng);
        ranks
            .iter()
            .map(|&r| 1.0 / ((r + 1) as f64).powf(config.skill_skew))
            .collect()
    };
    let cumulative = cumulative_weights(&weights);

    // students: ids, departments, record counts, enrollment windows
    let student_ids: Vec<String> = (0..config.n_students)
        .map(|i| (1_000_000 + i as u64).to_string())
        .collect();
    let dept_cum = cumulative_weights(
        &config
            .department_mix
            .iter()
            .map(|d| d.weight)
            .collect::<Vec<_>>(),
    );
    let mut metadata = StudentMetadata::new();
    let mut department_counts: HashMap<String, usize> = HashMap::new();
    let mut student_dept: Vec<usize> = Vec::with_capacity(config.n_students);
    for id in &student_ids {
        let d = sample_cumulative(&dept_cum, &mut rng);
        let share = &config.department_mix[d];
        metadata
            .insert(id.clone(), share.college.clone(), share.code.clone())
            .expect("generated ids are unique");
        *department_counts.entry(share.code.clone()).or_insert(0) += 1;
        student_dept.push(d);
    }

    let n_years = config.years.len();
    let final_year = *config.years.last().expect("years non-empty");
    let introduced_from = n_skills.saturating_sub(config.skills_introduced_final_year.min(n_skills));
    let is_introduced = |skill: usize| skill >= introduced_from;

    let start_cum = cumulative_weights(
        &config
            .year_start_weights
            .clone()
            .unwrap_or_else(|| vec![1.0; n_years]),
    );
    let enrollment: Vec<(usize, usize)> = (0..config.n_students)
        .map(|_| {
            let start = sample_cumulative(&start_cum, &mut rng);
            let span_limit = n_years - start;
            let duration = match &config.duration_weights {
                None => span_limit,
                Some(w) => {
                    let w: Vec<f64> = w.iter().take(span_limit).cloned().collect();
                    let cum = cumulative_weights(&w);
                    sample_cumulative(&cum, &mut rng) + 1
                }
            };
            (start, duration)
        })
        .collect();

    let (lo, hi) = config.records_per_student;
    let mut counts: Vec<usize> = enrollment
        .iter()
        .map(|&(_, duration)| {
            let base = rng.gen_range(lo..=hi);
            if config.records_scale_with_duration {
                ((base as f64 * duration as f64 / n_years as f64).round() as usize).max(1)
            } else {
                base
            }
        })
        .collect();
    if let Some(total) = config.total_records {
        adjust_counts(&mut counts, total, &mut rng);
    }

    // draft the record structure (who, when, which skill/course)
    let mut drafts: Vec<DraftRecord> = Vec::new();
    for (s, &count) in counts.iter().enumerate() {
        let (start, duration) = enrollment[s];
        let mut years: Vec<i32> = (0..count)
            .map(|_| config.years[start + rng.gen_range(0..duration)])
            .collect();
        years.sort_unstable();
        for year in years {
            let skill = loop {
                let k = sample_cumulative(&cumulative, &mut rng);
                // skills introduced in the final year never occur earlier
                if year == final_year || !is_introduced(k) {
                    break k;
                }
            };
            let course = course_offset[skill] + rng.gen_range(0..courses_per_skill[skill]);
            drafts.push(DraftRecord {
                student: s,
                year,
                skill,
                course,
                dirty: false,
            });
        }
    }
    let total = drafts.len();

    // cover every course (and thereby every skill) by overriding
    // redundant rows from the tail
    let mut course_seen = vec![0usize; n_courses];
    for d in &drafts {
        course_seen[d.course] += 1;
    }
    let course_skill: Vec<usize> = {
        let mut v = vec![0usize; n_courses];
        for (k, (&off, &cnt)) in course_offset.iter().zip(&courses_per_skill).enumerate() {
            for slot in v.iter_mut().skip(off).take(cnt) {
                *slot = k;
            }
        }
        v
    };
    if !drafts.is_empty() {
        let mut cursor = drafts.len();
        'courses: for c in 0..n_courses {
            if course_seen[c] > 0 {
                continue;
            }
            // walk backwards for a row whose course stays covered without
            // it; final-year-only skills may only claim final-year rows
            let needs_final_year = is_introduced(course_skill[c]);
            let mut scanned = 0;
            loop {
                if scanned >= drafts.len() {
                    continue 'courses; // corpus too small to cover this course
                }
                if cursor == 0 {
                    cursor = drafts.len();
                }
                cursor -= 1;
                scanned += 1;
                let old = drafts[cursor].course;
                if course_seen[old] > 1 && (!needs_final_year || drafts[cursor].year == final_year)
                {
                    course_seen[old] -= 1;
                    course_seen[c] += 1;
                    drafts[cursor].course = c;
                    drafts[cursor].skill = course_skill[c];
                    break;
                }
            }
        }
    }

    // dirty selection: never take a course's last clean occurrence
    let n_dirty = ((total as f64) * config.clean_noise).round() as usize;
    let mut clean_left = course_seen.clone();
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng);
    let mut marked = 0usize;
    for idx in order {
        if marked == n_dirty {
            break;
        }
        let c = drafts[idx].course;
        if clean_left[c] >= 2 {
            clean_left[c] -= 1;
            drafts[idx].dirty = true;
            marked += 1;
        }
    }

    // pass probabilities: base logits first, then a global intercept
    // calibrated by bisection so the mean probability hits the target.
    // theta per (student, cluster) mixes a shared aptitude with a
    // cluster offset, so abilities correlate across subjects.
    let cluster_of: Vec<&str> = catalog.iter().map(|(s, _)| s.as_str()).collect();
    let mut aptitude: HashMap<usize, f64> = HashMap::new();
    let mut abilities: HashMap<(String, String), f64> = HashMap::new();
    let mut attempts: HashMap<(usize, &str), usize> = HashMap::new();
    let mut base_logits: Vec<f64> = Vec::with_capacity(total);
    for d in &drafts {
        if d.dirty {
            continue;
        }
        let cluster = cluster_of[d.skill];
        if !aptitude.contains_key(&d.student) {
            let z = gaussian(&mut rng);
            aptitude.insert(d.student, z);
        }
        let key = (student_ids[d.student].clone(), cluster.to_string());
        if !abilities.contains_key(&key) {
            let offset = gaussian(&mut rng);
            let theta = config.ability_spread * (0.8 * aptitude[&d.student] + 0.6 * offset);
            abilities.insert(key.clone(), theta);
        }
        let theta = abilities[&key];
        let prior = attempts.entry((d.student, cluster)).or_insert(0);
        let logit = discriminations[d.skill] * (theta - difficulties[d.skill])
            + config.learning_rate_gain * (*prior as f64);
        *prior += 1;
        base_logits.push(logit);
    }

    let intercept = if base_logits.is_empty() {
        0.0
    } else {
        calibrate_intercept(&base_logits, config.target_pass_rate)?
    };

    // final walk: draw outcomes and emit records in student order
    let mut records: Vec<RawRecord> = Vec::with_capacity(total);
    let mut gt = GroundTruth {
        abilities,
        difficulties,
        discriminations,
        intercept,
        distinct_courses: course_seen.iter().filter(|&&c| c > 0).count(),
        total_records: total,
        dirty_records: marked,
        per_skill_counts: vec![0usize; n_skills],
        department_counts,
        ..Default::default()
    };
    let mut clean_step: Vec<usize> = vec![0; config.n_students];
    let mut base_iter = base_logits.iter();
    for d in &drafts {
        let (subject, level) = &catalog[d.skill];
        let id = &student_ids[d.student];
        *gt.per_student_counts.entry(id.clone()).or_insert(0) += 1;
        let grade = if d.dirty {
            if rng.gen_bool(0.5) {
                Grade::I
            } else {
                Grade::Ng
            }
        } else {
            gt.per_skill_counts[d.skill] += 1;
            let p = crate::math::sigmoid(base_iter.next().expect("logit per clean row") + intercept);
            let pass = rng.gen_bool(p);
            gt.rows.push(GtRow {
                universal_id: id.clone(),
                step: clean_step[d.student],
                probability: p,
                correct: pass as u8,
            });
            clean_step[d.student] += 1;
            sample_grade(pass, &mut rng)
        };
        records.push(RawRecord {
            academic_year: d.year,
            universal_id: id.clone(),
            course_subject: subject.clone(),
            course_level: *level,
            grade,
        });
    }

    Ok(GeneratedCorpus {
        records,
        metadata,
        ground_truth: gt,
    })
}

/// Statistics table for a generated corpus, with the course row filled
/// from generator bookkeeping.
pub fn summarize_generated(records: &[RawRecord], gt: &GroundTruth) -> DatasetStatistics {
    let mut stats = crate::data::summarize(records);
    stats.course_types = Some(gt.distinct_courses);
    stats
}

fn sample_grade(pass: bool, rng: &mut impl Rng) -> Grade {
    let r: f64 = rng.gen();
    if pass {
        match r {
            x if x < 0.35 => Grade::A,
            x if x < 0.70 => Grade::B,
            x if x < 0.95 => Grade::C,
            _ => Grade::Cr,
        }
    } else {
        match r {
            x if x < 0.30 => Grade::D,
            x if x < 0.70 => Grade::F,
            x if x < 0.95 => Grade::W,
            _ => Grade::Nc,
        }
    }
}

/// Box-Muller standard normal from the shared stream.
fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn cumulative_weights(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect()
}

fn sample_cumulative(cumulative: &[f64], rng: &mut impl Rng) -> usize {
    let r: f64 = rng.gen();
    cumulative
        .iter()
        .position(|&c| r < c)
        .unwrap_or(cumulative.len() - 1)
}

fn adjust_counts(counts: &mut [usize], target: usize, rng: &mut impl Rng) {
    let mut sum: usize = counts.iter().sum();
    while sum != target {
        let i = rng.gen_range(0..counts.len());
        if sum < target {
            counts[i] += 1;
            sum += 1;
        } else if counts[i] > 1 {
            counts[i] -= 1;
            sum -= 1;
        }
    }
}

fn calibrate_intercept(base_logits: &[f64], target: f64) -> Result<f64, SynthError> {
    let mean_p = |c: f64| -> f64 {
        base_logits
            .iter()
            .map(|&l| crate::math::sigmoid(l + c))
            .sum::<f64>()
            / base_logits.len() as f64
    };
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_p(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let achieved = mean_p(c);
    if (achieved - target).abs() > 2e-3 {
        return Err(SynthError::Calibration { target, achieved });
    }
    Ok(c)
}

/// Renders records in the pipeline's input CSV format.
pub fn records_to_csv(records: &[RawRecord]) -> String {
    let mut out = String::from("academic_year,universal_id,course_subject,course_level,grade\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.academic_year, r.universal_id, r.course_subject, r.course_level, r.grade
        ));
    }
    out
}

/// Renders metadata in the pipeline's metadata CSV format, sorted by id.
pub fn metadata_to_csv(records: &[RawRecord], metadata: &StudentMetadata) -> String {
    let mut ids: Vec<&str> = records
        .iter()
        .map(|r| r.universal_id.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    ids.sort_unstable();
    let mut out = String::from("universal_id,college,department\n");
    for id in ids {
        if let (Some(college), Some(dept)) = (metadata.college(id), metadata.department(id)) {
            out.push_str(&format!("{id},{college},{dept}\n"));
        }
    }
    out
}

/// Renders ground truth as `(student, step, probability)` rows.
pub fn ground_truth_to_csv(gt: &GroundTruth) -> String {
    let mut out = String::from("universal_id,step,probability\n");
    for row in &gt.rows {
        out.push_str(&format!("{},{},{}\n", row.universal_id, row.step, row.probability));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> SynthConfig {
        SynthConfig {
            n_students: 50,
            n_skills: 8,
            records_per_student: (5, 15),
            total_records: None,
            years: vec![2020, 2021, 2022, 2023],
            target_pass_rate: 0.8,
            difficulty_spread: 1.0,
            ability_spread: 1.0,
            learning_rate_gain: 0.05,
            department_mix: vec![
                DepartmentShare { code: "ECE".into(), college: "COE".into(), weight: 0.5 },
                DepartmentShare { code: "BIOL".into(), college: "COAS".into(), weight: 0.5 },
            ],
            clean_noise: 0.1,
            seed: 7,
            catalog: None,
            n_courses: Some(20),
            year_start_weights: None,
            duration_weights: None,
            skill_skew: 0.3,
            records_scale_with_duration: false,
            skills_introduced_final_year: 0,
        }
    }

    #[test]
    fn homogeneous_config_hits_target_rate() {
        let mut config = tiny_config();
        config.n_students = 4000;
        config.records_per_student = (25, 25);
        config.ability_spread = 0.0;
        config.difficulty_spread = 0.0;
        config.learning_rate_gain = 0.0;
        config.clean_noise = 0.0;
        let corpus = generate(&config).unwrap();
        assert!(corpus.records.len() >= 100_000);
        let passes = corpus
            .ground_truth
            .rows
            .iter()
            .filter(|r| r.correct == 1)
            .count();
        let rate = passes as f64 / corpus.ground_truth.rows.len() as f64;
        assert!((rate - 0.8).abs() < 0.01, "empirical rate {rate}");
        // every probability equals the target exactly in the flat case
        for row in corpus.ground_truth.rows.iter().take(100) {
            assert!((row.probability - 0.8).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_gives_identical_csv() {
        let config = tiny_config();
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(records_to_csv(&a.records), records_to_csv(&b.records));
        assert_eq!(ground_truth_to_csv(&a.ground_truth), ground_truth_to_csv(&b.ground_truth));
        assert_eq!(
            metadata_to_csv(&a.records, &a.metadata),
            metadata_to_csv(&b.records, &b.metadata)
        );
    }

    #[test]
    fn bookkeeping_matches_recount() {
        let corpus = generate(&tiny_config()).unwrap();
        let gt = &corpus.ground_truth;
        assert_eq!(gt.total_records, corpus.records.len());
        let dirty = corpus
            .records
            .iter()
            .filter(|r| r.grade.is_ungradable())
            .count();
        assert_eq!(gt.dirty_records, dirty);
        // per-student recount
        let mut per_student: HashMap<String, usize> = HashMap::new();
        for r in &corpus.records {
            *per_student.entry(r.universal_id.clone()).or_insert(0) += 1;
        }
        assert_eq!(&per_student, &gt.per_student_counts);
        // per-skill recount over clean records only
        let vocab = crate::data::build_vocabulary(&corpus.records);
        let mut per_skill = vec![0usize; vocab.len()];
        for r in corpus.records.iter().filter(|r| !r.grade.is_ungradable()) {
            let id = vocab.skill_id(&r.course_subject, r.course_level).unwrap();
            per_skill[(id - 1) as usize] += 1;
        }
        assert_eq!(per_skill, gt.per_skill_counts);
        // department recount
        let mut dept: HashMap<String, usize> = HashMap::new();
        for id in gt.per_student_counts.keys() {
            *dept
                .entry(corpus.metadata.department(id).unwrap().to_string())
                .or_insert(0) += 1;
        }
        for (code, n) in dept {
            assert_eq!(gt.department_counts[&code], n);
        }
    }

    #[test]
    fn every_skill_is_covered_and_ids_align_with_vocabulary() {
        let corpus = generate(&tiny_config()).unwrap();
        let clean: Vec<_> = corpus
            .records
            .iter()
            .filter(|r| !r.grade.is_ungradable())
            .cloned()
            .collect();
        let vocab = crate::data::build_vocabulary(&clean);
        assert_eq!(vocab.len(), 8);
        assert!(corpus.ground_truth.per_skill_counts.iter().all(|&c| c > 0));
        assert_eq!(
            corpus.ground_truth.distinct_courses,
            20,
            "all courses covered"
        );
    }

    #[test]
    fn calibration_error_when_spreads_saturate() {
        let mut config = tiny_config();
        config.ability_spread = 1e6;
        config.target_pass_rate = 0.99;
        match generate(&config) {
            Err(SynthError::Calibration { target, achieved }) => {
                assert_eq!(target, 0.99);
                assert!(achieved < 0.99);
            }
            other => panic!("expected calibration error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = tiny_config();
        c.n_skills = 1;
        assert!(matches!(generate(&c), Err(SynthError::InvalidConfig(_))));
        let mut c = tiny_config();
        c.years = vec![2020, 2022];
        assert!(matches!(generate(&c), Err(SynthError::InvalidConfig(_))));
        let mut c = tiny_config();
        c.department_mix[0].weight = 0.9;
        assert!(matches!(generate(&c), Err(SynthError::InvalidConfig(_))));
    }

    #[test]
    fn exact_total_record_count() {
        let mut config = tiny_config();
        config.total_records = Some(1234);
        let corpus = generate(&config).unwrap();
        assert_eq!(corpus.records.len(), 1234);
    }

    #[test]
    fn zero_students_gives_empty_corpus() {
        let mut config = tiny_config();
        config.n_students = 0;
        let corpus = generate(&config).unwrap();
        assert!(corpus.records.is_empty());
        let csv = records_to_csv(&corpus.records);
        assert_eq!(csv, "academic_year,universal_id,course_subject,course_level,grade\n");
    }

    #[test]
    fn summarize_generated_matches_counters() {
        let corpus = generate(&tiny_config()).unwrap();
        let stats = summarize_generated(&corpus.records, &corpus.ground_truth);
        assert_eq!(stats.total_records, corpus.ground_truth.total_records);
        assert_eq!(
            stats.records_after_cleaning,
            corpus.ground_truth.total_records - corpus.ground_truth.dirty_records
        );
        assert_eq!(stats.course_types, Some(corpus.ground_truth.distinct_courses));
        assert_eq!(stats.students, corpus.ground_truth.per_student_counts.len());
    }
}
