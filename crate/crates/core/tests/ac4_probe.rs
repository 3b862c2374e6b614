//! Dev probe: learnability headroom on the default corpus (temporary).

use kt_core::data::prepare_split;
use kt_core::metrics::{auc, AucOutcome, ScoredPrediction};
use kt_core::models::{Architecture, KtModel, ModelConfig};
use kt_core::synth::{default_corpus_config, generate, GeneratedCorpus};
use kt_core::train::{train, TrainConfig};

fn bayes_scores(corpus: &GeneratedCorpus, boundary: i32, max_len: usize) -> Vec<ScoredPrediction> {
    use std::collections::HashMap;
    // per-student clean record years in order
    let mut years: HashMap<&str, Vec<i32>> = HashMap::new();
    for r in corpus.records.iter().filter(|r| !r.grade.is_ungradable()) {
        years.entry(r.universal_id.as_str()).or_default().push(r.academic_year);
    }
    let mut rows_by_student: HashMap<&str, Vec<&kt_core::synth::GtRow>> = HashMap::new();
    for row in &corpus.ground_truth.rows {
        rows_by_student.entry(row.universal_id.as_str()).or_default().push(row);
    }
    let mut out = Vec::new();
    for (student, rows) in rows_by_student {
        let ys = &years[student];
        // stable sort by year mirrors the pipeline ordering
        let mut indexed: Vec<usize> = (0..rows.len()).collect();
        indexed.sort_by_key(|&i| ys[i]);
        let test_rows: Vec<&kt_core::synth::GtRow> = indexed
            .iter()
            .filter(|&&i| ys[i] >= boundary)
            .map(|&i| rows[i])
            .collect();
        for chunk in test_rows.chunks(max_len) {
            for (t, row) in chunk.iter().enumerate() {
                if t == 0 {
                    continue;
                }
                out.push(ScoredPrediction {
                    probability: row.probability,
                    label: row.correct,
                    universal_id: student.to_string(),
                    step: t,
                    skill_id: 1,
                });
            }
        }
    }
    out
}

#[test]
#[ignore]
fn probe_all_architectures() {
    let corpus = generate(&default_corpus_config()).unwrap();
    let prepared = prepare_split(corpus.records.clone(), 2023).unwrap();
    let q = prepared.split.vocabulary.len();
    for (arch, lr, epochs) in [
        (Architecture::Dkt, 0.01, 6usize),
        (Architecture::DktPlus, 0.01, 6),
        (Architecture::Dkvmn, 0.01, 6),
        (Architecture::Sakt, 0.01, 6),
        (Architecture::Kqn, 0.01, 6),
    ] {
        let started = std::time::Instant::now();
        let mut model = KtModel::build(arch, q, &ModelConfig::default(), 4242).unwrap();
        let config = TrainConfig {
            epochs,
            batch_size: 64,
            learning_rate: lr,
            seed: 4242,
            log_val_auc: false,
            ..TrainConfig::default()
        };
        let history = train(&mut model, &prepared.split, &config).unwrap();
        let scored = kt_core::metrics::score_test_split(&model, &prepared.split, 100).unwrap();
        let auc_v = match auc(&scored) {
            AucOutcome::Value(v) => v,
            AucOutcome::Undefined { .. } => f64::NAN,
        };
        println!(
            "{}: auc {:.4} loss {:.4} in {:.0}s",
            arch.tag(),
            auc_v,
            history.final_loss().unwrap(),
            started.elapsed().as_secs_f64()
        );
    }
}

#[test]
#[ignore]
fn probe_waviness_and_shuffle() {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let corpus = generate(&default_corpus_config()).unwrap();
    let prepared = prepare_split(corpus.records.clone(), 2023).unwrap();
    let q = prepared.split.vocabulary.len();
    let config = TrainConfig {
        epochs: 6,
        batch_size: 64,
        learning_rate: 0.01,
        seed: 4242,
        ..TrainConfig::default()
    };
    let waviness = |model: &KtModel| -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for seq in &prepared.split.test {
            for piece in kt_core::data::window(seq, 100).unwrap() {
                if !piece.usable_for_next_step() {
                    continue;
                }
                let w = kt_core::models::EncodedWindow::from_sequence(&piece);
                if let Some(v) = model.predict(&w).unwrap().waviness_w1() {
                    total += v;
                    count += 1;
                }
            }
        }
        total / count as f64
    };
    let mut dkt = KtModel::build(Architecture::Dkt, q, &ModelConfig::default(), 4242).unwrap();
    train(&mut dkt, &prepared.split, &config).unwrap();
    let mut dktp = KtModel::build(Architecture::DktPlus, q, &ModelConfig::default(), 4242).unwrap();
    train(&mut dktp, &prepared.split, &config).unwrap();
    println!("waviness DKT = {:.6}, DKT+ = {:.6}", waviness(&dkt), waviness(&dktp));

    // label-shuffled control
    let mut shuffled = prepared.split.clone();
    let mut all_labels: Vec<u8> = shuffled
        .train
        .iter()
        .flat_map(|s| s.interactions.iter().map(|i| i.correct))
        .collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(777);
    all_labels.shuffle(&mut rng);
    let mut cursor = 0;
    for s in &mut shuffled.train {
        for i in &mut s.interactions {
            i.correct = all_labels[cursor];
            cursor += 1;
        }
    }
    let mut control = KtModel::build(Architecture::Dkt, q, &ModelConfig::default(), 4242).unwrap();
    train(&mut control, &shuffled, &config).unwrap();
    let scored = kt_core::metrics::score_test_split(&control, &prepared.split, 100).unwrap();
    match auc(&scored) {
        AucOutcome::Value(v) => println!("shuffled-control AUC = {v:.4}"),
        AucOutcome::Undefined { .. } => println!("control undefined"),
    }
}

#[test]
#[ignore]
fn probe_learnability() {
    let corpus = generate(&default_corpus_config()).unwrap();
    let clean_total = corpus.ground_truth.rows.len();
    let prepared = prepare_split(corpus.records.clone(), 2023).unwrap();
    println!(
        "corpus: clean={} train={} test={} students(train)={} students(test)={}",
        clean_total,
        prepared.split.train_interactions(),
        prepared.split.test_interactions(),
        prepared.split.train.len(),
        prepared.split.test.len()
    );
    let bayes = bayes_scores(&corpus, 2023, 100);
    println!("bayes targets: {}", bayes.len());
    match auc(&bayes) {
        AucOutcome::Value(v) => println!("BAYES AUC = {v:.4}"),
        AucOutcome::Undefined { .. } => println!("bayes undefined"),
    }

    let mut model = KtModel::build(
        Architecture::Dkt,
        prepared.split.vocabulary.len(),
        &ModelConfig::default(),
        4242,
    )
    .unwrap();
    let config = TrainConfig {
        epochs: 10,
        batch_size: 64,
        learning_rate: 0.01,
        seed: 4242,
        log_val_auc: true,
        ..TrainConfig::default()
    };
    let started = std::time::Instant::now();
    let history = train(&mut model, &prepared.split, &config).unwrap();
    for e in &history.epochs {
        println!(
            "epoch {}: loss {:.4} auc {:?} ({:.1}s)",
            e.epoch, e.loss, e.val_auc, e.seconds
        );
    }
    println!("total {:.1}s", started.elapsed().as_secs_f64());
}
