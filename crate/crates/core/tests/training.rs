//! End-to-end training behavior on small synthetic corpora:
//! determinism, shuffle independence, and actual learning.

use kt_core::data::prepare_split;
use kt_core::models::{Architecture, KtModel, ModelConfig};
use kt_core::synth::{generate, SynthConfig};
use kt_core::train::{train, Optimizer, TrainConfig};

fn small_corpus(seed: u64) -> kt_core::data::DatasetSplit {
    let config = SynthConfig {
        n_students: 120,
        n_skills: 8,
        records_per_student: (10, 24),
        seed,
        clean_noise: 0.0,
        n_courses: None,
        ..kt_core::synth::default_corpus_config()
    };
    let corpus = generate(&config).unwrap();
    prepare_split(corpus.records, 2023).unwrap().split
}

fn small_model_config() -> ModelConfig {
    ModelConfig {
        dkt_hidden: 12,
        dkvmn_slots: 6,
        dkvmn_key_dim: 8,
        dkvmn_value_dim: 8,
        sakt_dim: 8,
        sakt_heads: 2,
        kqn_dim: 8,
        ..ModelConfig::default()
    }
}

fn param_bits(model: &KtModel) -> Vec<u64> {
    let params = model.params();
    params
        .ids()
        .flat_map(|id| params.value(id).data().iter().map(|v| v.to_bits()).collect::<Vec<_>>())
        .collect()
}

#[test]
fn zero_epochs_returns_model_unchanged() {
    let split = small_corpus(3);
    let mut model = KtModel::build(Architecture::Dkt, split.vocabulary.len(), &small_model_config(), 7).unwrap();
    let before = param_bits(&model);
    let config = TrainConfig {
        epochs: 0,
        ..TrainConfig::default()
    };
    let history = train(&mut model, &split, &config).unwrap();
    assert!(history.epochs.is_empty());
    assert_eq!(param_bits(&model), before);
}

#[test]
fn same_seed_trains_bit_identically() {
    let split = small_corpus(5);
    let config = TrainConfig {
        epochs: 2,
        batch_size: 16,
        learning_rate: 0.01,
        seed: 99,
        ..TrainConfig::default()
    };
    let run = || {
        let mut model =
            KtModel::build(Architecture::Dkvmn, split.vocabulary.len(), &small_model_config(), 11).unwrap();
        let history = train(&mut model, &split, &config).unwrap();
        (param_bits(&model), history.epochs.iter().map(|e| e.loss.to_bits()).collect::<Vec<_>>())
    };
    let (pa, la) = run();
    let (pb, lb) = run();
    assert_eq!(pa, pb);
    assert_eq!(la, lb);
}

#[test]
fn full_batch_update_is_shuffle_independent() {
    let split = small_corpus(8);
    let make = |seed: u64| {
        let mut model =
            KtModel::build(Architecture::Kqn, split.vocabulary.len(), &small_model_config(), 2).unwrap();
        let config = TrainConfig {
            epochs: 1,
            batch_size: 100_000, // larger than the dataset
            seed,
            ..TrainConfig::default()
        };
        train(&mut model, &split, &config).unwrap();
        param_bits(&model)
    };
    assert_eq!(make(1), make(12345));
}

#[test]
fn dkt_loss_drops_at_least_ten_percent() {
    let split = small_corpus(13);
    let mut model =
        KtModel::build(Architecture::Dkt, split.vocabulary.len(), &small_model_config(), 29).unwrap();
    let config = TrainConfig {
        epochs: 25,
        batch_size: 32,
        learning_rate: 0.01,
        seed: 4,
        ..TrainConfig::default()
    };
    let history = train(&mut model, &split, &config).unwrap();
    let first = history.epochs.first().unwrap().loss;
    let last = history.epochs.last().unwrap().loss;
    assert!(
        last < first * 0.9,
        "insufficient improvement: {first} -> {last}"
    );
}

#[test]
fn sgd_also_trains() {
    let split = small_corpus(17);
    let mut model =
        KtModel::build(Architecture::Dkt, split.vocabulary.len(), &small_model_config(), 31).unwrap();
    let config = TrainConfig {
        epochs: 8,
        batch_size: 32,
        learning_rate: 0.5,
        optimizer: Optimizer::Sgd,
        seed: 4,
        ..TrainConfig::default()
    };
    let history = train(&mut model, &split, &config).unwrap();
    let first = history.epochs.first().unwrap().loss;
    let last = history.epochs.last().unwrap().loss;
    assert!(last < first, "SGD did not reduce loss: {first} -> {last}");
}

#[test]
fn history_csv_has_contiguous_epochs() {
    let split = small_corpus(23);
    let mut model =
        KtModel::build(Architecture::Sakt, split.vocabulary.len(), &small_model_config(), 5).unwrap();
    let config = TrainConfig {
        epochs: 3,
        batch_size: 64,
        log_val_auc: true,
        ..TrainConfig::default()
    };
    let history = train(&mut model, &split, &config).unwrap();
    let epochs: Vec<usize> = history.epochs.iter().map(|e| e.epoch).collect();
    assert_eq!(epochs, vec![1, 2, 3]);
    assert!(history.epochs.iter().all(|e| e.loss.is_finite()));
    assert!(history.epochs.iter().all(|e| e.val_auc.is_some()));
    let csv = history.to_csv();
    assert!(csv.starts_with("epoch,loss,val_auc,seconds\n"));
    assert_eq!(csv.lines().count(), 4);
}
