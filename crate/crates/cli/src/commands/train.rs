use std::path::PathBuf;

use kt_core::models::{Architecture, KtModel};
use kt_core::train::train;

use crate::checkpoint::{save, Checkpoint};
use crate::config::{
    read_model_config, read_train_config, render_model_config, render_train_config, ConfigFile,
};
use crate::dataio::{load_prepared, write_file};
use crate::{ensure_dir, CliError};

pub struct Args {
    pub arch: String,
    pub data: PathBuf,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub out: PathBuf,
}

/// Trains one architecture on a prepared data directory and writes the
/// checkpoint, history CSV and resolved configuration.
pub fn run(args: Args) -> Result<(), CliError> {
    let arch = Architecture::parse(&args.arch)?;
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    file.reject_unknown_sections(&["train", "model"])?;
    let mut train_config = read_train_config(&file)?;
    let model_config = read_model_config(&file)?;
    if let Some(seed) = args.seed {
        train_config.seed = seed;
    }
    if let Some(epochs) = args.epochs {
        train_config.epochs = epochs;
    }
    if let Some(batch) = args.batch_size {
        train_config.batch_size = batch;
    }
    if let Some(lr) = args.learning_rate {
        train_config.learning_rate = lr;
    }

    let (split, _) = load_prepared(&args.data)?;
    let vocab_size = split.vocabulary.len();
    let mut model = KtModel::build(arch, vocab_size, &model_config, train_config.seed)?;
    let history = train(&mut model, &split, &train_config)?;
    if history.skipped_windows > 0 {
        eprintln!(
            "train: skipped {} single-interaction windows (no next-step target)",
            history.skipped_windows
        );
    }

    ensure_dir(&args.out)?;
    let train_snapshot = render_train_config(&train_config);
    save(
        &Checkpoint {
            model,
            vocab_size,
            seed: train_config.seed,
            epochs_trained: train_config.epochs,
            train_snapshot: train_snapshot.clone(),
        },
        &args.out.join("checkpoint.ktc"),
    )?;
    write_file(&args.out.join("history.csv"), &history.to_csv())?;
    let resolved = format!(
        "{}{}[data]\ndir = {}\nvocab_size = {vocab_size}\nskipped_windows = {}\n",
        train_snapshot,
        render_model_config(arch, &model_config),
        args.data.display(),
        history.skipped_windows,
    );
    write_file(&args.out.join("resolved.conf"), &resolved)?;

    match history.final_loss() {
        Some(loss) => println!(
            "train: {} for {} epochs, final loss {loss:.6} -> {}",
            arch.tag(),
            train_config.epochs,
            args.out.display()
        ),
        None => println!(
            "train: {} for 0 epochs (initialized checkpoint) -> {}",
            arch.tag(),
            args.out.display()
        ),
    }
    Ok(())
}
