use std::path::Path;

use kt_core::synth::{
    generate, ground_truth_to_csv, metadata_to_csv, records_to_csv, summarize_generated,
};

use crate::config::{read_synth_config, render_synth_config, ConfigFile};
use crate::dataio::write_file;
use crate::{ensure_dir, CliError};

/// Generates a corpus and writes records, metadata, ground truth, the
/// statistics table and the resolved configuration.
pub fn run(
    config_path: Option<&Path>,
    preset: Option<&str>,
    seed: Option<u64>,
    out: &Path,
) -> Result<(), CliError> {
    let file = match config_path {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    file.reject_unknown_sections(&["synth"])?;
    let mut config = read_synth_config(&file, preset)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let corpus = generate(&config)?;
    ensure_dir(out)?;
    write_file(&out.join("records.csv"), &records_to_csv(&corpus.records))?;
    write_file(
        &out.join("metadata.csv"),
        &metadata_to_csv(&corpus.records, &corpus.metadata),
    )?;
    write_file(
        &out.join("ground_truth.csv"),
        &ground_truth_to_csv(&corpus.ground_truth),
    )?;
    let stats = summarize_generated(&corpus.records, &corpus.ground_truth);
    write_file(&out.join("stats.txt"), &stats.render("synthetic"))?;
    write_file(&out.join("resolved.conf"), &render_synth_config(&config))?;
    println!(
        "synth: {} records ({} students, {} skills) -> {}",
        corpus.records.len(),
        corpus.ground_truth.per_student_counts.len(),
        config.n_skills,
        out.display()
    );
    Ok(())
}
