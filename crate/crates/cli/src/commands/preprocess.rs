use std::path::Path;

use kt_core::data::{parse_records, prepare_split, summarize};

use crate::dataio::{sequences_to_csv, vocabulary_to_csv, write_file};
use crate::{ensure_dir, CliError};

/// Parses, cleans, encodes and splits the record CSV, writing the
/// encoded sequence files, vocabulary, statistics, rejects report and a
/// provenance snapshot.
pub fn run(
    input: &Path,
    metadata: Option<&Path>,
    boundary_year: i32,
    out: &Path,
) -> Result<(), CliError> {
    let file = std::fs::File::open(input)
        .map_err(|e| CliError::Io(format!("opening {}: {e}", input.display())))?;
    let parsed = parse_records(file)?;
    let stats = summarize(&parsed.records);
    let prepared = prepare_split(parsed.records, boundary_year)?;
    let split = &prepared.split;
    for warning in &split.warnings {
        eprintln!("preprocess: warning: {warning}");
    }

    ensure_dir(out)?;
    write_file(&out.join("train_sequences.csv"), &sequences_to_csv(&split.train))?;
    write_file(&out.join("test_sequences.csv"), &sequences_to_csv(&split.test))?;
    write_file(&out.join("vocabulary.csv"), &vocabulary_to_csv(&split.vocabulary))?;
    write_file(&out.join("stats.txt"), &stats.render("input"))?;

    let mut rejects = String::from("line,reason\n");
    for r in &parsed.rejects {
        rejects.push_str(&format!("{},{}\n", r.line, r.reason));
    }
    write_file(&out.join("rejects.csv"), &rejects)?;

    if let Some(meta) = metadata {
        std::fs::copy(meta, out.join("metadata.csv"))
            .map_err(|e| CliError::Io(format!("copying {}: {e}", meta.display())))?;
    }

    let provenance = format!(
        "input={}\nboundary_year={boundary_year}\nrows_rejected={}\nrecords_removed_by_cleaning={}\n{}",
        input.display(),
        parsed.rejects.len(),
        prepared.removed,
        split.provenance
    );
    write_file(&out.join("provenance.txt"), &provenance)?;
    write_file(&out.join("resolved.conf"), &format!(
        "[preprocess]\ninput = {}\nboundary_year = {boundary_year}\nmetadata = {}\n",
        input.display(),
        metadata.map(|m| m.display().to_string()).unwrap_or_else(|| "none".into()),
    ))?;

    println!(
        "preprocess: {} train / {} test interactions, {} skills, {} rejects -> {}",
        split.train_interactions(),
        split.test_interactions(),
        split.vocabulary.len(),
        parsed.rejects.len(),
        out.display()
    );
    Ok(())
}
