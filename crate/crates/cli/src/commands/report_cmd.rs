use std::path::{Path, PathBuf};

use crate::dataio::write_file;
use crate::report::{comparison_tables, rows_from_csv};
use crate::{ensure_dir, CliError};

/// Merges evaluation runs into the paired comparison tables (AUC with
/// accuracy, then recall/precision/F1), architectures in fixed order.
pub fn run(runs: &[PathBuf], out: &Path) -> Result<(), CliError> {
    let mut per_run = Vec::new();
    for dir in runs {
        let path = dir.join("metrics.csv");
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        per_run.push(rows_from_csv(&text, &path.display().to_string())?);
    }
    let tables = comparison_tables(&per_run)?;
    ensure_dir(out)?;
    write_file(&out.join("comparison_auc_accuracy.csv"), &tables.auc_accuracy_csv)?;
    write_file(&out.join("comparison_auc_accuracy.txt"), &tables.auc_accuracy_txt)?;
    write_file(
        &out.join("comparison_recall_precision_f1.csv"),
        &tables.recall_precision_f1_csv,
    )?;
    write_file(
        &out.join("comparison_recall_precision_f1.txt"),
        &tables.recall_precision_f1_txt,
    )?;
    println!("report: merged {} runs -> {}", runs.len(), out.display());
    Ok(())
}
