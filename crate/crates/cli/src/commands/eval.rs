use std::path::Path;

use kt_core::metrics::{evaluate, SubsetSpec};

use crate::checkpoint::load;
use crate::dataio::{load_prepared, write_file};
use crate::report::{format_eval_table, row_from_report, rows_to_csv};
use crate::{ensure_dir, CliError};

/// Evaluates a checkpoint on the prepared test split, one report per
/// department subset plus the aggregate.
pub fn run(
    checkpoint_path: &Path,
    data: &Path,
    subsets: Option<&str>,
    out: &Path,
) -> Result<(), CliError> {
    let checkpoint = load(checkpoint_path)?;
    let (split, metadata) = load_prepared(data)?;
    if checkpoint.vocab_size != split.vocabulary.len() {
        return Err(CliError::Data(format!(
            "checkpoint was trained with vocabulary size {} but the data directory has {}",
            checkpoint.vocab_size,
            split.vocabulary.len()
        )));
    }
    let specs: Vec<SubsetSpec> = subsets
        .map(|raw| {
            raw.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(SubsetSpec::department)
                .collect()
        })
        .unwrap_or_default();
    if !specs.is_empty() && metadata.is_none() {
        return Err(CliError::Data(
            "department subsets requested but the data directory has no metadata.csv".into(),
        ));
    }
    let max_seq_len = match &checkpoint.model {
        kt_core::models::KtModel::Sakt(s) => s.max_len,
        _ => 100,
    };
    let reports = evaluate(
        &checkpoint.model,
        &split,
        metadata.as_ref(),
        &specs,
        max_seq_len,
    )?;
    for report in &reports {
        if report.empty {
            eprintln!("eval: subset '{}' is empty", report.subset);
        }
    }
    let arch = checkpoint.model.architecture();
    let rows: Vec<_> = reports.iter().map(|r| row_from_report(arch, r)).collect();
    ensure_dir(out)?;
    write_file(&out.join("metrics.csv"), &rows_to_csv(&rows))?;
    write_file(&out.join("metrics.txt"), &format_eval_table(&rows))?;
    write_file(
        &out.join("resolved.conf"),
        &format!(
            "[eval]\ncheckpoint = {}\ndata = {}\nsubsets = {}\nfiltering = student-level via metadata\n",
            checkpoint_path.display(),
            data.display(),
            subsets.unwrap_or("")
        ),
    )?;
    let aggregate = &reports[0];
    println!(
        "eval: {} on {} targets, auc {} -> {}",
        arch.tag(),
        aggregate.n,
        aggregate
            .auc
            .value()
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "NA".into()),
        out.display()
    );
    Ok(())
}
