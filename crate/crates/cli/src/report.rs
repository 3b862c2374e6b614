//! Metrics rows on disk and the paired comparison tables assembled from
//! multiple evaluation runs.

use kt_core::metrics::{AucOutcome, MetricsReport};
use kt_core::models::Architecture;

use crate::CliError;

pub const METRICS_HEADER: &str =
    "arch,subset,n,tp,fp,tn,fn,accuracy,precision,recall,f1,auc,flags";

/// One on-disk metrics row; `auc` is None when undefined.
#[derive(Debug, Clone)]
pub struct EvalRow {
    pub arch: String,
    pub subset: String,
    pub n: usize,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_count: u64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
    pub flags: String,
}

pub fn row_from_report(arch: Architecture, report: &MetricsReport) -> EvalRow {
    let mut flags: Vec<String> = Vec::new();
    if report.empty {
        flags.push("empty".into());
    }
    for (name, metric) in [
        ("accuracy", &report.accuracy),
        ("precision", &report.precision),
        ("recall", &report.recall),
        ("f1", &report.f1),
    ] {
        if metric.degenerate {
            flags.push(format!("{name}_degenerate"));
        }
    }
    let auc = match report.auc {
        AucOutcome::Value(v) => Some(v),
        AucOutcome::Undefined { positives, negatives } => {
            flags.push(format!("auc_undefined(pos={positives};neg={negatives})"));
            None
        }
    };
    EvalRow {
        arch: arch.tag().to_string(),
        subset: report.subset.clone(),
        n: report.n,
        tp: report.confusion.true_pos,
        fp: report.confusion.false_pos,
        tn: report.confusion.true_neg,
        fn_count: report.confusion.false_neg,
        accuracy: report.accuracy.value,
        precision: report.precision.value,
        recall: report.recall.value,
        f1: report.f1.value,
        auc,
        flags: flags.join("|"),
    }
}

fn auc_cell(auc: Option<f64>) -> String {
    auc.map(|v| v.to_string()).unwrap_or_else(|| "NA".to_string())
}

pub fn rows_to_csv(rows: &[EvalRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.arch,
            r.subset,
            r.n,
            r.tp,
            r.fp,
            r.tn,
            r.fn_count,
            r.accuracy,
            r.precision,
            r.recall,
            r.f1,
            auc_cell(r.auc),
            r.flags
        ));
    }
    out
}

pub fn rows_from_csv(text: &str, origin: &str) -> Result<Vec<EvalRow>, CliError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != METRICS_HEADER {
        return Err(CliError::Data(format!(
            "{origin}: unexpected metrics header '{header}'"
        )));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(CliError::Data(format!(
                "{origin}: line {}: expected 13 fields",
                lineno + 2
            )));
        }
        let parse = |what: &str, raw: &str| -> Result<f64, CliError> {
            raw.parse()
                .map_err(|_| CliError::Data(format!("{origin}: line {}: bad {what}", lineno + 2)))
        };
        let parse_u = |what: &str, raw: &str| -> Result<u64, CliError> {
            raw.parse()
                .map_err(|_| CliError::Data(format!("{origin}: line {}: bad {what}", lineno + 2)))
        };
        rows.push(EvalRow {
            arch: fields[0].to_string(),
            subset: fields[1].to_string(),
            n: parse_u("n", fields[2])? as usize,
            tp: parse_u("tp", fields[3])?,
            fp: parse_u("fp", fields[4])?,
            tn: parse_u("tn", fields[5])?,
            fn_count: parse_u("fn", fields[6])?,
            accuracy: parse("accuracy", fields[7])?,
            precision: parse("precision", fields[8])?,
            recall: parse("recall", fields[9])?,
            f1: parse("f1", fields[10])?,
            auc: if fields[11] == "NA" {
                None
            } else {
                Some(parse("auc", fields[11])?)
            },
            flags: fields[12].to_string(),
        });
    }
    Ok(rows)
}

/// Single-run table: one row per subset.
pub fn format_eval_table(rows: &[EvalRow]) -> String {
    let mut out = String::new();
    if let Some(first) = rows.first() {
        out.push_str(&format!("Model: {}\n", first.arch));
    }
    out.push_str(&format!(
        "{:<10}{:>8}{:>8}{:>8}{:>8}{:>8}{:>10}{:>11}{:>9}{:>9}{:>9}\n",
        "Subset", "n", "TP", "FP", "TN", "FN", "Accuracy", "Precision", "Recall", "F1", "AUC"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<10}{:>8}{:>8}{:>8}{:>8}{:>8}{:>10.4}{:>11.4}{:>9.4}{:>9.4}{:>9}\n",
            r.subset,
            r.n,
            r.tp,
            r.fp,
            r.tn,
            r.fn_count,
            r.accuracy,
            r.precision,
            r.recall,
            r.f1,
            r.auc.map(|v| format!("{v:.4}")).unwrap_or_else(|| "NA".into()),
        ));
    }
    out
}

/// The merged grid: architectures in fixed order crossed with the shared
/// subset rows plus a recomputed Average row.
pub struct ComparisonTables {
    pub auc_accuracy_csv: String,
    pub auc_accuracy_txt: String,
    pub recall_precision_f1_csv: String,
    pub recall_precision_f1_txt: String,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn comparison_tables(per_run: &[Vec<EvalRow>]) -> Result<ComparisonTables, CliError> {
    if per_run.is_empty() {
        return Err(CliError::Config("report needs at least one completed eval".into()));
    }
    // fixed architecture order, one column group per run
    let mut runs: Vec<&Vec<EvalRow>> = per_run.iter().collect();
    let arch_index = |rows: &Vec<EvalRow>| -> usize {
        rows.first()
            .and_then(|r| Architecture::parse(&r.arch).ok())
            .map(|a| Architecture::ALL.iter().position(|x| *x == a).unwrap())
            .unwrap_or(usize::MAX)
    };
    runs.sort_by_key(|rows| arch_index(rows));

    // subset labels must agree across runs
    let labels: Vec<String> = runs[0].iter().map(|r| r.subset.clone()).collect();
    for rows in &runs {
        let these: Vec<String> = rows.iter().map(|r| r.subset.clone()).collect();
        if these != labels {
            return Err(CliError::Data(format!(
                "inconsistent subset labels across runs: {labels:?} vs {these:?}"
            )));
        }
    }
    let dept_labels: Vec<&String> = labels.iter().filter(|l| l.as_str() != "ALL").collect();
    let archs: Vec<String> = runs
        .iter()
        .map(|rows| rows.first().map(|r| r.arch.clone()).unwrap_or_default())
        .collect();

    let cell = |rows: &[EvalRow], subset: &str, pick: &dyn Fn(&EvalRow) -> Option<f64>| -> Option<f64> {
        rows.iter().find(|r| r.subset == subset).and_then(pick)
    };
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into());
    let fmt4 = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "NA".into());

    let build = |metrics: &[(&str, Box<dyn Fn(&EvalRow) -> Option<f64>>)]| -> (String, String) {
        let mut csv = String::from("subset");
        for arch in &archs {
            for (name, _) in metrics {
                csv.push_str(&format!(",{arch}_{name}"));
            }
        }
        csv.push('\n');
        let mut txt = String::new();
        txt.push_str(&format!("{:<10}", "Model"));
        for arch in &archs {
            txt.push_str(&format!("{:>width$}", arch, width = 10 * metrics.len()));
        }
        txt.push('\n');
        txt.push_str(&format!("{:<10}", "EM"));
        for _ in &archs {
            for (name, _) in metrics {
                txt.push_str(&format!("{:>10}", name));
            }
        }
        txt.push('\n');

        let mut averages: Vec<Vec<Option<f64>>> = vec![Vec::new(); archs.len() * metrics.len()];
        let emit_row = |label: &str, values: Vec<Option<f64>>, csv: &mut String, txt: &mut String| {
            csv.push_str(label);
            txt.push_str(&format!("{label:<10}"));
            for v in &values {
                csv.push_str(&format!(",{}", fmt(*v)));
                txt.push_str(&format!("{:>10}", fmt4(*v)));
            }
            csv.push('\n');
            txt.push('\n');
        };
        for subset in &labels {
            let mut values = Vec::new();
            for (ri, rows) in runs.iter().enumerate() {
                for (mi, (_, pick)) in metrics.iter().enumerate() {
                    let v = cell(rows, subset, pick.as_ref());
                    if subset.as_str() != "ALL" {
                        averages[ri * metrics.len() + mi].push(v);
                    }
                    values.push(v);
                }
            }
            emit_row(subset, values, &mut csv, &mut txt);
        }
        if !dept_labels.is_empty() {
            let values: Vec<Option<f64>> = averages
                .iter()
                .map(|cells| {
                    if cells.iter().any(Option::is_none) {
                        None
                    } else {
                        Some(mean(&cells.iter().map(|c| c.unwrap()).collect::<Vec<_>>()))
                    }
                })
                .collect();
            emit_row("Average", values, &mut csv, &mut txt);
        }
        (csv, txt)
    };

    let auc_acc: Vec<(&str, Box<dyn Fn(&EvalRow) -> Option<f64>>)> = vec![
        ("auc", Box::new(|r: &EvalRow| r.auc)),
        ("accuracy", Box::new(|r: &EvalRow| Some(r.accuracy))),
    ];
    let rpf: Vec<(&str, Box<dyn Fn(&EvalRow) -> Option<f64>>)> = vec![
        ("recall", Box::new(|r: &EvalRow| Some(r.recall))),
        ("precision", Box::new(|r: &EvalRow| Some(r.precision))),
        ("f1", Box::new(|r: &EvalRow| Some(r.f1))),
    ];
    let (auc_accuracy_csv, auc_accuracy_txt) = build(&auc_acc);
    let (recall_precision_f1_csv, recall_precision_f1_txt) = build(&rpf);
    Ok(ComparisonTables {
        auc_accuracy_csv,
        auc_accuracy_txt,
        recall_precision_f1_csv,
        recall_precision_f1_txt,
    })
}
