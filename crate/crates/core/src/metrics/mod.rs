//! Binary-classification evaluation over next-step predictions:
//! confusion counts, accuracy/precision/recall/F1 and rank-based AUC
//! with tie-group averaging.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::data::{window, DatasetSplit, StudentMetadata};
use crate::models::{EncodedWindow, KtModel, ModelError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("confusion counts need at least one scored prediction")]
    EmptyPredictions,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
}

/// One scored next-step test target.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPrediction {
    pub probability: f64,
    pub label: u8,
    pub universal_id: String,
    /// Position within the student's test sequence.
    pub step: usize,
    pub skill_id: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    pub fn add(&self, other: &ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix {
            true_pos: self.true_pos + other.true_pos,
            false_pos: self.false_pos + other.false_pos,
            true_neg: self.true_neg + other.true_neg,
            false_neg: self.false_neg + other.false_neg,
        }
    }
}

/// Counts at the given threshold; probability >= threshold predicts a
/// pass (ties go to the positive class).
pub fn confusion(preds: &[ScoredPrediction], threshold: f64) -> Result<ConfusionMatrix, MetricsError> {
    if preds.is_empty() {
        return Err(MetricsError::EmptyPredictions);
    }
    let mut cm = ConfusionMatrix::default();
    for p in preds {
        let predicted_pass = p.probability >= threshold;
        match (predicted_pass, p.label) {
            (true, 1) => cm.true_pos += 1,
            (true, 0) => cm.false_pos += 1,
            (false, 0) => cm.true_neg += 1,
            (false, 1) => cm.false_neg += 1,
            _ => unreachable!("labels are binary"),
        }
    }
    Ok(cm)
}

/// A ratio metric; `degenerate` marks a zero denominator that was
/// defined down to 0 rather than erroring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub value: f64,
    pub degenerate: bool,
}

fn ratio(num: u64, den: u64) -> MetricValue {
    if den == 0 {
        MetricValue {
            value: 0.0,
            degenerate: true,
        }
    } else {
        MetricValue {
            value: num as f64 / den as f64,
            degenerate: false,
        }
    }
}

pub fn accuracy(cm: &ConfusionMatrix) -> MetricValue {
    ratio(cm.true_pos + cm.true_neg, cm.total())
}

pub fn precision(cm: &ConfusionMatrix) -> MetricValue {
    ratio(cm.true_pos, cm.true_pos + cm.false_pos)
}

pub fn recall(cm: &ConfusionMatrix) -> MetricValue {
    ratio(cm.true_pos, cm.true_pos + cm.false_neg)
}

pub fn f1(cm: &ConfusionMatrix) -> MetricValue {
    let p = precision(cm);
    let r = recall(cm);
    if p.value + r.value == 0.0 {
        MetricValue {
            value: 0.0,
            degenerate: true,
        }
    } else {
        MetricValue {
            value: 2.0 * p.value * r.value / (p.value + r.value),
            degenerate: false,
        }
    }
}

/// AUC outcome: undefined when only one class is present.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AucOutcome {
    Value(f64),
    Undefined { positives: usize, negatives: usize },
}

impl AucOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            AucOutcome::Value(v) => Some(*v),
            AucOutcome::Undefined { .. } => None,
        }
    }
}

/// Mann-Whitney AUC: the probability that a random positive outscores a
/// random negative, ties counted half. Computed by sorting once and
/// averaging ranks within tie groups.
pub fn auc(preds: &[ScoredPrediction]) -> AucOutcome {
    let positives = preds.iter().filter(|p| p.label == 1).count();
    let negatives = preds.len() - positives;
    if positives == 0 || negatives == 0 {
        return AucOutcome::Undefined { positives, negatives };
    }
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[a]
            .probability
            .partial_cmp(&preds[b].probability)
            .expect("probabilities are finite")
    });
    let mut rank_sum_pos = 0.0_f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len()
            && preds[order[j + 1]].probability == preds[order[i]].probability
        {
            j += 1;
        }
        // ranks are 1-based; everyone in the tie group gets the average
        let avg_rank = ((i + 1 + j + 1) as f64) / 2.0;
        for &idx in &order[i..=j] {
            if preds[idx].label == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let p = positives as f64;
    let n = negatives as f64;
    let u = rank_sum_pos - p * (p + 1.0) / 2.0;
    AucOutcome::Value(u / (p * n))
}

/// Evaluation row for one (model, subset) pair.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub subset: String,
    pub n: usize,
    pub confusion: ConfusionMatrix,
    pub accuracy: MetricValue,
    pub precision: MetricValue,
    pub recall: MetricValue,
    pub f1: MetricValue,
    pub auc: AucOutcome,
    /// True when the subset had no scored predictions at all.
    pub empty: bool,
}

impl MetricsReport {
    pub fn from_predictions(subset: impl Into<String>, preds: &[ScoredPrediction]) -> MetricsReport {
        let subset = subset.into();
        if preds.is_empty() {
            return MetricsReport {
                subset,
                n: 0,
                confusion: ConfusionMatrix::default(),
                accuracy: MetricValue { value: 0.0, degenerate: true },
                precision: MetricValue { value: 0.0, degenerate: true },
                recall: MetricValue { value: 0.0, degenerate: true },
                f1: MetricValue { value: 0.0, degenerate: true },
                auc: AucOutcome::Undefined { positives: 0, negatives: 0 },
                empty: true,
            };
        }
        let cm = confusion(preds, 0.5).expect("non-empty");
        MetricsReport {
            subset,
            n: preds.len(),
            confusion: cm,
            accuracy: accuracy(&cm),
            precision: precision(&cm),
            recall: recall(&cm),
            f1: f1(&cm),
            auc: auc(preds),
            empty: false,
        }
    }
}

/// A department filter; `departments: None` means the whole test set.
#[derive(Debug, Clone)]
pub struct SubsetSpec {
    pub label: String,
    pub departments: Option<BTreeSet<String>>,
}

impl SubsetSpec {
    pub fn all(label: impl Into<String>) -> SubsetSpec {
        SubsetSpec {
            label: label.into(),
            departments: None,
        }
    }

    pub fn department(code: impl Into<String>) -> SubsetSpec {
        let code = code.into();
        SubsetSpec {
            label: code.clone(),
            departments: Some([code].into()),
        }
    }
}

/// Scores every valid next step of every test window.
pub fn score_test_split(
    model: &KtModel,
    split: &DatasetSplit,
    max_seq_len: usize,
) -> Result<Vec<ScoredPrediction>, MetricsError> {
    let mut out = Vec::new();
    for seq in &split.test {
        let mut offset = 0usize;
        for piece in window(seq, max_seq_len)? {
            let len = piece.interactions.len();
            if piece.usable_for_next_step() {
                let encoded = EncodedWindow::from_sequence(&piece);
                let trace = model.predict(&encoded)?;
                for (t, prob, label) in trace.targets() {
                    out.push(ScoredPrediction {
                        probability: prob,
                        label,
                        universal_id: seq.universal_id.clone(),
                        step: offset + t,
                        skill_id: encoded.skill_ids[t],
                    });
                }
            }
            offset += len;
        }
    }
    Ok(out)
}

/// One report per requested subset plus the leading aggregate. Subsets
/// filter at student level through the metadata; students without a
/// metadata entry only count toward the aggregate.
pub fn evaluate(
    model: &KtModel,
    split: &DatasetSplit,
    metadata: Option<&StudentMetadata>,
    subsets: &[SubsetSpec],
    max_seq_len: usize,
) -> Result<Vec<MetricsReport>, MetricsError> {
    let scored = score_test_split(model, split, max_seq_len)?;
    let mut reports = vec![MetricsReport::from_predictions("ALL", &scored)];
    for spec in subsets {
        let filtered: Vec<ScoredPrediction> = match (&spec.departments, metadata) {
            (None, _) => scored.clone(),
            (Some(codes), Some(meta)) => scored
                .iter()
                .filter(|p| {
                    meta.department(&p.universal_id)
                        .is_some_and(|d| codes.contains(d))
                })
                .cloned()
                .collect(),
            (Some(_), None) => Vec::new(),
        };
        reports.push(MetricsReport::from_predictions(spec.label.clone(), &filtered));
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pred(probability: f64, label: u8) -> ScoredPrediction {
        ScoredPrediction {
            probability,
            label,
            universal_id: "s".into(),
            step: 0,
            skill_id: 1,
        }
    }

    #[test]
    fn confusion_all_positive() {
        let preds: Vec<_> = (0..7).map(|_| pred(1.0, 1)).collect();
        let cm = confusion(&preds, 0.5).unwrap();
        assert_eq!(cm.true_pos, 7);
        assert_eq!(cm.total(), 7);
    }

    #[test]
    fn threshold_tie_counts_as_predicted_pass() {
        let cm = confusion(&[pred(0.5, 0)], 0.5).unwrap();
        assert_eq!(cm.false_pos, 1);
    }

    #[test]
    fn confusion_empty_is_contract_error() {
        assert!(matches!(
            confusion(&[], 0.5),
            Err(MetricsError::EmptyPredictions)
        ));
    }

    #[test]
    fn confusion_matches_naive_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let preds: Vec<_> = (0..1000)
            .map(|_| pred(rng.gen::<f64>(), rng.gen_range(0..=1)))
            .collect();
        let cm = confusion(&preds, 0.5).unwrap();
        let mut naive = ConfusionMatrix::default();
        for p in &preds {
            if p.probability >= 0.5 {
                if p.label == 1 {
                    naive.true_pos += 1;
                } else {
                    naive.false_pos += 1;
                }
            } else if p.label == 0 {
                naive.true_neg += 1;
            } else {
                naive.false_neg += 1;
            }
        }
        assert_eq!(cm, naive);
    }

    #[test]
    fn metric_formulas_on_known_counts() {
        let cm = ConfusionMatrix {
            true_pos: 50,
            false_pos: 10,
            true_neg: 30,
            false_neg: 10,
        };
        assert!((accuracy(&cm).value - 0.8).abs() < 1e-15);
        assert!((precision(&cm).value - 5.0 / 6.0).abs() < 1e-15);
        assert!((recall(&cm).value - 5.0 / 6.0).abs() < 1e-15);
        assert!((f1(&cm).value - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_denominators_flag_zero() {
        let cm = ConfusionMatrix {
            true_pos: 0,
            false_pos: 0,
            true_neg: 9,
            false_neg: 0,
        };
        assert_eq!(accuracy(&cm).value, 1.0);
        let p = precision(&cm);
        assert_eq!(p.value, 0.0);
        assert!(p.degenerate);
        let r = recall(&cm);
        assert!(r.degenerate);
        let f = f1(&cm);
        assert_eq!(f.value, 0.0);
        assert!(f.degenerate);
    }

    #[test]
    fn perfectly_separated_scores_have_auc_one() {
        let preds = vec![pred(0.9, 1), pred(0.8, 1), pred(0.2, 0), pred(0.1, 0)];
        assert_eq!(auc(&preds), AucOutcome::Value(1.0));
    }

    #[test]
    fn all_equal_scores_have_auc_half() {
        let preds = vec![pred(0.4, 1), pred(0.4, 0), pred(0.4, 1), pred(0.4, 0)];
        assert_eq!(auc(&preds), AucOutcome::Value(0.5));
    }

    #[test]
    fn single_class_reports_counts() {
        let preds = vec![pred(0.4, 1), pred(0.9, 1)];
        assert_eq!(
            auc(&preds),
            AucOutcome::Undefined {
                positives: 2,
                negatives: 0
            }
        );
    }

    fn brute_force_auc(preds: &[ScoredPrediction]) -> f64 {
        let pos: Vec<f64> = preds
            .iter()
            .filter(|p| p.label == 1)
            .map(|p| p.probability)
            .collect();
        let neg: Vec<f64> = preds
            .iter()
            .filter(|p| p.label == 0)
            .map(|p| p.probability)
            .collect();
        let mut wins = 0.0;
        for &a in &pos {
            for &b in &neg {
                if a > b {
                    wins += 1.0;
                } else if a == b {
                    wins += 0.5;
                }
            }
        }
        wins / (pos.len() as f64 * neg.len() as f64)
    }

    #[test]
    fn auc_matches_pairwise_oracle_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for round in 0..50 {
            let n = rng.gen_range(5..=500);
            let preds: Vec<_> = (0..n)
                .map(|_| {
                    // coarse grid injects plenty of ties
                    let p = (rng.gen_range(0..=20) as f64) / 20.0;
                    pred(p, rng.gen_range(0..=1))
                })
                .collect();
            match auc(&preds) {
                AucOutcome::Value(fast) => {
                    let slow = brute_force_auc(&preds);
                    assert!((fast - slow).abs() < 1e-12, "round {round}: {fast} vs {slow}");
                }
                AucOutcome::Undefined { .. } => continue,
            }
        }
    }

    #[test]
    fn auc_invariant_under_increasing_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let preds: Vec<_> = (0..200)
            .map(|_| pred(rng.gen::<f64>(), rng.gen_range(0..=1)))
            .collect();
        let mapped: Vec<_> = preds
            .iter()
            .map(|p| {
                let mut q = p.clone();
                // strictly increasing: x -> exp(3x) + x
                q.probability = (3.0 * p.probability).exp() + p.probability;
                q
            })
            .collect();
        assert_eq!(auc(&preds), auc(&mapped));
    }

    #[test]
    fn threshold_sweep_sanity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let preds: Vec<_> = (0..500)
            .map(|_| pred(rng.gen::<f64>(), rng.gen_range(0..=1)))
            .collect();
        let positives = preds.iter().filter(|p| p.label == 1).count() as f64;
        let cm0 = confusion(&preds, 0.0).unwrap();
        assert!((accuracy(&cm0).value - positives / 500.0).abs() < 1e-15);
        let cm_hi = confusion(&preds, 1.1).unwrap();
        assert!((accuracy(&cm_hi).value - (500.0 - positives) / 500.0).abs() < 1e-15);
    }

    #[test]
    fn report_fields_rederive_from_confusion() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let preds: Vec<_> = (0..300)
            .map(|_| pred(rng.gen::<f64>(), rng.gen_range(0..=1)))
            .collect();
        let report = MetricsReport::from_predictions("ALL", &preds);
        assert_eq!(report.accuracy, accuracy(&report.confusion));
        assert_eq!(report.precision, precision(&report.confusion));
        assert_eq!(report.recall, recall(&report.confusion));
        assert_eq!(report.f1, f1(&report.confusion));
        assert_eq!(report.n as u64, report.confusion.total());
    }
}
