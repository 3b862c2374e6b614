//! The five knowledge-tracing architectures as pure forward functions
//! from an encoded window to per-step pass probabilities, plus their
//! losses. All five share one convention: `step_probs[t]` estimates
//! P(correct_t | interactions before t, skill_t), so position 0 is
//! predicted from empty history and next-step losses target t >= 1.

mod dkt;
mod dkvmn;
mod kqn;
mod sakt;

pub use dkt::{DktPlusConfig, DktState};
pub use dkvmn::DkvmnState;
pub use kqn::{skill_similarity, KqnState, SkillSimilarity};
pub use sakt::SaktState;

use thiserror::Error;

use crate::data::StudentSequence;
use crate::math::{Graph, MathError, NodeId, ParamSet};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Math(#[from] MathError),
    #[error("skill id {skill} outside vocabulary 1..={vocab}")]
    SkillOutOfRange { skill: u32, vocab: usize },
    #[error("window of {len} steps exceeds positional table length {max}")]
    WindowTooLong { len: usize, max: usize },
    #[error("loss needs at least one valid next-step target")]
    NoValidTargets,
    #[error("bad window: {0}")]
    BadWindow(String),
    #[error("bad model config: {0}")]
    BadConfig(String),
    #[error("unknown architecture '{0}'")]
    UnknownArchitecture(String),
}

/// The five architectures, in the fixed reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    Dkt,
    DktPlus,
    Dkvmn,
    Sakt,
    Kqn,
}

impl Architecture {
    pub const ALL: [Architecture; 5] = [
        Architecture::Dkt,
        Architecture::DktPlus,
        Architecture::Dkvmn,
        Architecture::Sakt,
        Architecture::Kqn,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Architecture::Dkt => "DKT",
            Architecture::DktPlus => "DKT+",
            Architecture::Dkvmn => "DKVMN",
            Architecture::Sakt => "SAKT",
            Architecture::Kqn => "KQN",
        }
    }

    pub fn parse(s: &str) -> Result<Architecture, ModelError> {
        match s.to_ascii_uppercase().as_str() {
            "DKT" => Ok(Architecture::Dkt),
            "DKT+" | "DKTPLUS" | "DKT_PLUS" => Ok(Architecture::DktPlus),
            "DKVMN" => Ok(Architecture::Dkvmn),
            "SAKT" => Ok(Architecture::Sakt),
            "KQN" => Ok(Architecture::Kqn),
            other => Err(ModelError::UnknownArchitecture(other.to_string())),
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Bijective interaction index: skill + correct * Q, in 1..=2Q.
pub fn encode_interaction(skill_id: u32, correct: u8, q: usize) -> Result<u32, ModelError> {
    if skill_id == 0 || skill_id as usize > q {
        return Err(ModelError::SkillOutOfRange {
            skill: skill_id,
            vocab: q,
        });
    }
    Ok(skill_id + (correct as u32) * q as u32)
}

/// One model input window: skills, labels and a validity mask whose
/// padding (if any) forms a suffix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedWindow {
    pub skill_ids: Vec<u32>,
    pub labels: Vec<u8>,
    pub valid_mask: Vec<bool>,
}

impl EncodedWindow {
    pub fn new(skill_ids: Vec<u32>, labels: Vec<u8>, valid_mask: Vec<bool>) -> Result<Self, ModelError> {
        if skill_ids.len() != labels.len() || labels.len() != valid_mask.len() {
            return Err(ModelError::BadWindow(format!(
                "field lengths differ: {} skills, {} labels, {} mask",
                skill_ids.len(),
                labels.len(),
                valid_mask.len()
            )));
        }
        let valid = valid_mask.iter().take_while(|&&m| m).count();
        if valid_mask[valid..].iter().any(|&m| m) {
            return Err(ModelError::BadWindow(
                "padding must be a suffix of the window".into(),
            ));
        }
        if valid == 0 {
            return Err(ModelError::BadWindow("window has no valid steps".into()));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(ModelError::BadWindow("labels must be 0 or 1".into()));
        }
        Ok(EncodedWindow {
            skill_ids,
            labels,
            valid_mask,
        })
    }

    pub fn from_sequence(seq: &StudentSequence) -> Self {
        let n = seq.interactions.len();
        EncodedWindow {
            skill_ids: seq.interactions.iter().map(|i| i.skill_id).collect(),
            labels: seq.interactions.iter().map(|i| i.correct).collect(),
            valid_mask: vec![true; n],
        }
    }

    pub fn len(&self) -> usize {
        self.skill_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skill_ids.is_empty()
    }

    /// Number of leading valid steps.
    pub fn valid_len(&self) -> usize {
        self.valid_mask.iter().take_while(|&&m| m).count()
    }

    /// Valid next-step loss targets: steps 1..valid_len.
    pub fn target_count(&self) -> usize {
        self.valid_len().saturating_sub(1)
    }

    fn check_skills(&self, q: usize) -> Result<(), ModelError> {
        for &s in &self.skill_ids[..self.valid_len()] {
            if s == 0 || s as usize > q {
                return Err(ModelError::SkillOutOfRange { skill: s, vocab: q });
            }
        }
        Ok(())
    }
}

/// Graph handles produced by one forward pass.
pub(crate) struct ForwardNodes {
    /// One 1x1 probability node per valid step.
    pub step_probs: Vec<NodeId>,
    /// Full per-step output vectors over Q skills (DKT family only).
    pub y_columns: Option<Vec<NodeId>>,
}

/// Per-step probabilities aligned with the window, plus the full output
/// vectors for the architectures that produce them. Padded positions
/// hold probability 0.5 and are never loss or metric targets.
#[derive(Debug, Clone)]
pub struct PredictionTrace {
    pub step_probs: Vec<f64>,
    pub full_vectors: Option<Vec<Vec<f64>>>,
    pub skill_ids: Vec<u32>,
    pub labels: Vec<u8>,
    pub valid_mask: Vec<bool>,
}

impl PredictionTrace {
    /// (step, probability, label) for each valid next-step target.
    pub fn targets(&self) -> impl Iterator<Item = (usize, f64, u8)> + '_ {
        let valid = self.valid_mask.iter().take_while(|&&m| m).count();
        (1..valid).map(move |t| (t, self.step_probs[t], self.labels[t]))
    }

    pub fn target_count(&self) -> usize {
        self.valid_mask
            .iter()
            .take_while(|&&m| m)
            .count()
            .saturating_sub(1)
    }

    /// Mean L1 change between consecutive output vectors, averaged per
    /// skill: the w1 waviness of this trace. None for architectures
    /// without full output vectors or traces shorter than two steps.
    pub fn waviness_w1(&self) -> Option<f64> {
        let vectors = self.full_vectors.as_ref()?;
        if vectors.len() < 2 {
            return None;
        }
        let q = vectors[0].len() as f64;
        let pairs = (vectors.len() - 1) as f64;
        let total: f64 = vectors
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| (a - b).abs()).sum::<f64>())
            .sum();
        Some(total / (pairs * q))
    }
}

fn trace_from_nodes(g: &Graph, nodes: &ForwardNodes, window: &EncodedWindow) -> PredictionTrace {
    let valid = window.valid_len();
    let mut step_probs = Vec::with_capacity(window.len());
    for t in 0..window.len() {
        if t < valid {
            step_probs.push(g.value(nodes.step_probs[t]).get(0, 0));
        } else {
            step_probs.push(0.5);
        }
    }
    let full_vectors = nodes.y_columns.as_ref().map(|cols| {
        cols.iter()
            .map(|&id| g.value(id).data().to_vec())
            .collect()
    });
    PredictionTrace {
        step_probs,
        full_vectors,
        skill_ids: window.skill_ids.clone(),
        labels: window.labels.clone(),
        valid_mask: window.valid_mask.clone(),
    }
}

/// Stacks the valid next-step probability nodes and returns the mean
/// clamped binary cross-entropy node.
pub(crate) fn next_step_bce(
    g: &mut Graph,
    nodes: &ForwardNodes,
    window: &EncodedWindow,
) -> Result<NodeId, ModelError> {
    let valid = window.valid_len();
    if valid < 2 {
        return Err(ModelError::NoValidTargets);
    }
    let probs = g.stack_rows(&nodes.step_probs[1..valid])?;
    let targets: Vec<f64> = window.labels[1..valid].iter().map(|&l| l as f64).collect();
    Ok(g.bce_mean(probs, &targets)?)
}

/// A named architecture with its parameter tensors, hyperparameters and
/// initialization seed.
#[derive(Debug, Clone)]
pub enum KtModel {
    Dkt(DktState),
    DktPlus(DktState, DktPlusConfig),
    Dkvmn(DkvmnState),
    Sakt(SaktState),
    Kqn(KqnState),
}

/// Hyperparameters for building any of the five architectures.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub dkt_hidden: usize,
    pub dkt_plus: DktPlusConfig,
    pub dkvmn_slots: usize,
    pub dkvmn_key_dim: usize,
    pub dkvmn_value_dim: usize,
    pub sakt_dim: usize,
    pub sakt_heads: usize,
    pub sakt_max_len: usize,
    pub kqn_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dkt_hidden: 100,
            dkt_plus: DktPlusConfig::default(),
            dkvmn_slots: 20,
            dkvmn_key_dim: 50,
            dkvmn_value_dim: 100,
            sakt_dim: 64,
            sakt_heads: 4,
            sakt_max_len: 100,
            kqn_dim: 64,
        }
    }
}

impl KtModel {
    pub fn build(
        arch: Architecture,
        q: usize,
        config: &ModelConfig,
        seed: u64,
    ) -> Result<KtModel, ModelError> {
        Ok(match arch {
            Architecture::Dkt => KtModel::Dkt(DktState::new(q, config.dkt_hidden, seed)),
            Architecture::DktPlus => {
                config.dkt_plus.validate()?;
                KtModel::DktPlus(DktState::new(q, config.dkt_hidden, seed), config.dkt_plus)
            }
            Architecture::Dkvmn => KtModel::Dkvmn(DkvmnState::new(
                q,
                config.dkvmn_slots,
                config.dkvmn_key_dim,
                config.dkvmn_value_dim,
                seed,
            )),
            Architecture::Sakt => KtModel::Sakt(SaktState::new(
                q,
                config.sakt_dim,
                config.sakt_heads,
                config.sakt_max_len,
                seed,
            )?),
            Architecture::Kqn => KtModel::Kqn(KqnState::new(q, config.kqn_dim, seed)),
        })
    }

    pub fn architecture(&self) -> Architecture {
        match self {
            KtModel::Dkt(_) => Architecture::Dkt,
            KtModel::DktPlus(..) => Architecture::DktPlus,
            KtModel::Dkvmn(_) => Architecture::Dkvmn,
            KtModel::Sakt(_) => Architecture::Sakt,
            KtModel::Kqn(_) => Architecture::Kqn,
        }
    }

    pub fn vocab_size(&self) -> usize {
        match self {
            KtModel::Dkt(s) | KtModel::DktPlus(s, _) => s.q,
            KtModel::Dkvmn(s) => s.q,
            KtModel::Sakt(s) => s.q,
            KtModel::Kqn(s) => s.q,
        }
    }

    pub fn params(&self) -> &ParamSet {
        match self {
            KtModel::Dkt(s) | KtModel::DktPlus(s, _) => &s.params,
            KtModel::Dkvmn(s) => &s.params,
            KtModel::Sakt(s) => &s.params,
            KtModel::Kqn(s) => &s.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        match self {
            KtModel::Dkt(s) | KtModel::DktPlus(s, _) => &mut s.params,
            KtModel::Dkvmn(s) => &mut s.params,
            KtModel::Sakt(s) => &mut s.params,
            KtModel::Kqn(s) => &mut s.params,
        }
    }

    pub(crate) fn forward_nodes(
        &self,
        g: &mut Graph,
        window: &EncodedWindow,
    ) -> Result<ForwardNodes, ModelError> {
        window.check_skills(self.vocab_size())?;
        match self {
            KtModel::Dkt(s) | KtModel::DktPlus(s, _) => s.forward(g, window),
            KtModel::Dkvmn(s) => s.forward(g, window),
            KtModel::Sakt(s) => s.forward(g, window),
            KtModel::Kqn(s) => s.forward(g, window),
        }
    }

    /// Runs the forward pass and extracts the prediction trace.
    pub fn predict(&self, window: &EncodedWindow) -> Result<PredictionTrace, ModelError> {
        let mut g = Graph::new();
        let nodes = self.forward_nodes(&mut g, window)?;
        Ok(trace_from_nodes(&g, &nodes, window))
    }

    /// Builds the architecture's training loss node for one window.
    pub(crate) fn loss_node(
        &self,
        g: &mut Graph,
        nodes: &ForwardNodes,
        window: &EncodedWindow,
    ) -> Result<NodeId, ModelError> {
        match self {
            KtModel::DktPlus(state, cfg) => state.regularized_loss(g, nodes, window, cfg),
            _ => next_step_bce(g, nodes, window),
        }
    }

    /// Forward plus loss in one graph; the caller runs backward.
    pub fn window_loss(&self, g: &mut Graph, window: &EncodedWindow) -> Result<NodeId, ModelError> {
        let nodes = self.forward_nodes(g, window)?;
        self.loss_node(g, &nodes, window)
    }
}

/// Uniform dispatch over the five architectures.
pub fn model_predict(model: &KtModel, window: &EncodedWindow) -> Result<PredictionTrace, ModelError> {
    model.predict(window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interaction_encoding_is_bijective() {
        assert_eq!(encode_interaction(1, 0, 233).unwrap(), 1);
        assert_eq!(encode_interaction(1, 1, 233).unwrap(), 234);
        let mut seen = std::collections::HashSet::new();
        for skill in 1..=5u32 {
            for correct in [0u8, 1] {
                seen.insert(encode_interaction(skill, correct, 5).unwrap());
            }
        }
        assert_eq!(seen.len(), 10);
        assert!(seen.iter().all(|&i| (1..=10).contains(&i)));
        assert!(encode_interaction(6, 0, 5).is_err());
        assert!(encode_interaction(0, 0, 5).is_err());
    }

    #[test]
    fn window_rejects_non_suffix_padding() {
        let err = EncodedWindow::new(vec![1, 2, 3], vec![1, 0, 1], vec![true, false, true]);
        assert!(matches!(err, Err(ModelError::BadWindow(_))));
    }

    #[test]
    fn window_target_counts() {
        let w = EncodedWindow::new(vec![1, 2, 3], vec![1, 0, 1], vec![true, true, false]).unwrap();
        assert_eq!(w.valid_len(), 2);
        assert_eq!(w.target_count(), 1);
    }

    #[test]
    fn architecture_parse_and_order() {
        assert_eq!(Architecture::parse("dkt+").unwrap(), Architecture::DktPlus);
        assert_eq!(Architecture::parse("SAKT").unwrap(), Architecture::Sakt);
        assert!(Architecture::parse("SAINT").is_err());
        let tags: Vec<&str> = Architecture::ALL.iter().map(|a| a.tag()).collect();
        assert_eq!(tags, ["DKT", "DKT+", "DKVMN", "SAKT", "KQN"]);
    }
}
