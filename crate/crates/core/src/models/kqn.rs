//! KQN: a recurrent knowledge encoder produces the student's state
//! vector, a feed-forward skill encoder produces a query vector of the
//! same dimension, and the prediction is the sigmoid of their dot
//! product. The learned skill geometry supports pairwise similarity
//! diagnostics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::math::{Graph, Matrix, NodeId, ParamId, ParamSet};

use super::{encode_interaction, EncodedWindow, ForwardNodes, ModelError};

#[derive(Debug, Clone)]
pub struct KqnState {
    pub q: usize,
    pub dim: usize,
    pub seed: u64,
    pub params: ParamSet,
    interaction_embed: ParamId,
    w_state: ParamId,
    b_state: ParamId,
    skill_hidden: ParamId,
    b_skill1: ParamId,
    w_skill2: ParamId,
    b_skill2: ParamId,
}

impl KqnState {
    pub fn new(q: usize, dim: usize, seed: u64) -> KqnState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let interaction_embed = params.add_uniform("interaction_embed", 2 * q, dim, 2 * q, &mut rng);
        let w_state = params.add_uniform("w_state", dim, dim, dim, &mut rng);
        let b_state = params.add_zeros("b_state", dim, 1);
        let skill_hidden = params.add_uniform("skill_hidden", q, dim, q, &mut rng);
        let b_skill1 = params.add_zeros("b_skill1", dim, 1);
        let w_skill2 = params.add_uniform("w_skill2", dim, dim, dim, &mut rng);
        let b_skill2 = params.add_zeros("b_skill2", dim, 1);
        KqnState {
            q,
            dim,
            seed,
            params,
            interaction_embed,
            w_state,
            b_state,
            skill_hidden,
            b_skill1,
            w_skill2,
            b_skill2,
        }
    }

    /// p_t = sigmoid(h_{t-1} . q(skill_t)); the knowledge state starts at
    /// zero, so the first step predicts 0.5 for every skill, and updates
    /// as h_t = tanh(embed(interaction_t) + W h_{t-1} + b).
    pub(crate) fn forward(
        &self,
        g: &mut Graph,
        window: &EncodedWindow,
    ) -> Result<ForwardNodes, ModelError> {
        let n = window.valid_len();
        let interaction_embed = g.param(&self.params, self.interaction_embed);
        let w_state = g.param(&self.params, self.w_state);
        let b_state = g.param(&self.params, self.b_state);
        let skill_hidden = g.param(&self.params, self.skill_hidden);
        let b_skill1 = g.param(&self.params, self.b_skill1);
        let w_skill2 = g.param(&self.params, self.w_skill2);
        let b_skill2 = g.param(&self.params, self.b_skill2);

        let skill_query = |g: &mut Graph, skill: u32| -> Result<NodeId, ModelError> {
            let row = g.gather_rows(skill_hidden, &[(skill - 1) as usize])?;
            let col = g.transpose(row);
            let pre = g.add(col, b_skill1)?;
            let hidden = g.tanh(pre);
            let proj = g.matmul(w_skill2, hidden)?;
            Ok(g.add(proj, b_skill2)?)
        };

        let mut state = g.leaf(Matrix::zeros(self.dim, 1));
        let mut step_probs = Vec::with_capacity(n);
        for t in 0..n {
            let query = skill_query(g, window.skill_ids[t])?;
            let state_t = g.transpose(state);
            let dot = g.matmul(state_t, query)?;
            step_probs.push(g.sigmoid(dot));

            let idx = encode_interaction(window.skill_ids[t], window.labels[t], self.q)?;
            let emb_row = g.gather_rows(interaction_embed, &[(idx - 1) as usize])?;
            let emb = g.transpose(emb_row);
            let recur = g.matmul(w_state, state)?;
            let pre = g.add_n(&[emb, recur, b_state])?;
            state = g.tanh(pre);
        }
        Ok(ForwardNodes {
            step_probs,
            y_columns: None,
        })
    }

    /// The skill encoder's output vector for one skill, outside any graph.
    pub fn skill_vector(&self, skill_id: u32) -> Result<Matrix, ModelError> {
        if skill_id == 0 || skill_id as usize > self.q {
            return Err(ModelError::SkillOutOfRange {
                skill: skill_id,
                vocab: self.q,
            });
        }
        let hidden_table = self.params.value(self.skill_hidden);
        let b1 = self.params.value(self.b_skill1);
        let w2 = self.params.value(self.w_skill2);
        let b2 = self.params.value(self.b_skill2);
        let row = (skill_id - 1) as usize;
        let col = Matrix::from_fn(self.dim, 1, |r, _| hidden_table.get(row, r));
        let hidden = col.add(b1)?.tanh();
        Ok(w2.matmul(&hidden)?.add(b2)?)
    }
}

/// Pairwise skill-vector geometry: cosine similarities (missing where a
/// vector has zero norm) and Euclidean distances, both Q x Q row-major.
#[derive(Debug, Clone)]
pub struct SkillSimilarity {
    pub q: usize,
    pub cosine: Vec<Option<f64>>,
    pub euclidean: Vec<f64>,
}

impl SkillSimilarity {
    pub fn cosine_at(&self, i: u32, j: u32) -> Option<f64> {
        self.cosine[((i - 1) as usize) * self.q + (j - 1) as usize]
    }

    pub fn euclidean_at(&self, i: u32, j: u32) -> f64 {
        self.euclidean[((i - 1) as usize) * self.q + (j - 1) as usize]
    }
}

/// Pairwise cosine and Euclidean distances between the skill encoder's
/// vectors.
pub fn skill_similarity(state: &KqnState) -> Result<SkillSimilarity, ModelError> {
    let vectors: Vec<Matrix> = (1..=state.q as u32)
        .map(|s| state.skill_vector(s))
        .collect::<Result<_, _>>()?;
    let norms: Vec<f64> = vectors.iter().map(Matrix::frobenius_norm).collect();
    let q = state.q;
    let mut cosine = vec![None; q * q];
    let mut euclidean = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..q {
            let mut dot = 0.0;
            let mut dist_sq = 0.0;
            for d in 0..state.dim {
                let a = vectors[i].get(d, 0);
                let b = vectors[j].get(d, 0);
                dot += a * b;
                dist_sq += (a - b) * (a - b);
            }
            euclidean[i * q + j] = dist_sq.sqrt();
            if norms[i] > 0.0 && norms[j] > 0.0 {
                cosine[i * q + j] = Some((dot / (norms[i] * norms[j])).clamp(-1.0, 1.0));
            }
        }
    }
    Ok(SkillSimilarity { q, cosine, euclidean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sigmoid;

    fn window(skills: &[u32], labels: &[u8]) -> EncodedWindow {
        EncodedWindow::new(skills.to_vec(), labels.to_vec(), vec![true; skills.len()]).unwrap()
    }

    #[test]
    fn zero_knowledge_state_predicts_half() {
        let state = KqnState::new(5, 4, 2);
        let w = window(&[3, 1], &[1, 0]);
        let mut g = Graph::new();
        let nodes = state.forward(&mut g, &w).unwrap();
        assert_eq!(g.value(nodes.step_probs[0]).get(0, 0), 0.5);
        assert_ne!(g.value(nodes.step_probs[1]).get(0, 0), 0.5);
    }

    #[test]
    fn query_ordering_follows_dot_products() {
        // sign(p1 - p2) equals sign((q1 - q2) . h) for any state h
        let state = KqnState::new(6, 5, 4);
        let w = window(&[1, 2, 3], &[1, 1, 0]);
        let mut g = Graph::new();
        let _ = state.forward(&mut g, &w).unwrap();
        // reconstruct h_2 by running two update steps manually
        let emb = state.params.value_by_name("interaction_embed");
        let ws = state.params.value_by_name("w_state");
        let idx1 = (1 + 6 - 1) as usize; // skill 1, correct
        let mut h = Matrix::zeros(5, 1);
        for idx in [idx1, (2 + 6 - 1) as usize] {
            let col = Matrix::from_fn(5, 1, |r, _| emb.get(idx, r));
            h = col.add(&ws.matmul(&h).unwrap()).unwrap().tanh();
        }
        for (a, b) in [(1u32, 2u32), (2, 5), (3, 4)] {
            let qa = state.skill_vector(a).unwrap();
            let qb = state.skill_vector(b).unwrap();
            let pa = sigmoid(qa.hadamard(&h).unwrap().sum());
            let pb = sigmoid(qb.hadamard(&h).unwrap().sum());
            let diff = qa.sub(&qb).unwrap().hadamard(&h).unwrap().sum();
            assert_eq!((pa - pb).signum(), diff.signum());
        }
    }

    #[test]
    fn two_step_manual_trace_matches() {
        let state = KqnState::new(3, 2, 9);
        let w = window(&[2, 3], &[1, 0]);
        let mut g = Graph::new();
        let nodes = state.forward(&mut g, &w).unwrap();

        // manual replay
        let emb = state.params.value_by_name("interaction_embed");
        let ws = state.params.value_by_name("w_state");
        // p0 = sigmoid(0 . q) = 0.5
        assert_eq!(g.value(nodes.step_probs[0]).get(0, 0), 0.5);
        // h1 = tanh(embed(skill 2, correct) + W*0 + 0)
        let idx = (2 + 3 - 1) as usize;
        let h1 = [emb.get(idx, 0).tanh(), emb.get(idx, 1).tanh()];
        let _ = ws;
        let q3 = state.skill_vector(3).unwrap();
        let expected = sigmoid(h1[0] * q3.get(0, 0) + h1[1] * q3.get(1, 0));
        let got = g.value(nodes.step_probs[1]).get(0, 0);
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn similarity_tables_match_direct_pairwise_oracle() {
        let state = KqnState::new(5, 4, 31);
        let sim = skill_similarity(&state).unwrap();
        for i in 1..=5u32 {
            for j in 1..=5u32 {
                let a = state.skill_vector(i).unwrap();
                let b = state.skill_vector(j).unwrap();
                let dot = a.hadamard(&b).unwrap().sum();
                let cos = dot / (a.frobenius_norm() * b.frobenius_norm());
                let dist = a.sub(&b).unwrap().frobenius_norm();
                assert!((sim.cosine_at(i, j).unwrap() - cos).abs() < 1e-12);
                assert!((sim.euclidean_at(i, j) - dist).abs() < 1e-12);
                // symmetry
                assert_eq!(sim.euclidean_at(i, j), sim.euclidean_at(j, i));
            }
            assert!((sim.cosine_at(i, i).unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(sim.euclidean_at(i, i), 0.0);
        }
    }

    #[test]
    fn identical_and_orthogonal_vectors() {
        let a = Matrix::column(vec![1.0, 0.0]);
        let b = Matrix::column(vec![0.0, 1.0]);
        let dot = a.hadamard(&b).unwrap().sum();
        assert_eq!(dot, 0.0);
        assert!((a.sub(&b).unwrap().frobenius_norm() - 2.0_f64.sqrt()).abs() < 1e-15);
        let same = a.sub(&a).unwrap().frobenius_norm();
        assert_eq!(same, 0.0);
    }

    #[test]
    fn zero_norm_vector_reports_missing_cosine() {
        let mut state = KqnState::new(3, 2, 1);
        // zero the whole skill encoder so every query vector is zero
        for name in ["skill_hidden", "b_skill1", "w_skill2", "b_skill2"] {
            for v in state.params.value_mut_by_name(name).data_mut() {
                *v = 0.0;
            }
        }
        let sim = skill_similarity(&state).unwrap();
        assert!(sim.cosine_at(1, 2).is_none());
        assert!(sim.cosine_at(1, 1).is_none());
        assert_eq!(sim.euclidean_at(1, 2), 0.0);
    }
}
