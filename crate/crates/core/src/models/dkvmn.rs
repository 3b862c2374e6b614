//! DKVMN: a static key memory addresses a per-sequence value memory.
//! Each step reads mastery by attention over the slots, predicts, then
//! writes the observed interaction back with an erase-then-add update.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::math::{Axis, Graph, ParamId, ParamSet};

use super::{encode_interaction, EncodedWindow, ForwardNodes, ModelError};

#[derive(Debug, Clone)]
pub struct DkvmnState {
    pub q: usize,
    pub slots: usize,
    pub key_dim: usize,
    pub value_dim: usize,
    pub seed: u64,
    pub params: ParamSet,
    key_memory: ParamId,
    value_memory_init: ParamId,
    key_embed: ParamId,
    value_embed: ParamId,
    w_erase: ParamId,
    b_erase: ParamId,
    w_add: ParamId,
    b_add: ParamId,
    w_summary: ParamId,
    b_summary: ParamId,
    w_out: ParamId,
    b_out: ParamId,
}

impl DkvmnState {
    pub fn new(q: usize, slots: usize, key_dim: usize, value_dim: usize, seed: u64) -> DkvmnState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let key_memory = params.add_uniform("key_memory", slots, key_dim, key_dim, &mut rng);
        let value_memory_init =
            params.add_uniform("value_memory_init", slots, value_dim, value_dim, &mut rng);
        let key_embed = params.add_uniform("key_embed", q, key_dim, q, &mut rng);
        let value_embed = params.add_uniform("value_embed", 2 * q, value_dim, 2 * q, &mut rng);
        let w_erase = params.add_uniform("w_erase", value_dim, value_dim, value_dim, &mut rng);
        let b_erase = params.add_zeros("b_erase", value_dim, 1);
        let w_add = params.add_uniform("w_add", value_dim, value_dim, value_dim, &mut rng);
        let b_add = params.add_zeros("b_add", value_dim, 1);
        let summary_dim = key_dim;
        let w_summary = params.add_uniform(
            "w_summary",
            summary_dim,
            value_dim + key_dim,
            value_dim + key_dim,
            &mut rng,
        );
        let b_summary = params.add_zeros("b_summary", summary_dim, 1);
        let w_out = params.add_uniform("w_out", 1, summary_dim, summary_dim, &mut rng);
        let b_out = params.add_zeros("b_out", 1, 1);
        DkvmnState {
            q,
            slots,
            key_dim,
            value_dim,
            seed,
            params,
            key_memory,
            value_memory_init,
            key_embed,
            value_embed,
            w_erase,
            b_erase,
            w_add,
            b_add,
            w_summary,
            b_summary,
            w_out,
            b_out,
        }
    }

    /// Per step: w = softmax(M_key k_t) over slots; read r = sum w_i M_i
    /// from the value memory accumulated so far; predict from [r; k];
    /// then write the labelled interaction via M <- M o (1 - w e^T) + w a^T.
    pub(crate) fn forward(
        &self,
        g: &mut Graph,
        window: &EncodedWindow,
    ) -> Result<ForwardNodes, ModelError> {
        let n = window.valid_len();
        let m_key = g.param(&self.params, self.key_memory);
        let key_embed = g.param(&self.params, self.key_embed);
        let value_embed = g.param(&self.params, self.value_embed);
        let w_erase = g.param(&self.params, self.w_erase);
        let b_erase = g.param(&self.params, self.b_erase);
        let w_add = g.param(&self.params, self.w_add);
        let b_add = g.param(&self.params, self.b_add);
        let w_summary = g.param(&self.params, self.w_summary);
        let b_summary = g.param(&self.params, self.b_summary);
        let w_out = g.param(&self.params, self.w_out);
        let b_out = g.param(&self.params, self.b_out);

        let mut memory = g.param(&self.params, self.value_memory_init);
        let mut step_probs = Vec::with_capacity(n);
        for t in 0..n {
            let skill_row = (window.skill_ids[t] - 1) as usize;
            let k_row = g.gather_rows(key_embed, &[skill_row])?;
            let k = g.transpose(k_row);
            let logits = g.matmul(m_key, k)?;
            let weights = g.softmax(logits, Axis::Cols);

            // read current mastery and predict before seeing the label
            let m_t = g.transpose(memory);
            let read = g.matmul(m_t, weights)?;
            let cat = g.concat_rows(read, k)?;
            let summary_pre = g.matmul(w_summary, cat)?;
            let summary_pre = g.add(summary_pre, b_summary)?;
            let summary = g.tanh(summary_pre);
            let out_pre = g.matmul(w_out, summary)?;
            let out_pre = g.add(out_pre, b_out)?;
            step_probs.push(g.sigmoid(out_pre));

            // erase-then-add write of the observed interaction
            let idx = encode_interaction(window.skill_ids[t], window.labels[t], self.q)?;
            let v_row = g.gather_rows(value_embed, &[(idx - 1) as usize])?;
            let v = g.transpose(v_row);
            let erase_pre = g.matmul(w_erase, v)?;
            let erase_pre = g.add(erase_pre, b_erase)?;
            let erase = g.sigmoid(erase_pre);
            let add_pre = g.matmul(w_add, v)?;
            let add_pre = g.add(add_pre, b_add)?;
            let add_vec = g.tanh(add_pre);

            let erase_t = g.transpose(erase);
            let erase_outer = g.matmul(weights, erase_t)?;
            let keep = g.affine(erase_outer, -1.0, 1.0);
            let erased = g.hadamard(memory, keep)?;
            let add_t = g.transpose(add_vec);
            let add_outer = g.matmul(weights, add_t)?;
            memory = g.add(erased, add_outer)?;
        }
        Ok(ForwardNodes {
            step_probs,
            y_columns: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{sigmoid, Matrix};

    fn window(skills: &[u32], labels: &[u8]) -> EncodedWindow {
        EncodedWindow::new(skills.to_vec(), labels.to_vec(), vec![true; skills.len()]).unwrap()
    }

    #[test]
    fn uniform_logits_give_uniform_slot_weights() {
        let mut state = DkvmnState::new(3, 4, 2, 2, 1);
        // zero key memory makes every correlation logit equal
        for v in state.params.value_mut_by_name("key_memory").data_mut() {
            *v = 0.0;
        }
        let w = window(&[1, 2], &[1, 0]);
        let mut g = Graph::new();
        state.forward(&mut g, &w).unwrap();
        // weights are an internal node; verify via the algebra instead:
        // with equal logits softmax over 4 slots is 0.25 each, so the read
        // equals the column mean of the value memory. Reproduce step 0.
        let m0 = state.params.value_by_name("value_memory_init");
        let key_emb = state.params.value_by_name("key_embed");
        let w_sum = state.params.value_by_name("w_summary");
        let w_out = state.params.value_by_name("w_out");
        let mut read = vec![0.0; 2];
        for d in 0..2 {
            for slot in 0..4 {
                read[d] += 0.25 * m0.get(slot, d);
            }
        }
        let k: Vec<f64> = (0..2).map(|d| key_emb.get(0, d)).collect();
        let cat = [read[0], read[1], k[0], k[1]];
        let mut f = [0.0; 2];
        for r in 0..2 {
            let mut s = 0.0;
            for (c, &x) in cat.iter().enumerate() {
                s += w_sum.get(r, c) * x;
            }
            f[r] = s.tanh();
        }
        let logit = w_out.get(0, 0) * f[0] + w_out.get(0, 1) * f[1];
        let expected = sigmoid(logit);
        let got = {
            let mut g = Graph::new();
            let nodes = state.forward(&mut g, &w).unwrap();
            g.value(nodes.step_probs[0]).get(0, 0)
        };
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn erase_one_add_zero_clears_a_fully_weighted_slot() {
        // erase-add algebra on raw matrices: slot with weight 1, e = 1,
        // a = 0 ends exactly at the add vector (zero)
        let memory = Matrix::from_vec(2, 2, vec![3.0, -1.0, 2.0, 5.0]).unwrap();
        let weights = Matrix::column(vec![1.0, 0.0]);
        let erase = Matrix::column(vec![1.0, 1.0]);
        let add = Matrix::column(vec![0.0, 0.0]);
        let keep = weights
            .matmul(&erase.transpose())
            .unwrap()
            .map(|v| 1.0 - v);
        let erased = memory.hadamard(&keep).unwrap();
        let written = erased
            .add(&weights.matmul(&add.transpose()).unwrap())
            .unwrap();
        assert_eq!(written.row(0), &[0.0, 0.0]);
        assert_eq!(written.row(1), &[2.0, 5.0]);
    }

    #[test]
    fn two_step_manual_trace_matches() {
        // N=2 slots, d_k = d_v = 2, T=2: replay the whole forward by hand
        let state = DkvmnState::new(2, 2, 2, 2, 7);
        let w = window(&[1, 2], &[1, 0]);
        let mut g = Graph::new();
        let nodes = state.forward(&mut g, &w).unwrap();

        let p = &state.params;
        let m_key = p.value_by_name("key_memory");
        let mut memory = p.value_by_name("value_memory_init").clone();
        let key_emb = p.value_by_name("key_embed");
        let val_emb = p.value_by_name("value_embed");
        let w_e = p.value_by_name("w_erase");
        let w_a = p.value_by_name("w_add");
        let w_s = p.value_by_name("w_summary");
        let w_o = p.value_by_name("w_out");

        let mut manual = Vec::new();
        for t in 0..2 {
            let skill = (w.skill_ids[t] - 1) as usize;
            let k = [key_emb.get(skill, 0), key_emb.get(skill, 1)];
            let logits = [
                m_key.get(0, 0) * k[0] + m_key.get(0, 1) * k[1],
                m_key.get(1, 0) * k[0] + m_key.get(1, 1) * k[1],
            ];
            let max = logits[0].max(logits[1]);
            let exps = [(logits[0] - max).exp(), (logits[1] - max).exp()];
            let den = exps[0] + exps[1];
            let wt = [exps[0] / den, exps[1] / den];
            let read = [
                wt[0] * memory.get(0, 0) + wt[1] * memory.get(1, 0),
                wt[0] * memory.get(0, 1) + wt[1] * memory.get(1, 1),
            ];
            let cat = [read[0], read[1], k[0], k[1]];
            let mut f = [0.0; 2];
            for r in 0..2 {
                let mut s = 0.0;
                for (c, &x) in cat.iter().enumerate() {
                    s += w_s.get(r, c) * x;
                }
                f[r] = s.tanh();
            }
            manual.push(sigmoid(w_o.get(0, 0) * f[0] + w_o.get(0, 1) * f[1]));

            // write
            let idx = (w.skill_ids[t] + (w.labels[t] as u32) * 2 - 1) as usize;
            let v = [val_emb.get(idx, 0), val_emb.get(idx, 1)];
            let mut e = [0.0; 2];
            let mut a = [0.0; 2];
            for r in 0..2 {
                e[r] = sigmoid(w_e.get(r, 0) * v[0] + w_e.get(r, 1) * v[1]);
                a[r] = (w_a.get(r, 0) * v[0] + w_a.get(r, 1) * v[1]).tanh();
            }
            for slot in 0..2 {
                for d in 0..2 {
                    let kept = memory.get(slot, d) * (1.0 - wt[slot] * e[d]);
                    memory.set(slot, d, kept + wt[slot] * a[d]);
                }
            }
        }
        for t in 0..2 {
            let got = g.value(nodes.step_probs[t]).get(0, 0);
            assert!((got - manual[t]).abs() < 1e-12, "step {t}: {got} vs {}", manual[t]);
        }
    }

    #[test]
    fn slot_weights_sum_to_one_every_step() {
        // verified through the softmax contract: rebuild the weights for
        // random states and check normalization
        let state = DkvmnState::new(6, 5, 3, 4, 21);
        let m_key = state.params.value_by_name("key_memory");
        let key_emb = state.params.value_by_name("key_embed");
        for skill in 0..6 {
            let k = Matrix::column((0..3).map(|d| key_emb.get(skill, d)).collect());
            let logits = m_key.matmul(&k).unwrap();
            let weights = logits.softmax(Axis::Cols);
            let sum: f64 = weights.data().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
