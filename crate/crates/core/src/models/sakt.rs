//! SAKT: scaled dot-product attention from the queried skill over the
//! student's earlier interactions, with a strict causal mask, residual
//! connections, layer norm and a position-wise feed-forward block.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::math::{Graph, NodeId, ParamId, ParamSet};

use super::{encode_interaction, EncodedWindow, ForwardNodes, ModelError};

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct SaktState {
    pub q: usize,
    pub dim: usize,
    pub heads: usize,
    pub max_len: usize,
    pub seed: u64,
    pub params: ParamSet,
    interaction_embed: ParamId,
    skill_embed: ParamId,
    position_embed: ParamId,
    w_query: ParamId,
    w_key: ParamId,
    w_value: ParamId,
    w_concat: ParamId,
    ln1_gamma: ParamId,
    ln1_beta: ParamId,
    w_ff1: ParamId,
    b_ff1: ParamId,
    w_ff2: ParamId,
    b_ff2: ParamId,
    ln2_gamma: ParamId,
    ln2_beta: ParamId,
    w_out: ParamId,
    b_out: ParamId,
}

impl SaktState {
    pub fn new(
        q: usize,
        dim: usize,
        heads: usize,
        max_len: usize,
        seed: u64,
    ) -> Result<SaktState, ModelError> {
        if heads == 0 || dim % heads != 0 {
            return Err(ModelError::BadConfig(format!(
                "attention heads ({heads}) must divide the model dimension ({dim})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let interaction_embed =
            params.add_uniform("interaction_embed", 2 * q, dim, 2 * q, &mut rng);
        let skill_embed = params.add_uniform("skill_embed", q, dim, q, &mut rng);
        let position_embed = params.add_uniform("position_embed", max_len, dim, max_len, &mut rng);
        let w_query = params.add_uniform("w_query", dim, dim, dim, &mut rng);
        let w_key = params.add_uniform("w_key", dim, dim, dim, &mut rng);
        let w_value = params.add_uniform("w_value", dim, dim, dim, &mut rng);
        let w_concat = params.add_uniform("w_concat", dim, dim, dim, &mut rng);
        // layer-norm scales start at one so early activations keep their
        // magnitude; shifts are biases and start at zero
        let ln1_gamma = params.add_ones("ln1_gamma", 1, dim);
        let ln1_beta = params.add_zeros("ln1_beta", 1, dim);
        let w_ff1 = params.add_uniform("w_ff1", dim, dim, dim, &mut rng);
        let b_ff1 = params.add_zeros("b_ff1", 1, dim);
        let w_ff2 = params.add_uniform("w_ff2", dim, dim, dim, &mut rng);
        let b_ff2 = params.add_zeros("b_ff2", 1, dim);
        let ln2_gamma = params.add_ones("ln2_gamma", 1, dim);
        let ln2_beta = params.add_zeros("ln2_beta", 1, dim);
        let w_out = params.add_uniform("w_out", dim, 1, dim, &mut rng);
        let b_out = params.add_zeros("b_out", 1, 1);
        Ok(SaktState {
            q,
            dim,
            heads,
            max_len,
            seed,
            params,
            interaction_embed,
            skill_embed,
            position_embed,
            w_query,
            w_key,
            w_value,
            w_concat,
            ln1_gamma,
            ln1_beta,
            w_ff1,
            b_ff1,
            w_ff2,
            b_ff2,
            ln2_gamma,
            ln2_beta,
            w_out,
            b_out,
        })
    }

    /// Queries come from each step's skill embedding; keys and values
    /// from earlier interaction embeddings plus positions. The mask is
    /// strict (j < i), so step 0 attends nothing and its attention
    /// output is the zero vector.
    pub(crate) fn forward(
        &self,
        g: &mut Graph,
        window: &EncodedWindow,
    ) -> Result<ForwardNodes, ModelError> {
        let n = window.valid_len();
        if n > self.max_len {
            return Err(ModelError::WindowTooLong {
                len: n,
                max: self.max_len,
            });
        }
        let interaction_embed = g.param(&self.params, self.interaction_embed);
        let skill_embed = g.param(&self.params, self.skill_embed);
        let position_embed = g.param(&self.params, self.position_embed);
        let w_query = g.param(&self.params, self.w_query);
        let w_key = g.param(&self.params, self.w_key);
        let w_value = g.param(&self.params, self.w_value);
        let w_concat = g.param(&self.params, self.w_concat);
        let ln1_gamma = g.param(&self.params, self.ln1_gamma);
        let ln1_beta = g.param(&self.params, self.ln1_beta);
        let w_ff1 = g.param(&self.params, self.w_ff1);
        let b_ff1 = g.param(&self.params, self.b_ff1);
        let w_ff2 = g.param(&self.params, self.w_ff2);
        let b_ff2 = g.param(&self.params, self.b_ff2);
        let ln2_gamma = g.param(&self.params, self.ln2_gamma);
        let ln2_beta = g.param(&self.params, self.ln2_beta);
        let w_out = g.param(&self.params, self.w_out);
        let b_out = g.param(&self.params, self.b_out);

        let mut inter_rows = Vec::with_capacity(n);
        let mut skill_rows = Vec::with_capacity(n);
        for t in 0..n {
            let idx = encode_interaction(window.skill_ids[t], window.labels[t], self.q)?;
            inter_rows.push((idx - 1) as usize);
            skill_rows.push((window.skill_ids[t] - 1) as usize);
        }
        let positions: Vec<usize> = (0..n).collect();
        let inter = g.gather_rows(interaction_embed, &inter_rows)?;
        let pos = g.gather_rows(position_embed, &positions)?;
        let context = g.add(inter, pos)?;
        let queries = g.gather_rows(skill_embed, &skill_rows)?;

        let qm = g.matmul(queries, w_query)?;
        let km = g.matmul(context, w_key)?;
        let vm = g.matmul(context, w_value)?;

        // strict causal mask: query row i may attend key rows j < i
        let mut mask = vec![false; n * n];
        for i in 0..n {
            for (j, slot) in mask[i * n..(i + 1) * n].iter_mut().enumerate() {
                *slot = j < i;
            }
        }

        let head_dim = self.dim / self.heads;
        let scale = 1.0 / (head_dim as f64).sqrt();
        let mut merged: Option<NodeId> = None;
        for h in 0..self.heads {
            let from = h * head_dim;
            let to = from + head_dim;
            let qh = g.slice_cols(qm, from, to)?;
            let kh = g.slice_cols(km, from, to)?;
            let vh = g.slice_cols(vm, from, to)?;
            let kt = g.transpose(kh);
            let scores = g.matmul(qh, kt)?;
            let scaled = g.affine(scores, scale, 0.0);
            let attn = g.masked_softmax_rows(scaled, &mask)?;
            let out = g.matmul(attn, vh)?;
            merged = Some(match merged {
                None => out,
                Some(acc) => g.concat_cols(acc, out)?,
            });
        }
        let attended = g.matmul(merged.expect("at least one head"), w_concat)?;

        let res1 = g.add(attended, queries)?;
        let x1 = g.layer_norm(res1, ln1_gamma, ln1_beta, LN_EPS)?;
        let ff_pre = g.matmul(x1, w_ff1)?;
        let ff_pre = g.add_row_broadcast(ff_pre, b_ff1)?;
        let ff_hidden = g.relu(ff_pre);
        let ff_out = g.matmul(ff_hidden, w_ff2)?;
        let ff_out = g.add_row_broadcast(ff_out, b_ff2)?;
        let res2 = g.add(ff_out, x1)?;
        let x2 = g.layer_norm(res2, ln2_gamma, ln2_beta, LN_EPS)?;

        let logits = g.matmul(x2, w_out)?;
        let logits = g.add_row_broadcast(logits, b_out)?;
        let probs = g.sigmoid(logits);
        let step_probs = (0..n)
            .map(|t| g.pick(probs, t, 0))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ForwardNodes {
            step_probs,
            y_columns: None,
        })
    }
}
