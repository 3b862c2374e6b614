//! DKT: a plain tanh recurrent cell over one-hot interaction vectors
//! with a sigmoid readout over all skills. DKT+ shares this forward and
//! adds reconstruction and waviness penalties to the loss.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::math::{Graph, Matrix, NodeId, ParamId, ParamSet};

use super::{encode_interaction, next_step_bce, EncodedWindow, ForwardNodes, ModelError};

#[derive(Debug, Clone)]
pub struct DktState {
    pub q: usize,
    pub hidden: usize,
    pub seed: u64,
    pub params: ParamSet,
    w_hx: ParamId,
    w_hh: ParamId,
    b_h: ParamId,
    w_yh: ParamId,
    b_y: ParamId,
}

impl DktState {
    pub fn new(q: usize, hidden: usize, seed: u64) -> DktState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let w_hx = params.add_uniform("w_hx", hidden, 2 * q, 2 * q, &mut rng);
        let w_hh = params.add_uniform("w_hh", hidden, hidden, hidden, &mut rng);
        let b_h = params.add_zeros("b_h", hidden, 1);
        let w_yh = params.add_uniform("w_yh", q, hidden, hidden, &mut rng);
        let b_y = params.add_zeros("b_y", q, 1);
        DktState {
            q,
            hidden,
            seed,
            params,
            w_hx,
            w_hh,
            b_h,
            w_yh,
            b_y,
        }
    }

    /// h_t = tanh(W_hx x_t + W_hh h_{t-1} + b_h); y_t = sigmoid(W_yh h_t + b_y).
    /// The prediction for step t reads component skill_t of y_{t-1}; step 0
    /// reads the readout of the zero initial state.
    pub(crate) fn forward(
        &self,
        g: &mut Graph,
        window: &EncodedWindow,
    ) -> Result<ForwardNodes, ModelError> {
        let n = window.valid_len();
        let w_hx = g.param(&self.params, self.w_hx);
        let w_hh = g.param(&self.params, self.w_hh);
        let b_h = g.param(&self.params, self.b_h);
        let w_yh = g.param(&self.params, self.w_yh);
        let b_y = g.param(&self.params, self.b_y);

        let mut h = g.leaf(Matrix::zeros(self.hidden, 1));
        let readout = |g: &mut Graph, h: NodeId| -> Result<NodeId, ModelError> {
            let proj = g.matmul(w_yh, h)?;
            let pre = g.add(proj, b_y)?;
            Ok(g.sigmoid(pre))
        };

        let mut step_probs = Vec::with_capacity(n);
        let mut y_columns = Vec::with_capacity(n);
        let y_prior = readout(g, h)?;
        step_probs.push(g.pick(y_prior, (window.skill_ids[0] - 1) as usize, 0)?);

        for t in 0..n {
            let idx = encode_interaction(window.skill_ids[t], window.labels[t], self.q)?;
            let x = g.leaf(Matrix::one_hot(2 * self.q, (idx - 1) as usize)?);
            let from_input = g.matmul(w_hx, x)?;
            let from_state = g.matmul(w_hh, h)?;
            let pre = g.add_n(&[from_input, from_state, b_h])?;
            h = g.tanh(pre);
            let y = readout(g, h)?;
            y_columns.push(y);
            if t + 1 < n {
                step_probs.push(g.pick(y, (window.skill_ids[t + 1] - 1) as usize, 0)?);
            }
        }
        Ok(ForwardNodes {
            step_probs,
            y_columns: Some(y_columns),
        })
    }

    /// L' = L + lr*r + lw1*w1 + lw2*w2sq, where r reconstructs the
    /// current response and w1/w2sq measure change between consecutive
    /// output vectors. Zero-weighted terms are skipped, so the all-zero
    /// config reduces to the plain next-step loss bit for bit.
    pub(crate) fn regularized_loss(
        &self,
        g: &mut Graph,
        nodes: &ForwardNodes,
        window: &EncodedWindow,
        cfg: &DktPlusConfig,
    ) -> Result<NodeId, ModelError> {
        cfg.validate()?;
        let mut loss = next_step_bce(g, nodes, window)?;
        let y = nodes
            .y_columns
            .as_ref()
            .expect("DKT forward always produces output vectors");
        let n = window.valid_len();

        if cfg.lambda_r > 0.0 {
            let picks: Vec<NodeId> = (0..n)
                .map(|t| g.pick(y[t], (window.skill_ids[t] - 1) as usize, 0))
                .collect::<Result<_, _>>()?;
            let stacked = g.stack_rows(&picks)?;
            let targets: Vec<f64> = window.labels[..n].iter().map(|&l| l as f64).collect();
            let r = g.bce_mean(stacked, &targets)?;
            let scaled = g.affine(r, cfg.lambda_r, 0.0);
            loss = g.add(loss, scaled)?;
        }

        if (cfg.lambda_w1 > 0.0 || cfg.lambda_w2 > 0.0) && n >= 2 {
            let denom = ((n - 1) * self.q) as f64;
            if cfg.lambda_w1 > 0.0 {
                let terms: Vec<NodeId> = (0..n - 1)
                    .map(|t| {
                        let d = g.sub(y[t + 1], y[t])?;
                        Ok(g.abs_sum(d))
                    })
                    .collect::<Result<_, ModelError>>()?;
                let total = g.add_n(&terms)?;
                let w1 = g.affine(total, cfg.lambda_w1 / denom, 0.0);
                loss = g.add(loss, w1)?;
            }
            if cfg.lambda_w2 > 0.0 {
                let terms: Vec<NodeId> = (0..n - 1)
                    .map(|t| {
                        let d = g.sub(y[t + 1], y[t])?;
                        Ok(g.sq_sum(d))
                    })
                    .collect::<Result<_, ModelError>>()?;
                let total = g.add_n(&terms)?;
                let w2sq = g.affine(total, cfg.lambda_w2 / denom, 0.0);
                loss = g.add(loss, w2sq)?;
            }
        }
        Ok(loss)
    }
}

/// Regularization weights for DKT+. All zero reduces the loss to plain
/// DKT's exactly.
#[derive(Debug, Clone, Copy)]
pub struct DktPlusConfig {
    pub lambda_r: f64,
    pub lambda_w1: f64,
    pub lambda_w2: f64,
}

impl Default for DktPlusConfig {
    /// Shipped defaults; configuration values, not published ones.
    fn default() -> Self {
        DktPlusConfig {
            lambda_r: 0.10,
            lambda_w1: 0.003,
            lambda_w2: 3.0,
        }
    }
}

impl DktPlusConfig {
    pub const ZERO: DktPlusConfig = DktPlusConfig {
        lambda_r: 0.0,
        lambda_w1: 0.0,
        lambda_w2: 0.0,
    };

    pub fn is_zero(&self) -> bool {
        self.lambda_r == 0.0 && self.lambda_w1 == 0.0 && self.lambda_w2 == 0.0
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.lambda_r < 0.0 || self.lambda_w1 < 0.0 || self.lambda_w2 < 0.0 {
            return Err(ModelError::BadConfig(format!(
                "DKT+ lambdas must be non-negative, got ({}, {}, {})",
                self.lambda_r, self.lambda_w1, self.lambda_w2
            )));
        }
        Ok(())
    }
}
