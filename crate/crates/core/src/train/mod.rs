//! Deterministic mini-batch training: seeded shuffling, shared-tape
//! backward passes, optional global-norm clipping, and Adam or SGD
//! updates. One thread owns the parameters for the whole run.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use thiserror::Error;

use crate::data::{window, DatasetSplit};
use crate::math::{Graph, MathError, Matrix, ParamSet};
use crate::metrics::{auc, score_test_split, AucOutcome};
use crate::models::{EncodedWindow, KtModel, ModelError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("non-finite gradient in parameter '{0}'")]
    NonFiniteGradient(String),
    #[error("training split has no usable windows")]
    EmptyTrainSet,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Adam,
    Sgd,
}

impl Optimizer {
    pub fn parse(s: &str) -> Option<Optimizer> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Some(Optimizer::Adam),
            "sgd" => Some(Optimizer::Sgd),
            _ => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Optimizer::Adam => "adam",
            Optimizer::Sgd => "sgd",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub max_seq_len: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub gradient_clip_norm: Option<f64>,
    /// Log test AUC per epoch; never used for model selection.
    pub log_val_auc: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 256,
            epochs: 100,
            learning_rate: 0.001,
            optimizer: Optimizer::Adam,
            max_seq_len: 100,
            seed: 42,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            gradient_clip_norm: Some(5.0),
            log_val_auc: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::Model(ModelError::BadConfig(
                "batch_size must be >= 1".into(),
            )));
        }
        if self.learning_rate <= 0.0 {
            return Err(TrainError::Model(ModelError::BadConfig(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            ))));
        }
        Ok(())
    }
}

/// First/second moment estimates for Adam, one per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: u64,
}

impl AdamState {
    pub fn for_params(params: &ParamSet) -> AdamState {
        let zeros: Vec<Matrix> = params
            .ids()
            .map(|id| {
                let shape = params.value(id).shape();
                Matrix::zeros(shape.0, shape.1)
            })
            .collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

fn check_finite_grads(params: &ParamSet) -> Result<(), TrainError> {
    for id in params.ids() {
        if !params.grad(id).is_finite() {
            return Err(TrainError::NonFiniteGradient(params.name(id).to_string()));
        }
    }
    Ok(())
}

/// Bias-corrected Adam update from the gradients stored in `params`.
pub fn adam_step(
    params: &mut ParamSet,
    moments: &mut AdamState,
    config: &TrainConfig,
) -> Result<(), TrainError> {
    check_finite_grads(params)?;
    moments.t += 1;
    let t = moments.t as i32;
    let bc1 = 1.0 - config.beta1.powi(t);
    let bc2 = 1.0 - config.beta2.powi(t);
    for id in params.ids().collect::<Vec<_>>() {
        let idx = id.index();
        let grad = params.grad(id).clone();
        for (k, &g) in grad.data().iter().enumerate() {
            let m = &mut moments.m[idx].data_mut()[k];
            *m = config.beta1 * *m + (1.0 - config.beta1) * g;
            let v = &mut moments.v[idx].data_mut()[k];
            *v = config.beta2 * *v + (1.0 - config.beta2) * g * g;
            let m_hat = moments.m[idx].data()[k] / bc1;
            let v_hat = moments.v[idx].data()[k] / bc2;
            params.value_mut(id).data_mut()[k] -=
                config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
    Ok(())
}

/// Plain gradient descent: w <- w - lr * g.
pub fn sgd_step(params: &mut ParamSet, config: &TrainConfig) -> Result<(), TrainError> {
    check_finite_grads(params)?;
    for id in params.ids().collect::<Vec<_>>() {
        let grad = params.grad(id).clone();
        for (k, &g) in grad.data().iter().enumerate() {
            params.value_mut(id).data_mut()[k] -= config.learning_rate * g;
        }
    }
    Ok(())
}

fn scale_grads(params: &mut ParamSet, factor: f64) {
    for id in params.ids().collect::<Vec<_>>() {
        for g in params.grad_mut(id).data_mut() {
            *g *= factor;
        }
    }
}

fn grad_global_norm(params: &ParamSet) -> f64 {
    params
        .ids()
        .map(|id| {
            params
                .grad(id)
                .data()
                .iter()
                .map(|g| g * g)
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub val_auc: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// Windows dropped for having fewer than two interactions.
    pub skipped_windows: usize,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,val_auc,seconds\n");
        for e in &self.epochs {
            let auc = e.val_auc.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", e.epoch, e.loss, auc, e.seconds));
        }
        out
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.loss)
    }
}

/// Builds the usable training windows (and the skipped count) for a split.
pub fn training_windows(
    data: &DatasetSplit,
    max_seq_len: usize,
) -> Result<(Vec<EncodedWindow>, usize), TrainError> {
    let mut windows = Vec::new();
    let mut skipped = 0usize;
    for seq in &data.train {
        for piece in window(seq, max_seq_len)? {
            if piece.usable_for_next_step() {
                windows.push(EncodedWindow::from_sequence(&piece));
            } else {
                skipped += 1;
            }
        }
    }
    Ok((windows, skipped))
}

/// Trains in place: epochs of seeded-shuffle mini-batches; per batch the
/// mean window loss is backpropagated, optionally clipped at a global
/// norm, and stepped. Batch membership comes from the shuffle but
/// gradients accumulate in ascending window order, so a full batch is
/// shuffle-independent.
pub fn train(
    model: &mut KtModel,
    data: &DatasetSplit,
    config: &TrainConfig,
) -> Result<TrainHistory, TrainError> {
    config.validate()?;
    let (windows, skipped_windows) = training_windows(data, config.max_seq_len)?;
    if windows.is_empty() && config.epochs > 0 {
        return Err(TrainError::EmptyTrainSet);
    }
    let mut history = TrainHistory {
        epochs: Vec::with_capacity(config.epochs),
        skipped_windows,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::for_params(model.params());

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let mut order: Vec<usize> = (0..windows.len()).collect();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            let mut batch: Vec<usize> = chunk.to_vec();
            batch.sort_unstable();
            model.params_mut().zero_grads();
            for &wi in &batch {
                let mut g = Graph::new();
                let loss = model.window_loss(&mut g, &windows[wi])?;
                let value = g.scalar(loss)?;
                if !value.is_finite() {
                    return Err(TrainError::NonFiniteLoss {
                        epoch,
                        batch: batch_idx,
                    });
                }
                loss_sum += value;
                g.backward(loss, model.params_mut())?;
            }
            scale_grads(model.params_mut(), 1.0 / batch.len() as f64);
            if let Some(clip) = config.gradient_clip_norm {
                let norm = grad_global_norm(model.params());
                if norm > clip {
                    scale_grads(model.params_mut(), clip / norm);
                }
            }
            match config.optimizer {
                Optimizer::Adam => adam_step(model.params_mut(), &mut adam, config)?,
                Optimizer::Sgd => sgd_step(model.params_mut(), config)?,
            }
        }
        let val_auc = if config.log_val_auc && !data.test.is_empty() {
            let scored = score_test_split(model, data, config.max_seq_len)
                .map_err(|e| TrainError::Model(ModelError::BadWindow(e.to_string())))?;
            match auc(&scored) {
                AucOutcome::Value(v) => Some(v),
                AucOutcome::Undefined { .. } => None,
            }
        } else {
            None
        };
        history.epochs.push(EpochStats {
            epoch,
            loss: loss_sum / windows.len() as f64,
            val_auc,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok(history)
}
