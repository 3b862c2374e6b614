//! Finite-difference verification of every architecture's gradients on
//! a small two-window batch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kt_core::math::grad_check;
use kt_core::models::{Architecture, EncodedWindow, KtModel, ModelConfig};

fn small_config() -> ModelConfig {
    ModelConfig {
        dkt_hidden: 4,
        dkvmn_slots: 4,
        dkvmn_key_dim: 4,
        dkvmn_value_dim: 4,
        sakt_dim: 4,
        sakt_heads: 2,
        sakt_max_len: 8,
        kqn_dim: 4,
        ..ModelConfig::default()
    }
}

fn random_windows(seed: u64) -> Vec<EncodedWindow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..2)
        .map(|_| {
            let skills: Vec<u32> = (0..8).map(|_| rng.gen_range(1..=5)).collect();
            let labels: Vec<u8> = (0..8).map(|_| rng.gen_range(0..=1)).collect();
            EncodedWindow::new(skills, labels, vec![true; 8]).unwrap()
        })
        .collect()
}

fn check_architecture(arch: Architecture) -> f64 {
    let mut model = KtModel::build(arch, 5, &small_config(), 1234).unwrap();
    let windows = random_windows(99);
    let shared = model.clone();
    let err = grad_check(model.params_mut(), 1e-5, move |g, params| {
        // evaluate the two-window mean loss at the perturbed parameters
        let mut probe = shared.clone();
        *probe.params_mut() = params.clone();
        let losses = windows
            .iter()
            .map(|w| probe.window_loss(g, w))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| kt_core::math::MathError::Contract(e.to_string()))?;
        let total = g.add_n(&losses)?;
        Ok(g.affine(total, 0.5, 0.0))
    })
    .unwrap();
    err
}

#[test]
fn dkt_gradients_match_finite_differences() {
    let err = check_architecture(Architecture::Dkt);
    assert!(err <= 1e-4, "DKT max relative error {err}");
}

#[test]
fn dkt_plus_gradients_match_finite_differences() {
    let err = check_architecture(Architecture::DktPlus);
    assert!(err <= 1e-4, "DKT+ max relative error {err}");
}

#[test]
fn dkvmn_gradients_match_finite_differences() {
    let err = check_architecture(Architecture::Dkvmn);
    assert!(err <= 1e-4, "DKVMN max relative error {err}");
}

#[test]
fn sakt_gradients_match_finite_differences() {
    let err = check_architecture(Architecture::Sakt);
    assert!(err <= 1e-4, "SAKT max relative error {err}");
}

#[test]
fn kqn_gradients_match_finite_differences() {
    let err = check_architecture(Architecture::Kqn);
    assert!(err <= 1e-4, "KQN max relative error {err}");
}
