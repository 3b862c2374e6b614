//! Central-finite-difference verification of the adjoint pass.

use super::graph::{Graph, NodeId};
use super::matrix::{MathError, Matrix};
use super::params::ParamSet;

/// Compares analytic gradients against central finite differences for
/// every coordinate of every parameter and returns the worst relative
/// error: |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
///
/// `build` must construct the scalar loss on the supplied graph from the
/// current parameter values; it is re-run twice per coordinate.
pub fn grad_check<F>(set: &mut ParamSet, eps: f64, mut build: F) -> Result<f64, MathError>
where
    F: FnMut(&mut Graph, &ParamSet) -> Result<NodeId, MathError>,
{
    if eps <= 0.0 {
        return Err(MathError::Contract(format!("grad_check eps must be > 0, got {eps}")));
    }

    set.zero_grads();
    let mut g = Graph::new();
    let loss = build(&mut g, set)?;
    let base = g.scalar(loss)?;
    if !base.is_finite() {
        return Err(MathError::NonFinite {
            context: "grad_check loss".into(),
        });
    }
    g.backward(loss, set)?;
    let analytic: Vec<Matrix> = set.ids().map(|id| set.grad(id).clone()).collect();

    let mut eval = |set: &ParamSet| -> Result<f64, MathError> {
        let mut g = Graph::new();
        let loss = build(&mut g, set)?;
        let v = g.scalar(loss)?;
        if !v.is_finite() {
            return Err(MathError::NonFinite {
                context: "grad_check perturbed loss".into(),
            });
        }
        Ok(v)
    };

    let mut max_rel = 0.0_f64;
    let ids: Vec<_> = set.ids().collect();
    for (pi, id) in ids.iter().enumerate() {
        for i in 0..set.value(*id).len() {
            let original = set.value(*id).data()[i];
            set.value_mut(*id).data_mut()[i] = original + eps;
            let plus = eval(set)?;
            set.value_mut(*id).data_mut()[i] = original - eps;
            let minus = eval(set)?;
            set.value_mut(*id).data_mut()[i] = original;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic[pi].data()[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_function_checks_at_zero() {
        let mut set = ParamSet::new();
        set.add("w", Matrix::zeros(2, 2));
        let err = grad_check(&mut set, 1e-5, |g, _| {
            Ok(g.leaf(Matrix::from_vec(1, 1, vec![0.0]).unwrap()))
        })
        .unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn quadratic_checks_below_1e9() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut set = ParamSet::new();
        let w = set.add("w", Matrix::from_fn(3, 2, |_, _| rng.gen_range(-2.0..2.0)));
        let err = grad_check(&mut set, 1e-5, |g, set| {
            let wn = g.param(set, w);
            let s = g.sq_sum(wn);
            Ok(g.affine(s, 0.5, 0.0))
        })
        .unwrap();
        assert!(err <= 1e-9, "relative error {err}");
    }

    #[test]
    fn rejects_non_positive_eps() {
        let mut set = ParamSet::new();
        set.add("w", Matrix::zeros(1, 1));
        let res = grad_check(&mut set, 0.0, |g, _| {
            Ok(g.leaf(Matrix::from_vec(1, 1, vec![0.0]).unwrap()))
        });
        assert!(matches!(res, Err(MathError::Contract(_))));
    }

    #[test]
    fn composite_of_primitives_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut set = ParamSet::new();
        let w1 = set.add("w1", Matrix::from_fn(4, 3, |_, _| rng.gen_range(-0.8..0.8)));
        let w2 = set.add("w2", Matrix::from_fn(2, 4, |_, _| rng.gen_range(-0.8..0.8)));
        let gamma = set.add("gamma", Matrix::from_fn(1, 4, |_, _| 1.0));
        let beta = set.add_zeros("beta", 1, 4);
        let x = Matrix::from_fn(3, 1, |_, _| rng.gen_range(-1.0..1.0));

        let err = grad_check(&mut set, 1e-5, |g, set| {
            let w1n = g.param(set, w1);
            let w2n = g.param(set, w2);
            let gn = g.param(set, gamma);
            let bn = g.param(set, beta);
            let xn = g.leaf(x.clone());
            let h = g.matmul(w1n, xn)?;
            let ht = g.transpose(h);
            let ln = g.layer_norm(ht, gn, bn, 1e-5)?;
            let back = g.transpose(ln);
            let t = g.tanh(back);
            let o = g.matmul(w2n, t)?;
            let s = g.sigmoid(o);
            g.bce_mean(s, &[1.0, 0.0])
        })
        .unwrap();
        assert!(err <= 1e-4, "relative error {err}");
    }
}
