use rand::Rng;

use super::matrix::Matrix;

/// Handle to one named tensor inside a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Borrowed view of one trainable tensor: value, accumulated gradient
/// and a stable name used in checkpoints and error messages.
#[derive(Debug, Clone, Copy)]
pub struct Parameter<'a> {
    pub name: &'a str,
    pub value: &'a Matrix,
    pub gradient: &'a Matrix,
}

/// All trainable tensors of one model, in creation order. Gradients live
/// beside values so a backward pass can accumulate while a graph still
/// holds copies of the values.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    names: Vec<String>,
    values: Vec<Matrix>,
    grads: Vec<Matrix>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Matrix) -> ParamId {
        let id = ParamId(self.values.len());
        self.grads.push(Matrix::zeros(value.rows(), value.cols()));
        self.values.push(value);
        self.names.push(name.into());
        id
    }

    /// Tensor initialized uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)).
    pub fn add_uniform(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        fan_in: usize,
        rng: &mut impl Rng,
    ) -> ParamId {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let m = Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-bound..bound));
        self.add(name, m)
    }

    pub fn add_zeros(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> ParamId {
        self.add(name, Matrix::zeros(rows, cols))
    }

    pub fn add_ones(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> ParamId {
        self.add(name, Matrix::from_fn(rows, cols, |_, _| 1.0))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> Parameter<'_> {
        Parameter {
            name: &self.names[id.0],
            value: &self.values[id.0],
            gradient: &self.grads[id.0],
        }
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn id_by_name(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn value_by_name(&self, name: &str) -> &Matrix {
        let id = self
            .id_by_name(name)
            .unwrap_or_else(|| panic!("no parameter named '{name}'"));
        self.value(id)
    }

    pub fn value_mut_by_name(&mut self, name: &str) -> &mut Matrix {
        let id = self
            .id_by_name(name)
            .unwrap_or_else(|| panic!("no parameter named '{name}'"));
        self.value_mut(id)
    }

    pub fn value(&self, id: ParamId) -> &Matrix {
        &self.values[id.0]
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.values[id.0]
    }

    pub fn grad(&self, id: ParamId) -> &Matrix {
        &self.grads[id.0]
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.grads[id.0]
    }

    /// Resets every gradient to all-zeros.
    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            for v in g.data_mut() {
                *v = 0.0;
            }
        }
    }

    pub(crate) fn accumulate_grad(&mut self, id: ParamId, delta: &Matrix) {
        let g = &mut self.grads[id.0];
        debug_assert_eq!(g.shape(), delta.shape());
        for (a, b) in g.data_mut().iter_mut().zip(delta.data()) {
            *a += b;
        }
    }

    /// Total number of scalar coordinates across all tensors.
    pub fn coordinate_count(&self) -> usize {
        self.values.iter().map(Matrix::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gradient_matches_value_shape_and_resets_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut set = ParamSet::new();
        let w = set.add_uniform("w", 3, 4, 4, &mut rng);
        assert_eq!(set.grad(w).shape(), set.value(w).shape());
        set.accumulate_grad(w, &Matrix::from_fn(3, 4, |_, _| 1.5));
        assert!(set.grad(w).data().iter().all(|&v| v == 1.5));
        set.zero_grads();
        assert!(set.grad(w).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_init_respects_fan_in_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut set = ParamSet::new();
        let w = set.add_uniform("w", 10, 10, 100, &mut rng);
        let bound = 0.1;
        assert!(set.value(w).data().iter().all(|v| v.abs() < bound));
        assert!(set.value(w).data().iter().any(|v| v.abs() > bound * 0.1));
    }
}
