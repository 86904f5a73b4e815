use crate::numkit::ParamVector;

/// Chained Rosenbrock: `Σ_i b (x_{i+1} − x_i²)² + (a − x_i)²`.
#[derive(Clone, Copy, Debug)]
pub struct Rosenbrock {
    dim: usize,
    a: f64,
    b: f64,
}

impl Rosenbrock {
    pub fn new(dim: usize, a: f64, b: f64) -> Self {
        assert!(dim >= 2, "rosenbrock needs at least two coordinates");
        Self { dim, a, b }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(super) fn loss_grad(&self, x: &[f64], grad: &mut ParamVector) -> f64 {
        grad.fill(0.0);
        let mut loss = 0.0;
        for i in 0..self.dim - 1 {
            let r = x[i + 1] - x[i] * x[i];
            let s = self.a - x[i];
            loss += self.b * r * r + s * s;
            grad[i] += -4.0 * self.b * r * x[i] - 2.0 * s;
            grad[i + 1] += 2.0 * self.b * r;
        }
        loss
    }
}
