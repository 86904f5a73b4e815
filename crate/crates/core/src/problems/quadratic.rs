use crate::numkit::{ParamVector, Rng};

/// `f_t(x) = ½ (x − c)ᵀ A (x − c) + noise · ξ_tᵀ x`, with `ξ_t ~ N(0, I)` drawn per step.
#[derive(Clone, Debug)]
pub struct Quadratic {
    dim: usize,
    /// Row-major symmetric positive semi-definite matrix.
    hessian: Vec<f64>,
    center: Vec<f64>,
    noise: f64,
}

impl Quadratic {
    pub fn diagonal(diag: Vec<f64>, center: Vec<f64>, noise: f64) -> Self {
        let dim = diag.len();
        assert_eq!(center.len(), dim, "center length must match the diagonal");
        let mut hessian = vec![0.0; dim * dim];
        for (i, d) in diag.into_iter().enumerate() {
            hessian[i * dim + i] = d;
        }
        Self {
            dim,
            hessian,
            center,
            noise,
        }
    }

    /// Random rotated quadratic with eigenvalues log-spaced over `[1, cond]`
    /// and a standard-normal center.
    pub fn random(dim: usize, cond: f64, noise: f64, seed: u64) -> Self {
        assert!(dim >= 1 && cond >= 1.0);
        let mut rng = Rng::new(seed).substream("quadratic-data", 0);
        let q = random_orthogonal(dim, &mut rng);
        let eig: Vec<f64> = (0..dim)
            .map(|i| {
                let frac = if dim == 1 { 0.0 } else { i as f64 / (dim - 1) as f64 };
                cond.powf(frac)
            })
            .collect();
        let mut hessian = vec![0.0; dim * dim];
        for r in 0..dim {
            for c in r..dim {
                let v: f64 = (0..dim).map(|k| q[k * dim + r] * eig[k] * q[k * dim + c]).sum();
                hessian[r * dim + c] = v;
                hessian[c * dim + r] = v;
            }
        }
        let center = (0..dim).map(|_| rng.normal()).collect();
        Self {
            dim,
            hessian,
            center,
            noise,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub(super) fn loss_grad(&self, x: &[f64], noise: Option<&mut Rng>, grad: &mut ParamVector) -> f64 {
        let n = self.dim;
        let diff: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let mut loss = 0.0;
        for r in 0..n {
            let row = &self.hessian[r * n..(r + 1) * n];
            let ad: f64 = row.iter().zip(&diff).map(|(a, d)| a * d).sum();
            grad[r] = ad;
            loss += 0.5 * diff[r] * ad;
        }
        if let Some(rng) = noise {
            for (g, xi) in grad.iter_mut().zip(x) {
                let xi_t = self.noise * rng.normal();
                *g += xi_t;
                loss += xi_t * xi;
            }
        }
        loss
    }
}

/// Gram–Schmidt on a Gaussian matrix; rows of the result are orthonormal.
fn random_orthogonal(n: usize, rng: &mut Rng) -> Vec<f64> {
    let mut q = vec![0.0; n * n];
    let mut i = 0;
    while i < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        for j in 0..i {
            let row = &q[j * n..(j + 1) * n];
            let proj: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (vk, rk) in v.iter_mut().zip(row) {
                *vk -= proj * rk;
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        for (k, vk) in v.iter().enumerate() {
            q[i * n + k] = vk / norm;
        }
        i += 1;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Problem;

    #[test]
    fn isotropic_bowl() {
        let p = Problem::quadratic(Quadratic::diagonal(vec![2.0, 2.0], vec![0.0, 0.0], 0.0));
        let e = p.eval(&[3.0, -1.0], 1, 0).unwrap();
        assert_eq!(e.loss, 10.0);
        assert_eq!(e.grad.as_slice(), &[6.0, -2.0]);
    }

    #[test]
    fn random_quadratic_is_minimized_at_center() {
        let q = Quadratic::random(20, 100.0, 0.0, 4);
        let p = Problem::quadratic(q.clone());
        let e = p.eval(q.center(), 1, 0).unwrap();
        assert!(e.loss.abs() < 1e-24);
        assert!(e.grad.norm() < 1e-12);
        assert!(!p.is_stochastic());
    }
}
