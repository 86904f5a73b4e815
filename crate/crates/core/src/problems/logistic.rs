use crate::numkit::{ParamVector, Rng};

/// Binary logistic regression on two Gaussian clusters.
///
/// Parameters are `[w_1 .. w_{dim-1}, b]`; labels are ±1 and the cluster means
/// are `±(separation/2)·u` for a random unit direction `u`. Loss is the mean
/// log-loss over the minibatch plus `½·l2·‖w‖²`.
#[derive(Clone, Debug)]
pub struct LogisticSynth {
    dim: usize,
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    batch_size: usize,
    l2: f64,
}

impl LogisticSynth {
    pub fn new(dim: usize, samples: usize, separation: f64, batch_size: usize, l2: f64, seed: u64) -> Self {
        assert!(dim >= 2 && samples >= 2);
        let mut rng = Rng::new(seed).substream("logistic-data", 0);
        let k = dim - 1;
        let mut dir: Vec<f64> = (0..k).map(|_| rng.normal()).collect();
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        dir.iter_mut().for_each(|d| *d /= norm);
        let mut features = Vec::with_capacity(samples);
        let mut labels = Vec::with_capacity(samples);
        for i in 0..samples {
            let y = if i % 2 == 0 { 1.0 } else { -1.0 };
            features.push(dir.iter().map(|d| y * 0.5 * separation * d + rng.normal()).collect());
            labels.push(y);
        }
        Self {
            dim,
            features,
            labels,
            batch_size,
            l2,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> usize {
        self.labels.len()
    }

    /// A batch size of 0 (or at least the dataset size) means the full dataset every step.
    pub fn is_full_batch(&self) -> bool {
        self.batch_size == 0 || self.batch_size >= self.samples()
    }

    pub(super) fn full_batch(&self) -> Vec<usize> {
        (0..self.samples()).collect()
    }

    pub(super) fn sample_batch(&self, rng: &mut Rng) -> Vec<usize> {
        if self.is_full_batch() {
            return self.full_batch();
        }
        (0..self.batch_size).map(|_| rng.index(self.samples())).collect()
    }

    pub(super) fn loss_grad(&self, x: &[f64], batch: &[usize], grad: &mut ParamVector) -> f64 {
        let k = self.dim - 1;
        let (w, b) = (&x[..k], x[k]);
        grad.fill(0.0);
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for &i in batch {
            let z = &self.features[i];
            let y = self.labels[i];
            let margin = y * (w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + b);
            loss += softplus(-margin);
            // d/dmargin softplus(−margin) = −σ(−margin)
            let coef = -y * sigmoid(-margin) * scale;
            for (g, zi) in grad[..k].iter_mut().zip(z) {
                *g += coef * zi;
            }
            grad[k] += coef;
        }
        loss *= scale;
        for (g, wi) in grad[..k].iter_mut().zip(w) {
            *g += self.l2 * wi;
            loss += 0.5 * self.l2 * wi * wi;
        }
        loss
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Problem;

    #[test]
    fn zero_weights_give_ln2() {
        let p = Problem::logistic(LogisticSynth::new(4, 50, 3.0, 0, 0.0, 2));
        let e = p.eval(&[0.0; 4], 1, 0).unwrap();
        assert!((e.loss - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(-1000.0), 0.0);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-16);
    }
}
