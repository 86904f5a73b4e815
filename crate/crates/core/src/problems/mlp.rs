//! Fully connected tanh network with a softmax cross-entropy head.
//!
//! Parameters are laid out layer by layer: the weight matrix (`out × in`,
//! row-major) followed by the bias vector.

use crate::error::{contract, Result};
use crate::numkit::{ParamVector, Rng};

#[derive(Clone, Debug, PartialEq)]
pub struct TinyMlpSpec {
    pub layer_widths: Vec<usize>,
    pub samples: usize,
    pub separation: f64,
    /// Probability that a label is flipped.
    pub label_noise: f64,
    /// 0 means full batch.
    pub batch_size: usize,
}

impl Default for TinyMlpSpec {
    fn default() -> Self {
        Self {
            layer_widths: vec![2, 16, 16, 2],
            samples: 512,
            separation: 2.0,
            label_noise: 0.05,
            batch_size: 32,
        }
    }
}

impl TinyMlpSpec {
    pub fn param_count(&self) -> usize {
        self.layer_widths.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub label: usize,
}

#[derive(Clone, Debug)]
pub struct TinyMlp {
    spec: TinyMlpSpec,
    data: Vec<Sample>,
    seed: u64,
}

impl TinyMlp {
    /// Builds the XOR-style dataset: four Gaussian blobs centered at
    /// `(±s, ±s, 0, …)`, labelled by quadrant parity, then label noise.
    pub fn new(spec: TinyMlpSpec, seed: u64) -> Self {
        let w = &spec.layer_widths;
        assert!(w.len() >= 2, "need at least input and output widths");
        assert!(w.iter().all(|&n| n >= 1) && w[w.len() - 1] >= 2 && w[0] >= 2);
        let mut rng = Rng::new(seed).substream("mlp-data", 0);
        let s = 0.5 * spec.separation;
        let data = (0..spec.samples)
            .map(|i| {
                let (qx, qy) = ((i & 1) as f64 * 2.0 - 1.0, ((i >> 1) & 1) as f64 * 2.0 - 1.0);
                let mut input: Vec<f64> = (0..w[0]).map(|_| rng.normal()).collect();
                input[0] += qx * s;
                input[1] += qy * s;
                let mut label = usize::from(qx * qy < 0.0);
                if rng.uniform() < spec.label_noise {
                    label = 1 - label;
                }
                Sample { input, label }
            })
            .collect();
        Self { spec, data, seed }
    }

    pub fn spec(&self) -> &TinyMlpSpec {
        &self.spec
    }

    pub fn data(&self) -> &[Sample] {
        &self.data
    }

    pub fn is_full_batch(&self) -> bool {
        self.spec.batch_size == 0 || self.spec.batch_size >= self.data.len()
    }

    /// Scaled-normal weights (std `1/√fan_in`), zero biases.
    pub fn initial_params(&self) -> ParamVector {
        let mut rng = Rng::new(self.seed).substream("mlp-init", 0);
        let mut x = Vec::with_capacity(self.spec.param_count());
        for w in self.spec.layer_widths.windows(2) {
            let std = 1.0 / (w[0] as f64).sqrt();
            x.extend((0..w[0] * w[1]).map(|_| std * rng.normal()));
            x.extend(std::iter::repeat_n(0.0, w[1]));
        }
        x.into()
    }

    pub(super) fn full_batch(&self) -> Vec<usize> {
        (0..self.data.len()).collect()
    }

    pub(super) fn sample_batch(&self, rng: &mut Rng) -> Vec<usize> {
        if self.is_full_batch() {
            return self.full_batch();
        }
        (0..self.spec.batch_size).map(|_| rng.index(self.data.len())).collect()
    }

    pub(super) fn loss_grad(&self, x: &[f64], batch: &[usize], grad: &mut ParamVector) -> f64 {
        self.accumulate(x, batch.iter().map(|&i| &self.data[i]), batch.len(), grad)
    }

    /// Mean cross-entropy and its gradient over an explicit batch.
    pub fn batch_loss_grad(&self, x: &[f64], batch: &[Sample]) -> Result<(f64, ParamVector)> {
        contract!(
            x.len() == self.spec.param_count(),
            "parameter vector has length {}, widths {:?} imply {}",
            x.len(),
            self.spec.layer_widths,
            self.spec.param_count()
        );
        contract!(!batch.is_empty(), "empty batch");
        let classes = *self.spec.layer_widths.last().unwrap();
        for s in batch {
            contract!(s.input.len() == self.spec.layer_widths[0], "sample input width mismatch");
            contract!(s.label < classes, "label {} out of range", s.label);
        }
        let mut grad = ParamVector::zeros(x.len());
        let loss = self.accumulate(x, batch.iter(), batch.len(), &mut grad);
        grad.ensure_finite("mlp gradient")?;
        Ok((loss, grad))
    }

    fn accumulate<'a>(
        &self,
        x: &[f64],
        batch: impl Iterator<Item = &'a Sample>,
        count: usize,
        grad: &mut ParamVector,
    ) -> f64 {
        let widths = &self.spec.layer_widths;
        let layers = widths.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for w in widths.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        grad.fill(0.0);
        let scale = 1.0 / count as f64;
        let mut loss = 0.0;
        let mut acts: Vec<Vec<f64>> = widths.iter().map(|&n| vec![0.0; n]).collect();
        let mut delta = Vec::new();
        let mut back = Vec::new();
        for s in batch {
            acts[0].copy_from_slice(&s.input);
            for l in 0..layers {
                let (n_in, n_out) = (widths[l], widths[l + 1]);
                let wm = &x[offsets[l]..offsets[l] + n_in * n_out];
                let b = &x[offsets[l] + n_in * n_out..offsets[l] + n_in * n_out + n_out];
                let (prev, next) = acts.split_at_mut(l + 1);
                for o in 0..n_out {
                    let z = b[o] + wm[o * n_in..(o + 1) * n_in].iter().zip(&prev[l]).map(|(a, c)| a * c).sum::<f64>();
                    next[0][o] = if l + 1 < layers { z.tanh() } else { z };
                }
            }
            let logits = &acts[layers];
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
            loss += lse - logits[s.label];
            delta.clear();
            delta.extend(logits.iter().map(|z| (z - lse).exp() * scale));
            delta[s.label] -= scale;
            for l in (0..layers).rev() {
                let (n_in, n_out) = (widths[l], widths[l + 1]);
                let w_off = offsets[l];
                let b_off = w_off + n_in * n_out;
                let a_in = &acts[l];
                for o in 0..n_out {
                    let d = delta[o];
                    for (gk, ak) in grad[w_off + o * n_in..w_off + (o + 1) * n_in].iter_mut().zip(a_in) {
                        *gk += d * ak;
                    }
                    grad[b_off + o] += d;
                }
                if l > 0 {
                    back.clear();
                    back.resize(n_in, 0.0);
                    for o in 0..n_out {
                        let row = &x[w_off + o * n_in..w_off + (o + 1) * n_in];
                        for (bk, wk) in back.iter_mut().zip(row) {
                            *bk += wk * delta[o];
                        }
                    }
                    for (bk, ak) in back.iter_mut().zip(a_in) {
                        *bk *= 1.0 - ak * ak;
                    }
                    std::mem::swap(&mut delta, &mut back);
                }
            }
        }
        loss * scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{central_diff, rel_err};
    use crate::problems::Problem;

    #[test]
    fn zero_weights_give_uniform_softmax() {
        let mlp = TinyMlp::new(TinyMlpSpec::default(), 1);
        let batch = vec![
            Sample { input: vec![1.0, 2.0], label: 0 },
            Sample { input: vec![-1.0, 0.5], label: 1 },
        ];
        let (loss, grad) = mlp.batch_loss_grad(&vec![0.0; mlp.spec().param_count()], &batch).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-12);
        assert!(grad.is_finite());
    }

    #[test]
    fn duplication_leaves_mean_loss_unchanged() {
        let mlp = TinyMlp::new(TinyMlpSpec::default(), 2);
        let x = mlp.initial_params();
        let batch: Vec<Sample> = mlp.data()[..16].to_vec();
        let doubled: Vec<Sample> = batch.iter().flat_map(|s| [s.clone(), s.clone()]).collect();
        let (l1, g1) = mlp.batch_loss_grad(&x, &batch).unwrap();
        let (l2, g2) = mlp.batch_loss_grad(&x, &doubled).unwrap();
        // Equal up to summation order.
        assert!(rel_err(l1, l2, 1e-300) < 1e-14);
        assert!(g1.max_abs_diff(&g2) < 1e-15);
    }

    #[test]
    fn gradient_check_on_deeper_net() {
        let spec = TinyMlpSpec {
            layer_widths: vec![3, 5, 4, 3],
            samples: 40,
            batch_size: 8,
            ..TinyMlpSpec::default()
        };
        let p = Problem::mlp(TinyMlp::new(spec, 3));
        let x = p.initial_point();
        let e = p.eval(&x, 2, 11).unwrap();
        for i in 0..p.dim() {
            let fd = central_diff(
                |v| {
                    let mut y = x.clone();
                    y[i] = v;
                    p.eval(&y, 2, 11).unwrap().loss
                },
                x[i],
                1e-5,
            )
            .unwrap();
            assert!(rel_err(e.grad[i], fd, 1e-4) <= 1e-6, "coord {i}");
        }
    }

    #[test]
    fn parameter_count_mismatch() {
        let mlp = TinyMlp::new(TinyMlpSpec::default(), 1);
        assert!(mlp.batch_loss_grad(&[0.0; 3], &mlp.data()[..2]).is_err());
        assert_eq!(TinyMlpSpec::default().param_count(), 2 * 16 + 16 + 16 * 16 + 16 + 16 * 2 + 2);
    }

    #[test]
    fn dataset_is_seed_determined() {
        let a = TinyMlp::new(TinyMlpSpec::default(), 5);
        let b = TinyMlp::new(TinyMlpSpec::default(), 5);
        assert_eq!(a.data(), b.data());
        assert_ne!(a.data(), TinyMlp::new(TinyMlpSpec::default(), 6).data());
    }
}
