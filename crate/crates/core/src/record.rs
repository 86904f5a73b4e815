//! Time series produced by a run, plus its summary block.

use std::collections::BTreeMap;

use crate::numkit::ParamVector;
use crate::poly_opt::{CoefficientVector, NUM_COEFS};

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 14] = [
    "step",
    "loss",
    "lr",
    "grad_norm",
    "beta1",
    "beta2",
    "beta3",
    "rho",
    "c",
    "gamma",
    "beta1_lion",
    "beta2_lion",
    "eff_lr_min",
    "eff_lr_max",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RecordRow {
    pub step: u64,
    /// `f_t(x_{t−1})`, the loss whose gradient drove step `t`.
    pub loss: f64,
    pub lr: f64,
    pub grad_norm: f64,
    /// Coefficients after step `t`; NaN for optimizers outside the polytope.
    pub q: [f64; NUM_COEFS],
    pub eff_lr_min: f64,
    pub eff_lr_max: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Summary {
    pub schema_version: u32,
    pub seed: u64,
    pub steps: u64,
    pub wall_clock_secs: f64,
    pub final_loss: f64,
    pub final_q: Option<CoefficientVector>,
    pub final_x: Vec<f64>,
    pub config_hash: String,
    pub config: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct RunRecord {
    pub rows: Vec<RecordRow>,
    pub summary: Summary,
}

/// Default stride: every step up to 10⁴ steps, every 10th beyond.
pub fn default_stride(steps: u64) -> u64 {
    if steps <= 10_000 {
        1
    } else {
        10
    }
}

impl RunRecord {
    pub(crate) fn new(seed: u64, steps: u64) -> Self {
        Self {
            rows: Vec::new(),
            summary: Summary {
                schema_version: SCHEMA_VERSION,
                seed,
                steps,
                ..Summary::default()
            },
        }
    }

    /// Rows land at step 1, every multiple of `stride`, and the last step.
    pub(crate) fn wants(t: u64, stride: u64, steps: u64) -> bool {
        t == 1 || t == steps || t.is_multiple_of(stride.max(1))
    }

    pub(crate) fn push(&mut self, step: u64, loss: f64, lr: f64, grad: &[f64], q: Option<&CoefficientVector>, eff: &ParamVector) {
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let (lo, hi) = eff
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        self.rows.push(RecordRow {
            step,
            loss,
            lr,
            grad_norm,
            q: q.map_or([f64::NAN; NUM_COEFS], CoefficientVector::to_array),
            eff_lr_min: lo,
            eff_lr_max: hi,
        });
    }

    /// A named column as a series, in row order.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = CSV_COLUMNS.iter().position(|c| *c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match idx {
                    0 => r.step as f64,
                    1 => r.loss,
                    2 => r.lr,
                    3 => r.grad_norm,
                    12 => r.eff_lr_min,
                    13 => r.eff_lr_max,
                    k => r.q[k - 4],
                })
                .collect(),
        )
    }

    /// Bitwise comparison of the row data, treating equal NaNs as equal.
    pub fn rows_identical(&self, other: &Self) -> bool {
        let bits = |r: &RecordRow| {
            let mut v = vec![r.step, r.loss.to_bits(), r.lr.to_bits(), r.grad_norm.to_bits()];
            v.extend(r.q.iter().map(|x| x.to_bits()));
            v.extend([r.eff_lr_min.to_bits(), r.eff_lr_max.to_bits()]);
            v
        };
        self.rows.len() == other.rows.len() && self.rows.iter().zip(&other.rows).all(|(a, b)| bits(a) == bits(b))
    }
}
