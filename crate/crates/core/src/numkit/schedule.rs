use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Learning-rate schedule indexed by 1-based step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Schedule {
    Constant {
        peak: f64,
    },
    /// `peak / sqrt(t)`.
    InvSqrt {
        peak: f64,
    },
    /// Linear ramp from 0 to `peak` over `warmup_steps`, then a half-cosine
    /// from `peak` down to `final_lr` at `total_steps`.
    CosineWarmup {
        peak: f64,
        final_lr: f64,
        warmup_steps: u64,
        total_steps: u64,
    },
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Schedule::Constant { peak } | Schedule::InvSqrt { peak } => peak > 0.0 && peak.is_finite(),
            Schedule::CosineWarmup {
                peak,
                final_lr,
                warmup_steps,
                total_steps,
            } => {
                peak > 0.0
                    && peak.is_finite()
                    && final_lr >= 0.0
                    && final_lr.is_finite()
                    && total_steps > 0
                    && warmup_steps <= total_steps
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Contract(format!("invalid schedule {self:?}")))
        }
    }

    /// Learning rate at step `t >= 1`.
    pub fn at(&self, t: u64) -> Result<f64> {
        if t == 0 {
            return Err(Error::Range("schedule steps are 1-based; got t = 0".into()));
        }
        Ok(match *self {
            Schedule::Constant { peak } => peak,
            Schedule::InvSqrt { peak } => peak / (t as f64).sqrt(),
            Schedule::CosineWarmup {
                peak,
                final_lr,
                warmup_steps,
                total_steps,
            } => {
                if t > total_steps {
                    return Err(Error::Range(format!(
                        "step {t} is past the cosine schedule's total of {total_steps}"
                    )));
                }
                if t <= warmup_steps {
                    peak * t as f64 / warmup_steps as f64
                } else {
                    let span = (total_steps - warmup_steps) as f64;
                    let progress = (t - warmup_steps) as f64 / span;
                    final_lr + 0.5 * (peak - final_lr) * (1.0 + (PI * progress).cos())
                }
            }
        })
    }
}
