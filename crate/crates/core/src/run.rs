//! The shared training loop for fixed optimizers.

use std::time::Instant;

use crate::base_opt::Stepper;
use crate::error::{contract, Result};
use crate::numkit::{ParamVector, Schedule};
use crate::poly_opt::CoefficientVector;
use crate::problems::Problem;
use crate::record::{default_stride, RunRecord};

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub steps: u64,
    pub seed: u64,
    pub schedule: Schedule,
    pub eps: f64,
    pub weight_decay: f64,
    /// `None` picks [`default_stride`].
    pub stride: Option<u64>,
}

impl RunOptions {
    pub fn new(steps: u64, seed: u64, schedule: Schedule) -> Self {
        Self {
            steps,
            seed,
            schedule,
            eps: 1e-8,
            weight_decay: 0.0,
            stride: None,
        }
    }

    pub fn stride(&self) -> u64 {
        self.stride.unwrap_or_else(|| default_stride(self.steps))
    }

    pub(crate) fn validate(&self) -> Result<()> {
        contract!(self.steps >= 1, "a run needs at least one step");
        contract!(self.eps >= 0.0, "eps must be non-negative");
        contract!(self.weight_decay >= 0.0, "weight decay must be non-negative");
        self.schedule.validate()
    }
}

/// What a step saw, handed to observers before the update is applied.
#[derive(Debug)]
pub struct Progress<'a> {
    pub t: u64,
    /// The point `x_{t−1}` at which `f_t` was evaluated.
    pub x: &'a [f64],
    pub loss: f64,
    pub grad: &'a [f64],
    pub lr: f64,
    /// Coefficients after step `t`, when the optimizer has them.
    pub q: Option<&'a CoefficientVector>,
}

/// Runs `stepper` on `problem`, projecting onto the constraint box after every step.
pub fn run_fixed(problem: &Problem, stepper: &mut dyn Stepper, opts: &RunOptions) -> Result<(ParamVector, RunRecord)> {
    run_fixed_observed(problem, stepper, opts, &mut |_| {})
}

pub fn run_fixed_observed(
    problem: &Problem,
    stepper: &mut dyn Stepper,
    opts: &RunOptions,
    observer: &mut dyn FnMut(&Progress),
) -> Result<(ParamVector, RunRecord)> {
    opts.validate()?;
    let start = Instant::now();
    let stride = opts.stride();
    let mut record = RunRecord::new(opts.seed, opts.steps);
    let mut x = problem.initial_point();
    let mut last_loss = f64::NAN;
    for t in 1..=opts.steps {
        let lr = opts.schedule.at(t)?;
        let eval = problem.eval(&x, t, opts.seed)?;
        let q = stepper.coefficients();
        observer(&Progress {
            t,
            x: &x,
            loss: eval.loss,
            grad: &eval.grad,
            lr,
            q: q.as_ref(),
        });
        stepper.step(&mut x, &eval.grad, lr)?;
        problem.project(&mut x);
        x.ensure_finite("iterate")?;
        if RunRecord::wants(t, stride, opts.steps) {
            record.push(t, eval.loss, lr, &eval.grad, q.as_ref(), &stepper.effective_lr(lr));
        }
        last_loss = eval.loss;
    }
    record.summary.final_loss = last_loss;
    record.summary.final_q = stepper.coefficients();
    record.summary.final_x = x.to_vec();
    record.summary.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok((x, record))
}
