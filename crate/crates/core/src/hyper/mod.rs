//! Online coefficient learning: projected hyper-SGD with momentum driven by
//! one-step hyper-gradients, and the MADA loop around it.

mod grad;

pub use grad::{beta2_paths, fd_check, hypergrad, replay_step, Beta2Paths, FdReport, HyperGrad, FD_FLOOR};

use std::time::Instant;

use crate::base_opt::effective_lr;
use crate::error::{contract, Result};
use crate::numkit::ParamVector;
use crate::poly_opt::{poly_step, Coef, CoefficientVector, PolyState, PolyVariant, StepTrace, NUM_COEFS};
use crate::problems::Problem;
use crate::record::RunRecord;
use crate::run::{Progress, RunOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct HyperConfig {
    /// Hyper learning rate shared by β₁ and β₂.
    pub lr_betas: f64,
    /// Hyper learning rate for β₃, ρ, c and γ.
    pub lr_other: f64,
    /// Per-coefficient replacements for the group rates.
    pub lr_override: [Option<f64>; NUM_COEFS],
    pub momentum: f64,
    pub momentum_enabled: [bool; NUM_COEFS],
    /// Coefficients stay at their initial values for steps `1..=freeze_steps`.
    pub freeze_steps: u64,
    pub bounds: [(f64, f64); NUM_COEFS],
}

impl Default for HyperConfig {
    fn default() -> Self {
        let mut momentum_enabled = [true; NUM_COEFS];
        momentum_enabled[Coef::Gamma.index()] = false;
        Self {
            lr_betas: 2.5e-3,
            lr_other: 2.5e-3,
            lr_override: [None; NUM_COEFS],
            momentum: 0.5,
            momentum_enabled,
            freeze_steps: 0,
            bounds: Coef::ALL.map(Coef::bounds),
        }
    }
}

impl HyperConfig {
    /// All hyper learning rates zero: MADA degenerates to the frozen optimizer.
    pub fn inert() -> Self {
        Self {
            lr_betas: 0.0,
            lr_other: 0.0,
            ..Self::default()
        }
    }

    pub fn lr(&self, k: Coef) -> f64 {
        if let Some(lr) = self.lr_override[k.index()] {
            return lr;
        }
        match k {
            Coef::Beta1 | Coef::Beta2 => self.lr_betas,
            Coef::Beta1Lion | Coef::Beta2Lion => 0.0,
            _ => self.lr_other,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for k in Coef::ALL {
            let lr = self.lr(k);
            contract!(lr >= 0.0 && lr.is_finite(), "hyper learning rate for {} must be finite and non-negative", k.name());
            let (lo, hi) = self.bounds[k.index()];
            let (dlo, dhi) = k.bounds();
            contract!(
                dlo <= lo && lo <= hi && hi <= dhi,
                "projection interval for {} must lie inside [{dlo}, {dhi}]",
                k.name()
            );
        }
        contract!((0.0..1.0).contains(&self.momentum), "hyper momentum must lie in [0, 1)");
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperState {
    pub q: CoefficientVector,
    pub buf: [f64; NUM_COEFS],
}

impl HyperState {
    pub fn new(q: CoefficientVector) -> Self {
        Self { q, buf: [0.0; NUM_COEFS] }
    }
}

/// One projected SGD-with-momentum step on `q`; a no-op for `t ≤ freeze_steps`.
pub fn hyper_update(hs: &HyperState, g: &HyperGrad, cfg: &HyperConfig, t: u64) -> HyperState {
    if t <= cfg.freeze_steps {
        return hs.clone();
    }
    let mut next = hs.clone();
    for k in Coef::ALL {
        let i = k.index();
        next.buf[i] = if cfg.momentum_enabled[i] {
            cfg.momentum * hs.buf[i] + g.0[i]
        } else {
            g.0[i]
        };
        let lr = cfg.lr(k);
        if lr != 0.0 {
            let (lo, hi) = cfg.bounds[i];
            next.q.set(k, (hs.q.get(k) - lr * next.buf[i]).clamp(lo, hi));
        }
    }
    next
}

/// The MADA loop. At step `t`: evaluate `g_t = ∇f_t(x_{t−1})`, take the
/// parameterized step with `q_{t−1}`, project `x` onto the constraint box, and
/// move `q` along the hyper-gradient of `f_t(x_{t−1})` obtained from step `t−1`'s trace.
///
/// The box projection is not differentiated.
pub fn run_mada(
    problem: &Problem,
    q0: CoefficientVector,
    variant: PolyVariant,
    cfg: &HyperConfig,
    opts: &RunOptions,
) -> Result<(ParamVector, CoefficientVector, RunRecord)> {
    run_mada_observed(problem, q0, variant, cfg, opts, &mut |_, _| {})
}

/// Like [`run_mada`], also handing each step's trace and the previous step's
/// hyper-gradient to `observer`.
pub fn run_mada_observed(
    problem: &Problem,
    q0: CoefficientVector,
    variant: PolyVariant,
    cfg: &HyperConfig,
    opts: &RunOptions,
    observer: &mut dyn FnMut(&Progress, &StepTrace),
) -> Result<(ParamVector, CoefficientVector, RunRecord)> {
    q0.validate()?;
    cfg.validate()?;
    opts.validate()?;
    contract!(
        cfg.freeze_steps < opts.steps,
        "freeze window ({}) must be shorter than the run ({})",
        cfg.freeze_steps,
        opts.steps
    );
    let start = Instant::now();
    let stride = opts.stride();
    let mut record = RunRecord::new(opts.seed, opts.steps);
    let mut x = problem.initial_point();
    let mut state = PolyState::new(variant, problem.dim());
    let mut hs = HyperState::new(q0);
    let mut prev_trace: Option<StepTrace> = None;
    let mut last_loss = f64::NAN;
    for t in 1..=opts.steps {
        let lr = opts.schedule.at(t)?;
        let eval = problem.eval(&x, t, opts.seed)?;
        let hg = match &prev_trace {
            Some(tr) => hypergrad(tr, &eval.grad)?,
            None => HyperGrad::default(),
        };
        let x_played = x.clone();
        let trace = poly_step(&mut state, &hs.q, &mut x, &eval.grad, lr, opts.eps, opts.weight_decay)?;
        problem.project(&mut x);
        x.ensure_finite("iterate")?;
        hs = hyper_update(&hs, &hg, cfg, t);
        observer(
            &Progress {
                t,
                x: &x_played,
                loss: eval.loss,
                grad: &eval.grad,
                lr,
                q: Some(&hs.q),
            },
            &trace,
        );
        if RunRecord::wants(t, stride, opts.steps) {
            record.push(t, eval.loss, lr, &eval.grad, Some(&hs.q), &effective_lr(&trace.v, lr));
        }
        last_loss = eval.loss;
        prev_trace = Some(trace);
    }
    record.summary.final_loss = last_loss;
    record.summary.final_q = Some(hs.q);
    record.summary.final_x = x.to_vec();
    record.summary.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok((x, hs.q, record))
}

/// The last coefficient snapshot of a run, for re-use as a fixed optimizer.
pub fn extract_fs(record: &RunRecord) -> Result<CoefficientVector> {
    let row = record.rows.last();
    contract!(row.is_some(), "record has no coefficient snapshots");
    let q = CoefficientVector::from_array(row.unwrap().q);
    contract!(
        q.to_array().iter().all(|v| v.is_finite()),
        "record does not come from a parameterized optimizer"
    );
    q.validate()?;
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base_opt::Stepper;
    use crate::numkit::Schedule;
    use crate::poly_opt::freeze;
    use crate::problems::{LogisticSynth, Quadratic};
    use crate::run::run_fixed;
    use proptest::prelude::*;

    #[test]
    fn clamps_to_projection_intervals() {
        let hs = HyperState::new(CoefficientVector::adam(0.9, 0.9));
        let mut g = HyperGrad::default();
        g.0[Coef::Beta2.index()] = -300.0;
        g.0[Coef::Rho.index()] = 520.0;
        let cfg = HyperConfig::default();
        let next = hyper_update(&hs, &g, &cfg, 1);
        // 0.9 + 2.5e-3·300 = 1.65 → 0.99; 1 − 2.5e-3·520 = −0.3 → 0.
        assert_eq!(next.q.beta2, 0.99);
        assert_eq!(next.q.rho, 0.0);
    }

    #[test]
    fn zero_gradient_is_identity_and_projection_idempotent() {
        let hs = HyperState::new(CoefficientVector::yogi(0.3, 0.6));
        let cfg = HyperConfig::default();
        let once = hyper_update(&hs, &HyperGrad::default(), &cfg, 5);
        assert_eq!(once, hs);
        assert_eq!(hyper_update(&once, &HyperGrad::default(), &cfg, 6), once);
    }

    #[test]
    fn freeze_window_holds_q() {
        let cfg = HyperConfig {
            freeze_steps: 50,
            ..HyperConfig::default()
        };
        let hs = HyperState::new(CoefficientVector::adam(0.9, 0.9));
        let g = HyperGrad([1.0; NUM_COEFS]);
        assert_eq!(hyper_update(&hs, &g, &cfg, 50), hs);
        assert_ne!(hyper_update(&hs, &g, &cfg, 51), hs);
    }

    #[test]
    fn gamma_skips_momentum_by_default() {
        let mut hs = HyperState::new(CoefficientVector::adam(0.9, 0.9));
        hs.q.gamma = 0.5;
        let g = HyperGrad([1.0; NUM_COEFS]);
        let cfg = HyperConfig::default();
        let two = hyper_update(&hyper_update(&hs, &g, &cfg, 1), &g, &cfg, 2);
        assert!((two.q.gamma - (0.5 - 2.0 * 2.5e-3)).abs() < 1e-15);
        assert!((two.q.rho - (1.0 - 2.5e-3 * 2.5)).abs() < 1e-15);
    }

    fn logistic() -> Problem {
        Problem::logistic(LogisticSynth::new(6, 200, 2.0, 16, 0.0, 1))
    }

    #[test]
    fn inert_mada_matches_frozen_optimizer() {
        let p = logistic();
        let q0 = CoefficientVector {
            rho: 0.3,
            beta3: 0.2,
            ..CoefficientVector::adam(0.9, 0.95)
        };
        let opts = RunOptions::new(300, 4, Schedule::InvSqrt { peak: 0.05 });
        let (xm, qm, rm) = run_mada(&p, q0, PolyVariant::AvgradInterp, &HyperConfig::inert(), &opts).unwrap();
        let mut frozen = freeze(q0, PolyVariant::AvgradInterp, p.dim(), opts.eps, 0.0).unwrap();
        let (xf, rf) = run_fixed(&p, &mut frozen, &opts).unwrap();
        assert_eq!(qm, q0);
        assert_eq!(xm, xf);
        assert!(rm.rows_identical(&rf));
        assert_eq!(extract_fs(&rm).unwrap(), q0);
        assert!(frozen.coefficients().is_some());
    }

    #[test]
    fn mada_is_deterministic_and_stays_in_domain() {
        let p = Problem::quadratic(Quadratic::random(8, 20.0, 0.2, 2));
        let cfg = HyperConfig {
            lr_betas: 1e-2,
            lr_other: 1e-1,
            ..HyperConfig::default()
        };
        let opts = RunOptions::new(400, 9, Schedule::Constant { peak: 0.02 });
        let q0 = CoefficientVector::adam(0.9, 0.99);
        let (_, qa, ra) = run_mada(&p, q0, PolyVariant::AvgradInterp, &cfg, &opts).unwrap();
        let (_, qb, rb) = run_mada(&p, q0, PolyVariant::AvgradInterp, &cfg, &opts).unwrap();
        assert_eq!(qa, qb);
        assert!(ra.rows_identical(&rb));
        for row in &ra.rows {
            assert!(CoefficientVector::from_array(row.q).validate().is_ok());
        }
        assert_ne!(qa, q0);
    }

    #[test]
    fn extract_fs_needs_polytope_rows() {
        assert!(extract_fs(&RunRecord::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn q_stays_in_domain_for_any_rate(
            lr in 0.0f64..1e6,
            g in proptest::array::uniform8(-1e6f64..1e6),
            mom in 0.0f64..0.99,
        ) {
            let cfg = HyperConfig { lr_betas: lr, lr_other: lr, momentum: mom, ..HyperConfig::default() };
            let mut hs = HyperState::new(CoefficientVector::adam(0.9, 0.99));
            for t in 1..5 {
                hs = hyper_update(&hs, &HyperGrad(g), &cfg, t);
                prop_assert!(hs.q.validate().is_ok());
            }
        }
    }
}
