//! Evaluators for the convergence bounds and the effective-learning-rate
//! monotonicity condition.

use crate::error::{contract, Error, Result};
use crate::exec;
use crate::numkit::Rng;

/// Constants of the bounds. Defaults: `R = L = d = 1`, `α = 0.1`, `ε = 1e-8`,
/// `F₀ − F* = 1`, `β₁ = 0`, `β₂ = 0.9`, `T = 10⁴`, `ρ = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundParams {
    pub r: f64,
    pub l: f64,
    pub d: f64,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub f_gap: f64,
    pub t: u64,
    pub rho: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self {
            r: 1.0,
            l: 1.0,
            d: 1.0,
            alpha: 0.1,
            beta1: 0.0,
            beta2: 0.9,
            eps: 1e-8,
            f_gap: 1.0,
            t: 10_000,
            rho: 0.0,
        }
    }
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        let domain = |ok: bool, what: &str| if ok { Ok(()) } else { Err(Error::Domain(what.to_string())) };
        domain(self.beta2 > 0.0 && self.beta2 < 1.0, "beta2 must lie in (0, 1)")?;
        domain((0.0..1.0).contains(&self.beta1), "beta1 must lie in [0, 1)")?;
        domain(self.r > 0.0 && self.l > 0.0 && self.alpha > 0.0 && self.eps > 0.0, "R, L, alpha and eps must be positive")?;
        domain(self.d >= 1.0, "d must be at least 1")?;
        domain(self.f_gap >= 0.0, "F gap must be non-negative")?;
        domain(self.t >= 1, "T must be at least 1")?;
        domain((0.0..=1.0).contains(&self.rho), "rho must lie in [0, 1]")
    }
}

/// `[ln(ρ/β₂)]₊`, taken as 0 at ρ = 0.
pub fn thm3_bracket(rho: f64, beta2: f64) -> f64 {
    if rho <= 0.0 {
        0.0
    } else {
        (rho / beta2).ln().max(0.0)
    }
}

/// Right-hand side of the interpolated-optimizer bound (no momentum).
pub fn thm3_bound(p: &BoundParams) -> Result<f64> {
    p.validate()?;
    let t = p.t as f64;
    let e = p.rho + (1.0 - p.rho) * t;
    let sd = (1.0 - p.beta2).sqrt();
    let lead = 2.0 * p.r * e.sqrt();
    let first = lead * p.f_gap / (p.alpha * t * sd);
    let log = (1.0 + p.r * p.r * e / (p.eps * (1.0 - p.beta2))).ln() + t * thm3_bracket(p.rho, p.beta2);
    let second = lead * p.d / (sd * t) * (2.0 * p.r + p.alpha * p.l) * log;
    Ok(first + second)
}

/// AVGrad bounds: without momentum, or with momentum via `C` and `T̃ = T − β₁/(1−β₁)`.
pub fn thm12_bound(p: &BoundParams, with_momentum: bool) -> Result<f64> {
    p.validate()?;
    let t = p.t as f64;
    let one_m_b2 = 1.0 - p.beta2;
    let log = (1.0 + p.r * p.r * t / (one_m_b2 * p.eps)).ln();
    if !with_momentum {
        let first = 2.0 * p.r * p.f_gap / (p.alpha * t.sqrt() * one_m_b2.sqrt());
        let second = 2.0 * p.r * p.d / (t.sqrt() * one_m_b2.sqrt()) * (2.0 * p.r + p.alpha * p.l) * log;
        return Ok(first + second);
    }
    let b1 = p.beta1;
    let t_tilde = t - b1 / (1.0 - b1);
    if t_tilde <= 0.0 {
        return Err(Error::Domain(format!("T - beta1/(1-beta1) = {t_tilde} must be positive")));
    }
    let c = p.alpha * p.r * p.l / (one_m_b2.sqrt() * (1.0 - b1))
        + 2.0 * b1 * p.alpha.powi(2) * p.l.powi(2) / (one_m_b2 * (1.0 - b1).powi(3))
        + 12.0 * p.r * p.r / (1.0 - b1).sqrt();
    let first = 2.0 * (1.0 - b1) * p.r * t.sqrt() * p.f_gap / (p.alpha * one_m_b2.sqrt() * t_tilde);
    Ok(first + c * t.sqrt() * p.d / t_tilde * log)
}

/// `points` evenly spaced values `i/(points−1)` over `[0, 1]`.
pub fn rho_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundSweep {
    pub points: Vec<(f64, f64)>,
    /// First grid point attaining the minimum.
    pub argmin: (f64, f64),
}

/// [`thm3_bound`] at every `ρ` in `grid` (the `rho` field of `p` is ignored).
pub fn thm3_sweep(p: &BoundParams, grid: &[f64]) -> Result<BoundSweep> {
    contract!(!grid.is_empty(), "rho grid is empty");
    let points = grid
        .iter()
        .map(|&rho| thm3_bound(&BoundParams { rho, ..*p }).map(|b| (rho, b)))
        .collect::<Result<Vec<_>>>()?;
    let argmin = points.iter().copied().fold(points[0], |best, pt| if pt.1 < best.1 { pt } else { best });
    Ok(BoundSweep { points, argmin })
}

/// `ρ_t = 1/(t(1−β₂)+1)`, the boundary of the stated sufficient condition.
pub fn prop1_boundary(beta2: f64, t: u64) -> f64 {
    1.0 / (t as f64 * (1.0 - beta2) + 1.0)
}

/// `ρ_t = β₂/(t(1−β₂)+1)`: satisfies the tight per-step condition (see [`prop1_tight_slack`]).
pub fn prop1_corrected(beta2: f64, t: u64) -> f64 {
    beta2 * prop1_boundary(beta2, t)
}

/// Slack of the worst case of `t·v_t ≥ (t−1)·v_{t−1}` (a zero gradient at step `t` after
/// all mass arrived at step `t−1`): `β₂ + ((t−1)β₂ − 1)ρ_t − (t−2)ρ_{t−1}`.
/// Non-negative slack at every step makes the effective rate non-increasing on every stream.
pub fn prop1_tight_slack(beta2: f64, rho_t: f64, rho_prev: f64, t: u64) -> f64 {
    let t = t as f64;
    beta2 + ((t - 1.0) * beta2 - 1.0) * rho_t - (t - 2.0) * rho_prev
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prop1Outcome {
    /// Whether `ρ_t ≤ 1/(t(1−β₂)+1)` at every step.
    pub condition_holds: bool,
    pub first_condition_failure: Option<u64>,
    pub monotone: bool,
    pub first_violation: Option<u64>,
    /// Steps with at least one coordinate whose effective rate increased.
    pub violations: u64,
    /// Largest relative increase `eff_t / eff_{t−1} − 1` observed.
    pub max_rel_increase: f64,
}

/// Relative slack below which an increase counts as rounding, not a violation.
pub const PROP1_TOLERANCE: f64 = 1e-12;

/// Simulates `v_t = ρ_t v̄_t + (1−ρ_t) ṽ_t` over `steps` gradients from `stream`
/// with `α_t = α/√t` and checks that `α_t/(√v_t + ε)` never increases.
///
/// With `eps = 0`, coordinates whose previous `v` was zero (rate `0/0 → 0`) are skipped.
/// `stop_early` ends the simulation at the first violation.
pub fn prop1_check(
    beta2: f64,
    rho: &dyn Fn(u64) -> f64,
    steps: u64,
    dim: usize,
    eps: f64,
    stream: &mut dyn FnMut(u64, &mut [f64]),
    stop_early: bool,
) -> Prop1Outcome {
    let alpha = 1.0;
    let mut out = Prop1Outcome {
        condition_holds: true,
        first_condition_failure: None,
        monotone: true,
        first_violation: None,
        violations: 0,
        max_rel_increase: 0.0,
    };
    let mut v_bar = vec![0.0; dim];
    let mut v_avg = vec![0.0; dim];
    let mut prev_eff = vec![0.0; dim];
    let mut prev_v = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for t in 1..=steps {
        let rho_t = rho(t);
        if rho_t > prop1_boundary(beta2, t) * (1.0 + PROP1_TOLERANCE) && out.condition_holds {
            out.condition_holds = false;
            out.first_condition_failure = Some(t);
        }
        stream(t, &mut g);
        let lr = alpha / (t as f64).sqrt();
        let mut violated = false;
        for i in 0..dim {
            v_bar[i] = beta2 * v_bar[i] + (1.0 - beta2) * g[i] * g[i];
            v_avg[i] = (v_bar[i] + (t - 1) as f64 * v_avg[i]) / t as f64;
            let v = rho_t * v_bar[i] + (1.0 - rho_t) * v_avg[i];
            let root = v.sqrt();
            let eff = if root + eps == 0.0 { 0.0 } else { lr / (root + eps) };
            let comparable = t > 1 && (eps > 0.0 || prev_v[i] > 0.0);
            if comparable && eff > prev_eff[i] * (1.0 + PROP1_TOLERANCE) {
                violated = true;
                out.max_rel_increase = out.max_rel_increase.max(eff / prev_eff[i] - 1.0);
            }
            prev_eff[i] = eff;
            prev_v[i] = v;
        }
        if violated {
            out.monotone = false;
            out.violations += 1;
            out.first_violation.get_or_insert(t);
            if stop_early {
                break;
            }
        }
    }
    out
}

/// Draws step `t` of random stream `index`: per-coordinate scales spanning four
/// decades, uniform signs and magnitudes, and occasional exact zeros.
pub fn random_stream(seed: u64, index: u64, dim: usize) -> impl FnMut(u64, &mut [f64]) {
    let mut rng = Rng::new(seed).substream("prop1-stream", index);
    let scales: Vec<f64> = (0..dim).map(|_| 10f64.powf(rng.uniform_in(-2.0, 2.0))).collect();
    let sparsity = rng.uniform_in(0.0, 0.5);
    move |_, g: &mut [f64]| {
        for (gi, s) in g.iter_mut().zip(&scales) {
            *gi = if rng.uniform() < sparsity { 0.0 } else { s * rng.uniform_in(-1.0, 1.0) };
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prop1Batch {
    pub streams: u64,
    pub violating_streams: u64,
    pub condition_holds: bool,
    /// Earliest first-violation step across streams.
    pub earliest_violation: Option<u64>,
    pub max_rel_increase: f64,
}

/// [`prop1_check`] over `streams` independent random streams, each stopping at its
/// first violation. Streams run in parallel when the `parallel` feature is on.
pub fn prop1_batch(
    beta2: f64,
    rho: &(dyn Fn(u64) -> f64 + Sync),
    streams: u64,
    steps: u64,
    dim: usize,
    eps: f64,
    seed: u64,
) -> Prop1Batch {
    let outcomes = exec::map(streams as usize, |k| {
        let mut s = random_stream(seed, k as u64, dim);
        prop1_check(beta2, rho, steps, dim, eps, &mut s, true)
    });
    summarize(&outcomes)
}

/// Sequential twin of [`prop1_batch`].
pub fn prop1_batch_seq(
    beta2: f64,
    rho: &(dyn Fn(u64) -> f64 + Sync),
    streams: u64,
    steps: u64,
    dim: usize,
    eps: f64,
    seed: u64,
) -> Prop1Batch {
    let outcomes = exec::map_seq(streams as usize, |k| {
        let mut s = random_stream(seed, k as u64, dim);
        prop1_check(beta2, rho, steps, dim, eps, &mut s, true)
    });
    summarize(&outcomes)
}

fn summarize(outcomes: &[Prop1Outcome]) -> Prop1Batch {
    Prop1Batch {
        streams: outcomes.len() as u64,
        violating_streams: outcomes.iter().filter(|o| !o.monotone).count() as u64,
        condition_holds: outcomes.iter().all(|o| o.condition_holds),
        earliest_violation: outcomes.iter().filter_map(|o| o.first_violation).min(),
        max_rel_increase: outcomes.iter().map(|o| o.max_rel_increase).fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bracket_cases() {
        assert_eq!(thm3_bracket(0.9, 0.9), 0.0);
        assert_eq!(thm3_bracket(0.0, 0.9), 0.0);
        assert!((thm3_bracket(1.0, 0.9) - 0.105_360_515_657_826_3).abs() < 1e-15);
    }

    #[test]
    fn rho_one_adds_t_times_bracket() {
        let p = BoundParams { rho: 1.0, ..BoundParams::default() };
        let sd = 0.1f64.sqrt();
        let t = 1e4;
        let log = (1.0f64 + 1.0 / (1e-8 * 0.1)).ln() + t * (1.0 / 0.9f64).ln();
        let expected = 2.0 / (0.1 * t * sd) + 2.0 / (sd * t) * 2.1 * log;
        assert!((thm3_bound(&p).unwrap() - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn zero_rho_is_the_avgrad_bound() {
        let p = BoundParams { d: 10.0, ..BoundParams::default() };
        let a = thm3_bound(&p).unwrap();
        let b = thm12_bound(&p, false).unwrap();
        assert!((a - b).abs() <= 1e-12 * b);
        assert!(b.is_finite() && b > 0.0);
    }

    #[test]
    fn momentum_bound_domain() {
        let p = BoundParams { beta1: 0.9, t: 9, ..BoundParams::default() };
        assert!(matches!(thm12_bound(&p, true), Err(Error::Domain(_))));
        let p = BoundParams { beta1: 0.9, t: 10, ..BoundParams::default() };
        assert!(thm12_bound(&p, true).unwrap() > 0.0);
        assert!(matches!(thm3_bound(&BoundParams { beta2: 0.0, ..p }), Err(Error::Domain(_))));
    }

    #[test]
    fn bounds_shrink_like_log_t_over_root_t() {
        for with_momentum in [false, true] {
            for t in [10_000u64, 100_000, 1_000_000] {
                let p = BoundParams { beta1: 0.5, t, ..BoundParams::default() };
                let q = BoundParams { t: 4 * t, ..p };
                let ratio = thm12_bound(&q, with_momentum).unwrap() / thm12_bound(&p, with_momentum).unwrap();
                assert!(ratio < 0.7, "T={t} ratio {ratio}");
            }
        }
    }

    fn sweep_argmin(p: BoundParams) -> f64 {
        let mut grid = rho_grid(11);
        grid.push(p.beta2);
        let s = thm3_sweep(&p, &grid).unwrap();
        assert_eq!(s.points.len(), 12);
        s.argmin.0
    }

    #[test]
    fn sweep_argmin_depends_on_horizon() {
        assert_eq!(sweep_argmin(BoundParams::default()), 0.9);
        // At T = 10³ the Adam end wins with the default constants: the T·[ln(ρ/β₂)]₊
        // penalty (≈105) is smaller than the √E growth of the log term at ρ = β₂.
        assert_eq!(sweep_argmin(BoundParams { t: 1_000, ..BoundParams::default() }), 1.0);
        // A large ε flattens the log term and restores the interior minimum.
        assert_eq!(sweep_argmin(BoundParams { t: 1_000, eps: 10.0, ..BoundParams::default() }), 0.9);
        assert!(thm3_sweep(&BoundParams::default(), &[]).is_err());
        assert_eq!(rho_grid(101)[90], 0.9);
    }

    #[test]
    fn bound_rises_past_beta2_then_collapses_to_adam() {
        for t in [10_000u64, 100_000, 1_000_000] {
            let p = BoundParams { t, ..BoundParams::default() };
            let at = |rho: f64| thm3_bound(&BoundParams { rho, ..p }).unwrap();
            // Rising on (β₂, 0.96]: the T·[ln(ρ/β₂)]₊ penalty dominates.
            let rising: Vec<f64> = (900..=960).map(|i| at(i as f64 / 1000.0)).collect();
            assert!(rising.windows(2).all(|w| w[1] >= w[0]), "T={t}");
            // Near ρ = 1 the √(ρ + (1−ρ)T) factor vanishes faster than the penalty grows.
            let falling: Vec<f64> = (970..=1000).map(|i| at(i as f64 / 1000.0)).collect();
            assert!(falling.windows(2).all(|w| w[1] <= w[0]), "T={t}");
        }
    }

    #[test]
    fn adam_stream_breaks_monotonicity() {
        let mut stream = |t: u64, g: &mut [f64]| g[0] = if t == 1 { 100.0 } else { 1e-6 };
        let out = prop1_check(0.9, &|_| 1.0, 100, 1, 0.0, &mut stream, false);
        assert!(!out.condition_holds);
        assert_eq!(out.first_condition_failure, Some(1));
        assert!(!out.monotone);
        // √((t−1)/t) exceeds √β₂ from t = 11 on.
        assert_eq!(out.first_violation, Some(11));
    }

    #[test]
    fn pure_averaging_is_monotone() {
        let mut s = random_stream(1, 0, 4);
        let out = prop1_check(0.9, &|_| 0.0, 5_000, 4, 0.0, &mut s, false);
        assert!(out.condition_holds && out.monotone, "{out:?}");
    }

    #[test]
    fn corrected_schedule_has_nonnegative_slack() {
        for b2 in [0.5, 0.9, 0.99, 0.999] {
            for t in 2..20_000u64 {
                let slack = prop1_tight_slack(b2, prop1_corrected(b2, t), prop1_corrected(b2, t - 1), t);
                assert!(slack >= -1e-12, "beta2={b2} t={t} slack={slack}");
            }
        }
    }

    #[test]
    fn boundary_schedule_loses_slack_late() {
        let first_negative = (2..1_000u64)
            .find(|&t| prop1_tight_slack(0.9, prop1_boundary(0.9, t), prop1_boundary(0.9, t - 1), t) < 0.0);
        assert_eq!(first_negative, Some(29));
    }

    #[test]
    fn parallel_and_sequential_batches_agree() {
        let rho = |t| prop1_boundary(0.9, t);
        let a = prop1_batch(0.9, &rho, 40, 2_000, 3, 0.0, 5);
        let b = prop1_batch_seq(0.9, &rho, 40, 2_000, 3, 0.0, 5);
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn bracket_positive_iff_rho_exceeds_beta2(rho in 0.0f64..=1.0, b2 in 0.01f64..0.999) {
            let br = thm3_bracket(rho, b2);
            prop_assert_eq!(br > 0.0, rho > b2);
            prop_assert!(br >= 0.0);
        }
    }
}
