//! Closed-form one-step hyper-gradients.
//!
//! With `x_t = x̃ − α d(q)` (`x̃` the decayed iterate) and
//! `d = γ·M/(√v+ε) + (1−γ)·sign(u)`, the derivative of `f_{t+1}(x_t)` is
//! `−α Σ_i G_i ∂d_i/∂q`, where `G = ∇f_{t+1}(x_t)`. State entering the step is
//! held constant; `sign` contributes nothing.

use crate::error::{contract, Result};
use crate::numkit::{central_diff, rel_err, sign, ParamVector, Rng};
use crate::poly_opt::{poly_step, Coef, CoefficientVector, PolyState, PolyVariant, StepTrace, NUM_COEFS};

/// `∂f_{t+1}(x_t)/∂q` per coefficient, indexed by [`Coef::index`].
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct HyperGrad(pub [f64; NUM_COEFS]);

impl HyperGrad {
    pub fn get(&self, k: Coef) -> f64 {
        self.0[k.index()]
    }
}

/// Partial derivatives of one coordinate's direction `d_i` with respect to `q`.
struct CoordPartials {
    d: [f64; NUM_COEFS],
    /// Split of `∂d/∂β₂` into the fresh `ρ·v̄` path and the slow (`ṽ` / `v^max`) path.
    beta2_fresh: f64,
    beta2_slow: f64,
}

fn coord_partials(tr: &StepTrace, i: usize) -> CoordPartials {
    let q = &tr.q;
    let e = &tr.entering;
    let t = tr.t as f64;
    let g = tr.grad[i];
    let delta = if tr.t == 1 { 0.0 } else { g - e.prev_grad[i] };
    let (m, n, v) = (tr.m[i], tr.n[i], tr.v[i]);
    let big_m = m + q.beta3 * n;
    let root = v.sqrt();
    let den = root + tr.eps;
    let (a, da_dv) = if den > 0.0 && root > 0.0 {
        (big_m / den, -big_m / (2.0 * root * den * den))
    } else {
        (0.0, 0.0)
    };
    let slow_weight = match tr.variant() {
        PolyVariant::AvgradInterp => 1.0 / t,
        PolyVariant::MaxInterp => f64::from(u8::from(tr.route_fresh[i])),
    };
    let dv_dvbar = q.rho + (1.0 - q.rho) * slow_weight;
    let g_hat = tr.g_hat[i];
    let g_hat_sq = g_hat * g_hat;
    let s = tr.yogi_sign[i];
    let v_bar_old = e.v_bar[i];
    let one_m_b2 = 1.0 - q.beta2;
    let gamma = q.gamma;

    let mut d = [0.0; NUM_COEFS];
    d[Coef::Gamma.index()] = a - sign(tr.u[i]);
    if den > 0.0 {
        d[Coef::Beta1.index()] = gamma * (e.m[i] - g) / den;
        let dm_db3 = n + q.beta3 * (e.n[i] - delta);
        let dgt_db3 = (q.c + (1.0 - q.c) * s) * 2.0 * g_hat * delta;
        d[Coef::Beta3.index()] = gamma * (dm_db3 / den + da_dv * dv_dvbar * one_m_b2 * dgt_db3);
    }
    let dvbar_db2 = v_bar_old - tr.g_tilde_sq[i];
    d[Coef::Beta2.index()] = gamma * da_dv * dv_dvbar * dvbar_db2;
    d[Coef::C.index()] = gamma * da_dv * dv_dvbar * one_m_b2 * (g_hat_sq - (v_bar_old + g_hat_sq * s));
    d[Coef::Rho.index()] = gamma * da_dv * (tr.v_bar[i] - tr.v_slow[i]);
    CoordPartials {
        d,
        beta2_fresh: gamma * da_dv * q.rho * dvbar_db2,
        beta2_slow: gamma * da_dv * (1.0 - q.rho) * slow_weight * dvbar_db2,
    }
}

fn check_shapes(tr: &StepTrace, grad_next: &[f64]) -> Result<()> {
    contract!(
        grad_next.len() == tr.dim(),
        "next gradient has length {}, trace has dimension {}",
        grad_next.len(),
        tr.dim()
    );
    contract!(tr.t >= 1, "trace does not come from a completed step");
    Ok(())
}

/// One-step hyper-gradient of `f_{t+1}(x_t)` with respect to every coefficient.
pub fn hypergrad(tr: &StepTrace, grad_next: &[f64]) -> Result<HyperGrad> {
    check_shapes(tr, grad_next)?;
    let mut out = [0.0; NUM_COEFS];
    for (i, &gn) in grad_next.iter().enumerate() {
        let p = coord_partials(tr, i);
        for k in 0..NUM_COEFS {
            out[k] += gn * p.d[k];
        }
    }
    for o in &mut out {
        *o *= -tr.lr;
    }
    Ok(HyperGrad(out))
}

/// Per-coordinate contributions to the β₂ hyper-gradient, split by path.
#[derive(Clone, Debug, PartialEq)]
pub struct Beta2Paths {
    /// Through `ρ·v̄_t`.
    pub fresh: ParamVector,
    /// Through `ṽ_t` (averaging) or `v^max_t` (max; zero wherever routing blocks `v̄_t`).
    pub slow: ParamVector,
    /// Max variant only: coordinates where `v^max_{t−1}` won the max.
    pub blocked: Vec<bool>,
}

pub fn beta2_paths(tr: &StepTrace, grad_next: &[f64]) -> Result<Beta2Paths> {
    check_shapes(tr, grad_next)?;
    let mut fresh = ParamVector::zeros(tr.dim());
    let mut slow = ParamVector::zeros(tr.dim());
    for (i, &gn) in grad_next.iter().enumerate() {
        let p = coord_partials(tr, i);
        fresh[i] = -tr.lr * gn * p.beta2_fresh;
        slow[i] = -tr.lr * gn * p.beta2_slow;
    }
    let blocked = match tr.variant() {
        PolyVariant::MaxInterp => tr.route_fresh.iter().map(|r| !r).collect(),
        PolyVariant::AvgradInterp => vec![false; tr.dim()],
    };
    Ok(Beta2Paths { fresh, slow, blocked })
}

/// Replays the traced step with one coefficient replaced, from the same entering state.
pub fn replay_step(tr: &StepTrace, q: &CoefficientVector) -> Result<ParamVector> {
    let mut state: PolyState = tr.entering.clone();
    let mut x = tr.x_prev.clone();
    poly_step(&mut state, q, &mut x, &tr.grad, tr.lr, tr.eps, 0.0)?;
    Ok(x)
}

/// Maximum relative error of [`hypergrad`] against central differences for one coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdReport {
    pub variant: PolyVariant,
    pub coef: Coef,
    pub trials: usize,
    pub max_rel_err: f64,
}

/// Finite-difference check over `trials` random states per (variant, learnable coefficient).
///
/// The outer loss is a random separable quadratic; states that sit within
/// `1e-3` of a kink (`sign` or `max` ties) are redrawn, since the derivative
/// does not exist there.
pub fn fd_check(trials: usize, seed: u64, h: f64) -> Result<Vec<FdReport>> {
    let mut out = Vec::new();
    for (vi, variant) in [PolyVariant::AvgradInterp, PolyVariant::MaxInterp].into_iter().enumerate() {
        for coef in Coef::LEARNABLE {
            let mut rng = Rng::new(seed).substream(coef.name(), vi as u64);
            let mut worst: f64 = 0.0;
            for _ in 0..trials {
                let (tr, a, b) = random_trace(&mut rng, variant)?;
                let loss = |y: &[f64]| -> f64 { y.iter().zip(&a).zip(&b).map(|((y, a), b)| 0.5 * a * y * y + b * y).sum() };
                let g_next: Vec<f64> = tr_next_point(&tr)?.iter().zip(&a).zip(&b).map(|((y, a), b)| a * y + b).collect();
                let analytic = hypergrad(&tr, &g_next)?.get(coef);
                let q0 = tr.q;
                let fd = central_diff(
                    |v| {
                        let mut q = q0;
                        q.set(coef, v);
                        replay_step(&tr, &q).map(|y| loss(&y)).unwrap_or(f64::NAN)
                    },
                    q0.get(coef),
                    h,
                )?;
                worst = worst.max(rel_err(analytic, fd, FD_FLOOR));
            }
            out.push(FdReport {
                variant,
                coef,
                trials,
                max_rel_err: worst,
            });
        }
    }
    Ok(out)
}

/// Below this magnitude hyper-gradients are compared absolutely.
pub const FD_FLOOR: f64 = 1e-8;

fn tr_next_point(tr: &StepTrace) -> Result<ParamVector> {
    replay_step(tr, &tr.q)
}

fn random_trace(rng: &mut Rng, variant: PolyVariant) -> Result<(StepTrace, Vec<f64>, Vec<f64>)> {
    const DIM: usize = 5;
    loop {
        let q = CoefficientVector {
            beta1: rng.uniform_in(0.1, 0.9),
            beta2: rng.uniform_in(0.55, 0.95),
            beta3: rng.uniform_in(0.05, 0.9),
            rho: rng.uniform_in(0.1, 0.9),
            c: rng.uniform_in(0.1, 0.9),
            gamma: rng.uniform_in(0.1, 0.9),
            beta1_lion: rng.uniform_in(0.1, 0.9),
            beta2_lion: rng.uniform_in(0.1, 0.9),
        };
        let mut state = PolyState::new(variant, DIM);
        state.t = 1 + rng.index(40) as u64;
        for i in 0..DIM {
            state.m[i] = rng.normal();
            state.n[i] = 0.5 * rng.normal();
            state.m_lion[i] = rng.normal();
            state.v_bar[i] = rng.uniform_in(0.1, 2.0);
            state.v_avg[i] = rng.uniform_in(0.1, 2.0);
            state.v_max[i] = rng.uniform_in(0.1, 2.0);
            state.prev_grad[i] = rng.normal();
        }
        let g: Vec<f64> = (0..DIM).map(|_| rng.normal()).collect();
        let mut x: Vec<f64> = (0..DIM).map(|_| 0.1 * rng.normal()).collect();
        let entering = state.clone();
        let tr = poly_step(&mut state, &q, &mut x, &g, 0.1, 1e-8, 0.0)?;
        let near_kink = (0..DIM).any(|i| {
            (tr.g_hat[i] * tr.g_hat[i] - entering.v_bar[i]).abs() < 1e-3
                || (variant == PolyVariant::MaxInterp && (tr.v_bar[i] - entering.v_max[i]).abs() < 1e-3)
        });
        if near_kink {
            continue;
        }
        let a = (0..DIM).map(|_| rng.uniform_in(0.5, 2.0)).collect();
        let b = (0..DIM).map(|_| rng.normal()).collect();
        return Ok((tr, a, b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_coord_trace(variant: PolyVariant) -> StepTrace {
        // One coordinate, built so that after the step m = 1, v̄ = 0.5, v^max = 1, v = 1.
        let q = CoefficientVector {
            beta1: 0.5,
            beta2: 0.5,
            beta3: 0.0,
            rho: 0.0,
            c: 1.0,
            gamma: 1.0,
            beta1_lion: 0.9,
            beta2_lion: 0.99,
        };
        let mut s = PolyState::new(variant, 1);
        s.t = 3;
        s.m[0] = 1.0;
        s.v_bar[0] = 0.0;
        s.v_max[0] = 1.0;
        s.prev_grad[0] = 1.0;
        let mut x = [0.0];
        poly_step(&mut s, &q, &mut x, &[1.0], 0.1, 0.0, 0.0).unwrap()
    }

    #[test]
    fn rho_hand_value_under_max_routing() {
        let tr = single_coord_trace(PolyVariant::MaxInterp);
        assert_eq!((tr.m[0], tr.v_bar[0], tr.v_slow[0], tr.v[0]), (1.0, 0.5, 1.0, 1.0));
        let hg = hypergrad(&tr, &[1.0]).unwrap();
        assert!((hg.get(Coef::Rho) - (-0.025)).abs() < 1e-15);
        // v̄ lost the max, so β₂ only reaches the update through ρ·v̄ — and ρ = 0.
        let paths = beta2_paths(&tr, &[1.0]).unwrap();
        assert!(paths.blocked[0]);
        assert_eq!(paths.slow[0], 0.0);
        assert_eq!(hg.get(Coef::Beta2), 0.0);
    }

    #[test]
    fn gamma_vanishes_without_any_direction() {
        let q = CoefficientVector {
            gamma: 0.4,
            ..CoefficientVector::adam(0.9, 0.99)
        };
        let mut s = PolyState::new(PolyVariant::AvgradInterp, 3);
        let mut x = [1.0, 2.0, 3.0];
        let tr = poly_step(&mut s, &q, &mut x, &[0.0; 3], 0.1, 1e-8, 0.0).unwrap();
        assert_eq!(hypergrad(&tr, &[1.0, -2.0, 0.5]).unwrap().get(Coef::Gamma), 0.0);
    }

    #[test]
    fn lion_betas_get_no_gradient_and_shapes_are_checked() {
        let tr = single_coord_trace(PolyVariant::AvgradInterp);
        let hg = hypergrad(&tr, &[2.0]).unwrap();
        assert_eq!(hg.get(Coef::Beta1Lion), 0.0);
        assert_eq!(hg.get(Coef::Beta2Lion), 0.0);
        assert!(hypergrad(&tr, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn paths_sum_to_the_full_beta2_gradient() {
        let mut rng = Rng::new(77);
        for variant in [PolyVariant::AvgradInterp, PolyVariant::MaxInterp] {
            for _ in 0..20 {
                let (tr, _, _) = random_trace(&mut rng, variant).unwrap();
                let g: Vec<f64> = (0..tr.dim()).map(|_| rng.normal()).collect();
                let p = beta2_paths(&tr, &g).unwrap();
                let total: f64 = p.fresh.iter().zip(p.slow.iter()).map(|(a, b)| a + b).sum();
                let hg = hypergrad(&tr, &g).unwrap().get(Coef::Beta2);
                assert!((total - hg).abs() <= 1e-12 * hg.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn finite_difference_agreement() {
        for r in fd_check(15, 3, 1e-5).unwrap() {
            assert!(r.max_rel_err <= 1e-6, "{r:?}");
        }
    }
}
