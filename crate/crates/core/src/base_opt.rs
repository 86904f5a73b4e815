//! Reference implementations of the vertex optimizers.
//!
//! All of them share `x ← x − α_t · m_t / (√v_t + ε)` (Lion and SGD aside) and
//! skip bias correction unless [`BaseHyperParams::bias_correction`] is set.

use crate::error::{contract, Result};
use crate::numkit::{sign, ParamVector};
use crate::poly_opt::CoefficientVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaseKind {
    /// Heavy-ball momentum: `m ← β₁m + g`, `x ← x − α m`.
    Sgd,
    Adam,
    AmsGrad,
    AvGrad,
    Yogi,
    Adan,
    Lion,
}

impl BaseKind {
    pub const ALL: [BaseKind; 7] = [
        BaseKind::Sgd,
        BaseKind::Adam,
        BaseKind::AmsGrad,
        BaseKind::AvGrad,
        BaseKind::Yogi,
        BaseKind::Adan,
        BaseKind::Lion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaseKind::Sgd => "sgd",
            BaseKind::Adam => "adam",
            BaseKind::AmsGrad => "amsgrad",
            BaseKind::AvGrad => "avgrad",
            BaseKind::Yogi => "yogi",
            BaseKind::Adan => "adan",
            BaseKind::Lion => "lion",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaseHyperParams {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub beta1_lion: f64,
    pub beta2_lion: f64,
    pub bias_correction: bool,
}

impl Default for BaseHyperParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.99,
            beta3: 0.0,
            eps: 1e-8,
            weight_decay: 0.0,
            beta1_lion: 0.9,
            beta2_lion: 0.99,
            bias_correction: false,
        }
    }
}

impl BaseHyperParams {
    pub fn with_betas(beta1: f64, beta2: f64) -> Self {
        Self {
            beta1,
            beta2,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, b) in [
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("beta3", self.beta3),
            ("beta1_lion", self.beta1_lion),
            ("beta2_lion", self.beta2_lion),
        ] {
            contract!((0.0..1.0).contains(&b), "{name} = {b} must lie in [0, 1)");
        }
        contract!(self.eps >= 0.0 && self.eps.is_finite(), "eps must be finite and non-negative");
        contract!(self.weight_decay >= 0.0, "weight decay must be non-negative");
        Ok(())
    }
}

/// Per-parameter buffers; every optimizer uses a subset.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseOptState {
    pub t: u64,
    /// First moment used in the update (`m̄ + β₃n` for Adan, the velocity for SGD).
    pub m: ParamVector,
    pub v_bar: ParamVector,
    /// Second moment fed to the denominator.
    pub v: ParamVector,
    pub v_max: ParamVector,
    pub v_avg: ParamVector,
    pub m_bar: ParamVector,
    pub n: ParamVector,
    pub prev_grad: ParamVector,
    pub m_lion: ParamVector,
}

impl BaseOptState {
    pub fn new(dim: usize) -> Self {
        let z = ParamVector::zeros(dim);
        Self {
            t: 0,
            m: z.clone(),
            v_bar: z.clone(),
            v: z.clone(),
            v_max: z.clone(),
            v_avg: z.clone(),
            m_bar: z.clone(),
            n: z.clone(),
            prev_grad: z.clone(),
            m_lion: z,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    /// One in-place update of `x`.
    pub fn step(&mut self, kind: BaseKind, hp: &BaseHyperParams, x: &mut [f64], g: &[f64], lr: f64) -> Result<()> {
        contract!(
            x.len() == self.dim() && g.len() == self.dim(),
            "dimension mismatch: state {}, x {}, g {}",
            self.dim(),
            x.len(),
            g.len()
        );
        ParamVector::from(g).ensure_finite("gradient")?;
        self.t += 1;
        let t = self.t;
        let (b1, b2, b3) = (hp.beta1, hp.beta2, hp.beta3);
        if hp.weight_decay != 0.0 {
            for xi in x.iter_mut() {
                *xi -= hp.weight_decay * lr * *xi;
            }
        }
        let (c1, c2) = if hp.bias_correction {
            (1.0 - b1.powi(t as i32), 1.0 - b2.powi(t as i32))
        } else {
            (1.0, 1.0)
        };
        for i in 0..x.len() {
            let gi = g[i];
            match kind {
                BaseKind::Sgd => {
                    self.m[i] = b1 * self.m[i] + gi;
                    self.v[i] = 1.0;
                    x[i] -= lr * self.m[i];
                    continue;
                }
                BaseKind::Lion => {
                    let u = hp.beta1_lion * self.m_lion[i] + (1.0 - hp.beta1_lion) * gi;
                    self.m_lion[i] = hp.beta2_lion * self.m_lion[i] + (1.0 - hp.beta2_lion) * gi;
                    self.v[i] = 1.0;
                    x[i] -= lr * sign(u);
                    continue;
                }
                BaseKind::Adan => {
                    let prev = if t == 1 { gi } else { self.prev_grad[i] };
                    let delta = gi - prev;
                    self.m_bar[i] = b1 * self.m_bar[i] + (1.0 - b1) * gi;
                    self.n[i] = b3 * self.n[i] + (1.0 - b3) * delta;
                    self.m[i] = self.m_bar[i] + b3 * self.n[i];
                    let g_hat = gi + b3 * delta;
                    self.v_bar[i] = b2 * self.v_bar[i] + (1.0 - b2) * (g_hat * g_hat);
                    self.v[i] = self.v_bar[i];
                    self.prev_grad[i] = gi;
                }
                BaseKind::Yogi => {
                    self.m[i] = b1 * self.m[i] + (1.0 - b1) * gi;
                    let g2 = gi * gi;
                    let old = self.v_bar[i];
                    self.v_bar[i] = b2 * old + (1.0 - b2) * (old + g2 * sign(g2 - old));
                    self.v[i] = self.v_bar[i];
                }
                BaseKind::Adam | BaseKind::AmsGrad | BaseKind::AvGrad => {
                    self.m[i] = b1 * self.m[i] + (1.0 - b1) * gi;
                    self.v_bar[i] = b2 * self.v_bar[i] + (1.0 - b2) * (gi * gi);
                    self.v[i] = match kind {
                        BaseKind::Adam => self.v_bar[i],
                        BaseKind::AmsGrad => {
                            self.v_max[i] = self.v_max[i].max(self.v_bar[i]);
                            self.v_max[i]
                        }
                        _ => {
                            self.v_avg[i] = (self.v_bar[i] + (t - 1) as f64 * self.v_avg[i]) / t as f64;
                            self.v_avg[i]
                        }
                    };
                }
            }
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            x[i] -= lr * (m_hat / (v_hat.sqrt() + hp.eps));
        }
        Ok(())
    }
}

/// Functional form of [`BaseOptState::step`].
pub fn base_step(
    kind: BaseKind,
    state: &BaseOptState,
    hp: &BaseHyperParams,
    x: &[f64],
    g: &[f64],
    lr: f64,
) -> Result<(ParamVector, BaseOptState)> {
    let mut next = state.clone();
    let mut x = ParamVector::from(x);
    next.step(kind, hp, &mut x, g, lr)?;
    Ok((x, next))
}

/// `α_t / √v_t` per coordinate, with `0/0 → 0` for coordinates whose `v` is zero.
pub fn effective_lr(v: &[f64], lr: f64) -> ParamVector {
    v.iter().map(|&vi| if vi == 0.0 { 0.0 } else { lr / vi.sqrt() }).collect()
}

/// Anything that can advance parameters by one step.
pub trait Stepper {
    fn step(&mut self, x: &mut [f64], g: &[f64], lr: f64) -> Result<()>;
    /// Effective learning rates of the most recent step.
    fn effective_lr(&self, lr: f64) -> ParamVector;
    /// Coefficients being applied, if the optimizer sits in the polytope.
    fn coefficients(&self) -> Option<CoefficientVector>;
}

#[derive(Clone, Debug)]
pub struct BaseOptimizer {
    pub kind: BaseKind,
    pub hp: BaseHyperParams,
    pub state: BaseOptState,
}

impl BaseOptimizer {
    pub fn new(kind: BaseKind, hp: BaseHyperParams, dim: usize) -> Result<Self> {
        hp.validate()?;
        Ok(Self {
            kind,
            hp,
            state: BaseOptState::new(dim),
        })
    }
}

impl Stepper for BaseOptimizer {
    fn step(&mut self, x: &mut [f64], g: &[f64], lr: f64) -> Result<()> {
        self.state.step(self.kind, &self.hp, x, g, lr)
    }

    fn effective_lr(&self, lr: f64) -> ParamVector {
        effective_lr(&self.state.v, lr)
    }

    fn coefficients(&self) -> Option<CoefficientVector> {
        let hp = &self.hp;
        let q = match self.kind {
            BaseKind::Sgd => return None,
            BaseKind::Adam => CoefficientVector::adam(hp.beta1, hp.beta2),
            BaseKind::AmsGrad | BaseKind::AvGrad => CoefficientVector::avgrad(hp.beta1, hp.beta2),
            BaseKind::Yogi => CoefficientVector::yogi(hp.beta1, hp.beta2),
            BaseKind::Adan => CoefficientVector::adan(hp.beta1, hp.beta2, hp.beta3),
            BaseKind::Lion => CoefficientVector::lion(hp.beta1_lion, hp.beta2_lion),
        };
        Some(CoefficientVector {
            beta1_lion: hp.beta1_lion,
            beta2_lion: hp.beta2_lion,
            ..q
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Rng;
    use proptest::prelude::*;

    fn hp(b1: f64, b2: f64, eps: f64) -> BaseHyperParams {
        BaseHyperParams {
            eps,
            ..BaseHyperParams::with_betas(b1, b2)
        }
    }

    #[test]
    fn adam_hand_step() {
        let (x, s) = base_step(BaseKind::Adam, &BaseOptState::new(1), &hp(0.5, 0.5, 0.0), &[1.0], &[2.0], 0.1).unwrap();
        assert_eq!(s.m[0], 1.0);
        assert_eq!(s.v[0], 2.0);
        assert!((x[0] - (1.0 - 0.1 / 2f64.sqrt())).abs() < 1e-15);
        assert!((x[0] - 0.929289).abs() < 1e-6);
    }

    #[test]
    fn avgrad_first_step_uses_fresh_moment() {
        let mut rng = Rng::new(3);
        for _ in 0..50 {
            let g = [rng.normal() * 10.0];
            let (_, s) = base_step(BaseKind::AvGrad, &BaseOptState::new(1), &hp(0.9, 0.99, 1e-8), &[0.0], &g, 0.1).unwrap();
            assert_eq!(s.v_avg[0], s.v_bar[0]);
        }
    }

    #[test]
    fn lion_hand_step() {
        let h = BaseHyperParams {
            beta1_lion: 0.9,
            ..BaseHyperParams::default()
        };
        let mut s = BaseOptState::new(1);
        let mut x = [0.0];
        s.step(BaseKind::Lion, &h, &mut x, &[-3.0], 0.25).unwrap();
        // u = 0.9·0 + 0.1·(−3) = −0.3, so x moves by +α.
        assert_eq!(x[0], 0.25);
        assert!((s.m_lion[0] - (-0.03)).abs() < 1e-15);
    }

    #[test]
    fn yogi_and_adam_agree_on_first_step() {
        let mut rng = Rng::new(8);
        for _ in 0..100 {
            let g: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
            let x = [0.1, 0.2, 0.3, 0.4];
            let (xa, sa) = base_step(BaseKind::Adam, &BaseOptState::new(4), &hp(0.9, 0.99, 1e-8), &x, &g, 0.1).unwrap();
            let (xy, sy) = base_step(BaseKind::Yogi, &BaseOptState::new(4), &hp(0.9, 0.99, 1e-8), &x, &g, 0.1).unwrap();
            assert_eq!(xa, xy);
            assert_eq!(sa.v, sy.v);
        }
    }

    #[test]
    fn adan_without_beta3_is_adam() {
        let mut rng = Rng::new(9);
        let (mut sa, mut sd) = (BaseOptState::new(3), BaseOptState::new(3));
        let (mut xa, mut xd) = ([1.0, -1.0, 0.5], [1.0, -1.0, 0.5]);
        let h = hp(0.9, 0.999, 1e-8);
        for t in 1..=500u64 {
            let g: Vec<f64> = (0..3).map(|_| rng.normal()).collect();
            let lr = 0.01 / (t as f64).sqrt();
            sa.step(BaseKind::Adam, &h, &mut xa, &g, lr).unwrap();
            sd.step(BaseKind::Adan, &h, &mut xd, &g, lr).unwrap();
            assert_eq!(xa, xd, "step {t}");
        }
    }

    #[test]
    fn avgrad_matches_explicit_prefix_average() {
        let mut rng = Rng::new(10);
        let mut s = BaseOptState::new(2);
        let mut x = [0.0, 0.0];
        let mut sum = [0.0f64; 2];
        let h = hp(0.9, 0.99, 1e-8);
        for t in 1..=10_000u64 {
            let g = [rng.normal(), 100.0 * rng.uniform()];
            s.step(BaseKind::AvGrad, &h, &mut x, &g, 1e-3).unwrap();
            for i in 0..2 {
                sum[i] += s.v_bar[i];
                let exact = sum[i] / t as f64;
                assert!((s.v_avg[i] - exact).abs() <= 1e-12 * exact.abs(), "t={t}");
            }
        }
    }

    #[test]
    fn effective_lr_convention() {
        assert_eq!(effective_lr(&[4.0], 0.1).as_slice(), &[0.05]);
        assert_eq!(effective_lr(&[0.0], 0.1).as_slice(), &[0.0]);
    }

    #[test]
    fn errors() {
        let mut s = BaseOptState::new(2);
        let mut x = [0.0, 0.0];
        let h = BaseHyperParams::default();
        assert!(matches!(s.step(BaseKind::Adam, &h, &mut x, &[1.0], 0.1), Err(crate::Error::Contract(_))));
        assert!(matches!(s.step(BaseKind::Adam, &h, &mut x, &[1.0, f64::NAN], 0.1), Err(crate::Error::Numeric(_))));
        assert!(BaseOptimizer::new(BaseKind::Adam, BaseHyperParams::with_betas(1.0, 0.9), 2).is_err());
    }

    #[test]
    fn weight_decay_is_applied_before_the_update() {
        let h = BaseHyperParams {
            weight_decay: 0.5,
            ..BaseHyperParams::default()
        };
        let (x, _) = base_step(BaseKind::Sgd, &BaseOptState::new(1), &h, &[2.0], &[0.0], 0.1).unwrap();
        assert!((x[0] - 1.9).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn amsgrad_effective_lr_never_increases(
            seed in any::<u64>(),
            heavy in 0.0f64..4.0,
        ) {
            let mut rng = Rng::new(seed);
            let mut s = BaseOptState::new(3);
            let mut x = [0.0; 3];
            let h = hp(0.9, 0.99, 1e-8);
            let mut prev: Option<ParamVector> = None;
            for t in 1..=1000u64 {
                let g: Vec<f64> = (0..3).map(|_| rng.normal() * 10f64.powf(heavy * (rng.uniform() - 0.5))).collect();
                let lr = 0.1 / (t as f64).sqrt();
                s.step(BaseKind::AmsGrad, &h, &mut x, &g, lr).unwrap();
                prop_assert!(s.v.iter().all(|&v| v >= 0.0) && s.v_bar.iter().all(|&v| v >= 0.0));
                let eff = effective_lr(&s.v, lr);
                if let Some(p) = &prev {
                    for i in 0..3 {
                        // Skip coordinates whose previous effective rate was the 0/0 placeholder.
                        if p[i] != 0.0 {
                            prop_assert!(eff[i] <= p[i], "t={} i={}", t, i);
                        }
                    }
                }
                prev = Some(eff);
            }
        }

        #[test]
        fn stepping_is_deterministic(seed in any::<u64>(), k in 0usize..7) {
            let kind = BaseKind::ALL[k];
            let run = || {
                let mut rng = Rng::new(seed);
                let mut s = BaseOptState::new(4);
                let mut x = [0.5; 4];
                for _ in 0..50 {
                    let g: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
                    s.step(kind, &BaseHyperParams::default(), &mut x, &g, 0.01).unwrap();
                }
                (x, s)
            };
            let (a, b) = (run(), run());
            prop_assert_eq!(a.0.map(f64::to_bits), b.0.map(f64::to_bits));
            prop_assert_eq!(a.1, b.1);
        }
    }
}
