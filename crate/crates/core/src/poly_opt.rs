//! The parameterized optimizer: one update whose coefficients span the
//! Adam / AMSGrad / AVGrad / Yogi / Adan / Lion polytope.

use crate::base_opt::{effective_lr, Stepper};
use crate::error::{contract, Result};
use crate::numkit::{sign, ParamVector};

/// Index of a field in [`CoefficientVector`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coef {
    Beta1,
    Beta2,
    Beta3,
    Rho,
    C,
    Gamma,
    Beta1Lion,
    Beta2Lion,
}

pub const NUM_COEFS: usize = 8;

impl Coef {
    pub const ALL: [Coef; NUM_COEFS] = [
        Coef::Beta1,
        Coef::Beta2,
        Coef::Beta3,
        Coef::Rho,
        Coef::C,
        Coef::Gamma,
        Coef::Beta1Lion,
        Coef::Beta2Lion,
    ];

    /// The coefficients with a hyper-gradient path (Lion's betas only reach the
    /// update through `sign`).
    pub const LEARNABLE: [Coef; 6] = [Coef::Beta1, Coef::Beta2, Coef::Beta3, Coef::Rho, Coef::C, Coef::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            Coef::Beta1 => "beta1",
            Coef::Beta2 => "beta2",
            Coef::Beta3 => "beta3",
            Coef::Rho => "rho",
            Coef::C => "c",
            Coef::Gamma => "gamma",
            Coef::Beta1Lion => "beta1_lion",
            Coef::Beta2Lion => "beta2_lion",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Clamp interval of the domain D.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            Coef::Beta1 | Coef::Beta3 => (0.0, 0.99),
            Coef::Beta2 => (0.5, 0.99),
            _ => (0.0, 1.0),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientVector {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub rho: f64,
    pub c: f64,
    pub gamma: f64,
    pub beta1_lion: f64,
    pub beta2_lion: f64,
}

impl CoefficientVector {
    const LION_DEFAULT: (f64, f64) = (0.9, 0.99);

    pub fn adam(beta1: f64, beta2: f64) -> Self {
        Self {
            beta1,
            beta2,
            beta3: 0.0,
            rho: 1.0,
            c: 1.0,
            gamma: 1.0,
            beta1_lion: Self::LION_DEFAULT.0,
            beta2_lion: Self::LION_DEFAULT.1,
        }
    }

    /// AVGrad under the averaging variant, AMSGrad under the max variant.
    pub fn avgrad(beta1: f64, beta2: f64) -> Self {
        Self {
            rho: 0.0,
            ..Self::adam(beta1, beta2)
        }
    }

    pub fn amsgrad(beta1: f64, beta2: f64) -> Self {
        Self::avgrad(beta1, beta2)
    }

    pub fn yogi(beta1: f64, beta2: f64) -> Self {
        Self {
            c: 0.0,
            ..Self::adam(beta1, beta2)
        }
    }

    pub fn adan(beta1: f64, beta2: f64, beta3: f64) -> Self {
        Self {
            beta3,
            ..Self::adam(beta1, beta2)
        }
    }

    pub fn lion(beta1_lion: f64, beta2_lion: f64) -> Self {
        Self {
            gamma: 0.0,
            beta1_lion,
            beta2_lion,
            ..Self::adam(0.9, 0.99)
        }
    }

    pub fn get(&self, k: Coef) -> f64 {
        match k {
            Coef::Beta1 => self.beta1,
            Coef::Beta2 => self.beta2,
            Coef::Beta3 => self.beta3,
            Coef::Rho => self.rho,
            Coef::C => self.c,
            Coef::Gamma => self.gamma,
            Coef::Beta1Lion => self.beta1_lion,
            Coef::Beta2Lion => self.beta2_lion,
        }
    }

    pub fn set(&mut self, k: Coef, v: f64) {
        *match k {
            Coef::Beta1 => &mut self.beta1,
            Coef::Beta2 => &mut self.beta2,
            Coef::Beta3 => &mut self.beta3,
            Coef::Rho => &mut self.rho,
            Coef::C => &mut self.c,
            Coef::Gamma => &mut self.gamma,
            Coef::Beta1Lion => &mut self.beta1_lion,
            Coef::Beta2Lion => &mut self.beta2_lion,
        } = v;
    }

    pub fn to_array(&self) -> [f64; NUM_COEFS] {
        Coef::ALL.map(|k| self.get(k))
    }

    pub fn from_array(a: [f64; NUM_COEFS]) -> Self {
        let mut q = Self::adam(0.0, 0.0);
        for k in Coef::ALL {
            q.set(k, a[k.index()]);
        }
        q
    }

    pub fn validate(&self) -> Result<()> {
        for k in Coef::ALL {
            let (lo, hi) = k.bounds();
            let v = self.get(k);
            contract!(
                (lo..=hi).contains(&v),
                "coefficient {} = {v} lies outside [{lo}, {hi}]",
                k.name()
            );
        }
        Ok(())
    }

    /// Clamps every field into D.
    pub fn projected(mut self) -> Self {
        for k in Coef::ALL {
            let (lo, hi) = k.bounds();
            self.set(k, self.get(k).clamp(lo, hi));
        }
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolyVariant {
    /// `v = ρ v̄ + (1−ρ) ṽ` with `ṽ` the running average of `v̄`.
    AvgradInterp,
    /// `v = ρ v̄ + (1−ρ) v^max` with `v^max` the running maximum of `v̄`.
    MaxInterp,
}

impl PolyVariant {
    pub fn name(self) -> &'static str {
        match self {
            PolyVariant::AvgradInterp => "avgrad-interp",
            PolyVariant::MaxInterp => "max-interp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [PolyVariant::AvgradInterp, PolyVariant::MaxInterp]
            .into_iter()
            .find(|v| v.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolyState {
    pub variant: PolyVariant,
    pub t: u64,
    pub m: ParamVector,
    pub n: ParamVector,
    pub m_lion: ParamVector,
    pub v_bar: ParamVector,
    pub v_avg: ParamVector,
    pub v_max: ParamVector,
    pub prev_grad: ParamVector,
}

impl PolyState {
    pub fn new(variant: PolyVariant, dim: usize) -> Self {
        let z = ParamVector::zeros(dim);
        Self {
            variant,
            t: 0,
            m: z.clone(),
            n: z.clone(),
            m_lion: z.clone(),
            v_bar: z.clone(),
            v_avg: z.clone(),
            v_max: z.clone(),
            prev_grad: z,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }
}

/// Everything one step computed, plus the state it started from.
#[derive(Clone, Debug, PartialEq)]
pub struct StepTrace {
    pub t: u64,
    pub lr: f64,
    pub eps: f64,
    pub q: CoefficientVector,
    pub entering: PolyState,
    pub grad: ParamVector,
    /// `x` before weight decay.
    pub x_prev: ParamVector,
    pub m: ParamVector,
    pub n: ParamVector,
    pub u: ParamVector,
    pub g_hat: ParamVector,
    /// `g̃²`, the Yogi-blended squared gradient.
    pub g_tilde_sq: ParamVector,
    /// `sign(ĝ² − v̄_{t−1})`.
    pub yogi_sign: ParamVector,
    pub v_bar: ParamVector,
    /// `ṽ_t` or `v^max_t`, depending on the variant.
    pub v_slow: ParamVector,
    pub v: ParamVector,
    /// Max variant: whether the fresh `v̄_t` won the max (`v̄_t > v^max_{t−1}`).
    pub route_fresh: Vec<bool>,
}

impl StepTrace {
    pub fn variant(&self) -> PolyVariant {
        self.entering.variant
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }
}

/// One step of the parameterized update. Returns the trace of intermediates.
pub fn poly_step(
    state: &mut PolyState,
    q: &CoefficientVector,
    x: &mut [f64],
    g: &[f64],
    lr: f64,
    eps: f64,
    weight_decay: f64,
) -> Result<StepTrace> {
    let d = state.dim();
    contract!(
        x.len() == d && g.len() == d,
        "dimension mismatch: state {d}, x {}, g {}",
        x.len(),
        g.len()
    );
    q.validate()?;
    ParamVector::from(g).ensure_finite("gradient")?;
    let entering = state.clone();
    let x_prev = ParamVector::from(&*x);
    state.t += 1;
    let t = state.t;
    let mut tr = StepTrace {
        t,
        lr,
        eps,
        q: *q,
        entering,
        grad: g.into(),
        x_prev,
        m: ParamVector::zeros(d),
        n: ParamVector::zeros(d),
        u: ParamVector::zeros(d),
        g_hat: ParamVector::zeros(d),
        g_tilde_sq: ParamVector::zeros(d),
        yogi_sign: ParamVector::zeros(d),
        v_bar: ParamVector::zeros(d),
        v_slow: ParamVector::zeros(d),
        v: ParamVector::zeros(d),
        route_fresh: vec![false; d],
    };
    let CoefficientVector {
        beta1: b1,
        beta2: b2,
        beta3: b3,
        rho,
        c,
        gamma,
        beta1_lion: l1,
        beta2_lion: l2,
    } = *q;
    for i in 0..d {
        if weight_decay != 0.0 {
            x[i] -= weight_decay * lr * x[i];
        }
        let gi = g[i];
        let prev = if t == 1 { gi } else { state.prev_grad[i] };
        let delta = gi - prev;

        let m = b1 * state.m[i] + (1.0 - b1) * gi;
        let n = b3 * state.n[i] + (1.0 - b3) * delta;
        let u = l1 * state.m_lion[i] + (1.0 - l1) * gi;
        let m_lion = l2 * state.m_lion[i] + (1.0 - l2) * gi;

        let g_hat = gi + b3 * delta;
        let g_hat_sq = g_hat * g_hat;
        let v_bar_old = state.v_bar[i];
        let s = sign(g_hat_sq - v_bar_old);
        let g_tilde_sq = c * g_hat_sq + (1.0 - c) * (v_bar_old + g_hat_sq * s);
        let v_bar = b2 * v_bar_old + (1.0 - b2) * g_tilde_sq;

        let (v_slow, v) = match state.variant {
            PolyVariant::AvgradInterp => {
                let v_avg = (v_bar + (t - 1) as f64 * state.v_avg[i]) / t as f64;
                state.v_avg[i] = v_avg;
                (v_avg, rho * v_bar + (1.0 - rho) * v_avg)
            }
            PolyVariant::MaxInterp => {
                tr.route_fresh[i] = v_bar > state.v_max[i];
                let v_max = state.v_max[i].max(v_bar);
                state.v_max[i] = v_max;
                (v_max, rho * v_bar + (1.0 - rho) * v_max)
            }
        };

        let adaptive = if gamma == 0.0 {
            0.0
        } else {
            gamma * ((m + b3 * n) / (v.sqrt() + eps))
        };
        let lion = if gamma == 1.0 { 0.0 } else { (1.0 - gamma) * sign(u) };
        x[i] -= lr * (adaptive + lion);

        state.m[i] = m;
        state.n[i] = n;
        state.m_lion[i] = m_lion;
        state.v_bar[i] = v_bar;
        state.prev_grad[i] = gi;

        tr.m[i] = m;
        tr.n[i] = n;
        tr.u[i] = u;
        tr.g_hat[i] = g_hat;
        tr.g_tilde_sq[i] = g_tilde_sq;
        tr.yogi_sign[i] = s;
        tr.v_bar[i] = v_bar;
        tr.v_slow[i] = v_slow;
        tr.v[i] = v;
    }
    Ok(tr)
}

/// A [`Stepper`] applying [`poly_step`] with coefficients held fixed.
#[derive(Clone, Debug)]
pub struct FrozenPoly {
    q: CoefficientVector,
    state: PolyState,
    eps: f64,
    weight_decay: f64,
    last_v: ParamVector,
}

/// Freezes `q` into a fixed optimizer for a fresh run.
pub fn freeze(q: CoefficientVector, variant: PolyVariant, dim: usize, eps: f64, weight_decay: f64) -> Result<FrozenPoly> {
    q.validate()?;
    Ok(FrozenPoly {
        q,
        state: PolyState::new(variant, dim),
        eps,
        weight_decay,
        last_v: ParamVector::zeros(dim),
    })
}

impl FrozenPoly {
    pub fn state(&self) -> &PolyState {
        &self.state
    }
}

impl Stepper for FrozenPoly {
    fn step(&mut self, x: &mut [f64], g: &[f64], lr: f64) -> Result<()> {
        let tr = poly_step(&mut self.state, &self.q, x, g, lr, self.eps, self.weight_decay)?;
        self.last_v = tr.v;
        Ok(())
    }

    fn effective_lr(&self, lr: f64) -> ParamVector {
        effective_lr(&self.last_v, lr)
    }

    fn coefficients(&self) -> Option<CoefficientVector> {
        Some(self.q)
    }
}
