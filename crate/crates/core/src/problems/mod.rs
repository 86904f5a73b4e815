//! Differentiable objective oracles `f_t` with exact analytic gradients.
//!
//! A [`Problem`] is immutable once built. [`Problem::eval`] maps
//! `(x, t, seed)` to the loss and gradient of the step-`t` sample; stochastic
//! kinds draw their minibatch or noise from `Rng(seed).substream(kind, t)`, so
//! the same triple always yields the same answer.

mod logistic;
mod mlp;
mod quadratic;
mod reddi;
mod rosenbrock;

pub use logistic::LogisticSynth;
pub use mlp::{Sample, TinyMlp, TinyMlpSpec};
pub use quadratic::Quadratic;
pub use reddi::{reddi_average_regret, reddi_grad, reddi_loss, REDDI_PERIOD};
pub use rosenbrock::Rosenbrock;

use crate::error::{contract, Error, Result};
use crate::numkit::{ParamVector, Rng};

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub grad: ParamVector,
}

#[derive(Clone, Debug)]
pub enum ProblemKind {
    Quadratic(Quadratic),
    Rosenbrock(Rosenbrock),
    Logistic(LogisticSynth),
    /// The adversarial online sequence on `[-1, 1]`; see [`reddi_grad`].
    Reddi,
    Mlp(TinyMlp),
}

#[derive(Clone, Debug)]
pub struct Problem {
    kind: ProblemKind,
    dim: usize,
    bounds: Option<Vec<(f64, f64)>>,
    init: ParamVector,
}

impl Problem {
    pub fn quadratic(q: Quadratic) -> Self {
        let dim = q.dim();
        Self::new(ProblemKind::Quadratic(q), dim, None)
    }

    pub fn rosenbrock(r: Rosenbrock) -> Self {
        let dim = r.dim();
        let mut p = Self::new(ProblemKind::Rosenbrock(r), dim, None);
        p.init = ParamVector::filled(dim, -1.0);
        p
    }

    pub fn logistic(l: LogisticSynth) -> Self {
        let dim = l.dim();
        Self::new(ProblemKind::Logistic(l), dim, None)
    }

    pub fn mlp(m: TinyMlp) -> Self {
        let dim = m.spec().param_count();
        let init = m.initial_params();
        let mut p = Self::new(ProblemKind::Mlp(m), dim, None);
        p.init = init;
        p
    }

    /// The online problem on `x ∈ [-1, 1]`, starting from `x0`.
    pub fn reddi(x0: f64) -> Self {
        let mut p = Self::new(ProblemKind::Reddi, 1, Some(vec![(-1.0, 1.0)]));
        p.init = ParamVector::from([x0.clamp(-1.0, 1.0)]);
        p
    }

    fn new(kind: ProblemKind, dim: usize, bounds: Option<Vec<(f64, f64)>>) -> Self {
        Self {
            kind,
            dim,
            bounds,
            init: ParamVector::zeros(dim),
        }
    }

    /// Replaces the starting point used by runners.
    pub fn with_initial_point(mut self, x0: ParamVector) -> Result<Self> {
        x0.ensure_len(self.dim, "initial point")?;
        self.check_domain(&x0)?;
        self.init = x0;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ProblemKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ProblemKind::Quadratic(_) => "quadratic",
            ProblemKind::Rosenbrock(_) => "rosenbrock",
            ProblemKind::Logistic(_) => "logistic",
            ProblemKind::Reddi => "reddi",
            ProblemKind::Mlp(_) => "mlp",
        }
    }

    pub fn bounds(&self) -> Option<&[(f64, f64)]> {
        self.bounds.as_deref()
    }

    pub fn initial_point(&self) -> ParamVector {
        self.init.clone()
    }

    /// Whether `eval` depends on the seed.
    pub fn is_stochastic(&self) -> bool {
        match &self.kind {
            ProblemKind::Quadratic(q) => q.noise() > 0.0,
            ProblemKind::Logistic(l) => !l.is_full_batch(),
            ProblemKind::Mlp(m) => !m.is_full_batch(),
            ProblemKind::Rosenbrock(_) | ProblemKind::Reddi => false,
        }
    }

    /// Loss and exact gradient of `f_t` at `x`.
    pub fn eval(&self, x: &[f64], t: u64, seed: u64) -> Result<Evaluation> {
        contract!(
            x.len() == self.dim,
            "point has length {}, problem dimension is {}",
            x.len(),
            self.dim
        );
        self.check_domain(x)?;
        let mut grad = ParamVector::zeros(self.dim);
        let loss = match &self.kind {
            ProblemKind::Quadratic(q) => {
                let mut rng = (q.noise() > 0.0).then(|| Rng::new(seed).substream("quadratic", t));
                q.loss_grad(x, rng.as_mut(), &mut grad)
            }
            ProblemKind::Rosenbrock(r) => r.loss_grad(x, &mut grad),
            ProblemKind::Logistic(l) => {
                let batch = l.sample_batch(&mut Rng::new(seed).substream("logistic", t));
                l.loss_grad(x, &batch, &mut grad)
            }
            ProblemKind::Reddi => {
                grad[0] = reddi_grad(t, x[0])?;
                reddi_loss(t, x[0])
            }
            ProblemKind::Mlp(m) => {
                let batch = m.sample_batch(&mut Rng::new(seed).substream("mlp", t));
                m.loss_grad(x, &batch, &mut grad)
            }
        };
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("{} loss is {loss} at step {t}", self.name())));
        }
        grad.ensure_finite("gradient")?;
        Ok(Evaluation { loss, grad })
    }

    /// Noise-free full objective `F(x)`, where one exists.
    ///
    /// For dataset problems this is the mean loss over every sample; the online
    /// problem has no stationary objective and returns `None`.
    pub fn objective(&self, x: &[f64]) -> Option<f64> {
        if x.len() != self.dim {
            return None;
        }
        let mut scratch = ParamVector::zeros(self.dim);
        match &self.kind {
            ProblemKind::Quadratic(q) => Some(q.loss_grad(x, None, &mut scratch)),
            ProblemKind::Rosenbrock(r) => Some(r.loss_grad(x, &mut scratch)),
            ProblemKind::Logistic(l) => Some(l.loss_grad(x, &l.full_batch(), &mut scratch)),
            ProblemKind::Mlp(m) => Some(m.loss_grad(x, &m.full_batch(), &mut scratch)),
            ProblemKind::Reddi => None,
        }
    }

    /// Clamps `x` into the constraint box; no-op for unconstrained problems.
    pub fn project(&self, x: &mut [f64]) {
        if let Some(bounds) = &self.bounds {
            for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
                *xi = xi.clamp(lo, hi);
            }
        }
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        if let Some(bounds) = &self.bounds {
            for (i, (&xi, &(lo, hi))) in x.iter().zip(bounds).enumerate() {
                if !(lo..=hi).contains(&xi) {
                    return Err(Error::Domain(format!(
                        "coordinate {i} = {xi} lies outside the constraint box [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }
}
