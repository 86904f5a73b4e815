//! Turning a [`Config`] into a runnable experiment and executing it.

use std::path::PathBuf;

use super::config::{Config, OUTPUT_DIR_ENV};
use crate::base_opt::{BaseHyperParams, BaseKind, BaseOptimizer};
use crate::error::{Error, Result};
use crate::hyper::{extract_fs, run_mada_observed, HyperConfig};
use crate::numkit::{ParamVector, Schedule};
use crate::poly_opt::{freeze, Coef, CoefficientVector, PolyVariant};
use crate::problems::{reddi_average_regret, LogisticSynth, Problem, Quadratic, Rosenbrock, TinyMlp, TinyMlpSpec};
use crate::record::RunRecord;
use crate::run::{run_fixed_observed, Progress, RunOptions};

#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum OptimizerSpec {
    Base { kind: BaseKind, hp: BaseHyperParams },
    /// The parameterized optimizer with fixed coefficients.
    Poly { variant: PolyVariant, q: CoefficientVector },
    Mada { variant: PolyVariant, q0: CoefficientVector, hyper: HyperConfig },
}

/// A fully resolved, validated experiment.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub problem: Problem,
    pub optimizer: OptimizerSpec,
    pub opts: RunOptions,
    pub config: Config,
    pub output_dir: PathBuf,
    pub output_name: String,
}

/// Result of [`RunSpec::execute`].
#[derive(Clone, Debug)]
pub struct Outcome {
    pub x: ParamVector,
    pub record: RunRecord,
}

fn usage(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Usage(format!("config key `{key}`: {msg}"))
}

fn build_problem(c: &Config) -> Result<Problem> {
    let seed = c.u64("problem.seed")?;
    let kind = c.str("problem.kind")?;
    let positive_dim = |key: &str, min: usize| -> Result<usize> {
        let d = c.usize(key)?;
        if d < min {
            return Err(usage(key, format!("must be at least {min}")));
        }
        Ok(d)
    };
    Ok(match kind {
        "quadratic" => {
            let cond = c.f64("problem.cond")?;
            if cond < 1.0 {
                return Err(usage("problem.cond", "condition number must be ≥ 1"));
            }
            let noise = c.f64("problem.noise")?;
            if noise < 0.0 {
                return Err(usage("problem.noise", "must be non-negative"));
            }
            Problem::quadratic(Quadratic::random(positive_dim("problem.dim", 1)?, cond, noise, seed))
        }
        "rosenbrock" => Problem::rosenbrock(Rosenbrock::new(
            positive_dim("problem.dim", 2)?,
            c.f64("problem.a")?,
            c.f64("problem.b")?,
        )),
        "logistic" => Problem::logistic(LogisticSynth::new(
            positive_dim("problem.dim", 2)?,
            positive_dim("problem.samples", 2)?,
            c.f64("problem.separation")?,
            c.usize("problem.batch_size")?,
            c.f64("problem.l2")?,
            seed,
        )),
        "mlp" => {
            let widths = c.usize_list("problem.widths")?;
            if widths.len() < 2 || widths.contains(&0) || *widths.last().unwrap() < 2 {
                return Err(usage("problem.widths", "need ≥ 2 positive widths and ≥ 2 output classes"));
            }
            let spec = TinyMlpSpec {
                layer_widths: widths,
                samples: positive_dim("problem.samples", 1)?,
                separation: c.f64("problem.separation")?,
                label_noise: c.f64("problem.label_noise")?,
                batch_size: c.usize("problem.batch_size")?,
            };
            if !(0.0..=0.5).contains(&spec.label_noise) {
                return Err(usage("problem.label_noise", "must lie in [0, 0.5]"));
            }
            Problem::mlp(TinyMlp::new(spec, seed))
        }
        "reddi" => {
            let x0 = c.f64("problem.x0")?;
            if !(-1.0..=1.0).contains(&x0) {
                return Err(usage("problem.x0", "must lie in [-1, 1]"));
            }
            Problem::reddi(x0)
        }
        other => return Err(usage("problem.kind", format!("unknown problem `{other}`"))),
    })
}

fn initial_q(c: &Config) -> Result<CoefficientVector> {
    let mut q = CoefficientVector::adam(0.9, 0.99);
    for k in Coef::ALL {
        let key = format!("optimizer.{}", k.name());
        q.set(k, c.f64(&key)?);
    }
    q.validate().map_err(|e| Error::Usage(format!("initial coefficients: {e}")))?;
    Ok(q)
}

fn variant(c: &Config) -> Result<PolyVariant> {
    let v = c.str("optimizer.variant")?;
    PolyVariant::parse(v).ok_or_else(|| usage("optimizer.variant", format!("unknown variant `{v}`")))
}

fn build_hyper(c: &Config) -> Result<HyperConfig> {
    let mut h = HyperConfig {
        lr_betas: c.f64("mada.hyper_lr_betas")?,
        lr_other: c.f64("mada.hyper_lr_other")?,
        momentum: c.f64("mada.hyper_momentum")?,
        freeze_steps: c.u64("mada.freeze_steps")?,
        ..HyperConfig::default()
    };
    for k in Coef::ALL {
        let i = k.index();
        let lr_key = format!("mada.lr.{}", k.name());
        if c.has(&lr_key) {
            h.lr_override[i] = Some(c.f64(&lr_key)?);
        }
        let m_key = format!("mada.momentum.{}", k.name());
        if c.has(&m_key) {
            h.momentum_enabled[i] = c.bool(&m_key)?;
        }
        if let Some(b) = c.f64_pair(&format!("mada.bounds.{}", k.name()))? {
            h.bounds[i] = b;
        }
    }
    h.validate().map_err(|e| Error::Usage(format!("mada settings: {e}")))?;
    Ok(h)
}

fn build_schedule(c: &Config, steps: u64) -> Result<Schedule> {
    let peak = c.f64("schedule.peak")?;
    let s = match c.str("schedule.kind")? {
        "constant" => Schedule::Constant { peak },
        "inv-sqrt" => Schedule::InvSqrt { peak },
        "cosine-warmup" => {
            let total = c.u64("schedule.total_steps")?;
            Schedule::CosineWarmup {
                peak,
                final_lr: c.f64("schedule.final")?,
                warmup_steps: c.u64("schedule.warmup_steps")?,
                total_steps: if total == 0 { steps } else { total },
            }
        }
        other => return Err(usage("schedule.kind", format!("unknown schedule `{other}`"))),
    };
    s.validate().map_err(|e| Error::Usage(format!("schedule: {e}")))?;
    Ok(s)
}

impl RunSpec {
    pub fn from_config(config: &Config) -> Result<Self> {
        let c = config;
        let problem = build_problem(c)?;
        let steps = c.u64("run.steps")?;
        if steps == 0 {
            return Err(usage("run.steps", "must be positive"));
        }
        let stride = c.u64("run.stride")?;
        let mut opts = RunOptions::new(steps, c.u64("run.seed")?, build_schedule(c, steps)?);
        opts.eps = c.f64("optimizer.eps")?;
        opts.weight_decay = c.f64("optimizer.weight_decay")?;
        opts.stride = (stride > 0).then_some(stride);
        if opts.eps < 0.0 {
            return Err(usage("optimizer.eps", "must be non-negative"));
        }
        if opts.weight_decay < 0.0 {
            return Err(usage("optimizer.weight_decay", "must be non-negative"));
        }
        let optimizer = match c.str("optimizer.kind")? {
            "base" => {
                let name = c.str("optimizer.base")?;
                let kind = BaseKind::parse(name).ok_or_else(|| usage("optimizer.base", format!("unknown optimizer `{name}`")))?;
                let hp = BaseHyperParams {
                    beta1: c.f64("optimizer.beta1")?,
                    beta2: c.f64("optimizer.beta2")?,
                    beta3: c.f64("optimizer.beta3")?,
                    eps: opts.eps,
                    weight_decay: opts.weight_decay,
                    beta1_lion: c.f64("optimizer.beta1_lion")?,
                    beta2_lion: c.f64("optimizer.beta2_lion")?,
                    bias_correction: c.bool("optimizer.bias_correction")?,
                };
                hp.validate().map_err(|e| Error::Usage(format!("optimizer settings: {e}")))?;
                OptimizerSpec::Base { kind, hp }
            }
            "poly" => OptimizerSpec::Poly {
                variant: variant(c)?,
                q: initial_q(c)?,
            },
            "mada" => {
                let hyper = build_hyper(c)?;
                if hyper.freeze_steps >= steps {
                    return Err(usage("mada.freeze_steps", "must be smaller than run.steps"));
                }
                OptimizerSpec::Mada {
                    variant: variant(c)?,
                    q0: initial_q(c)?,
                    hyper,
                }
            }
            other => return Err(usage("optimizer.kind", format!("unknown kind `{other}` (base | poly | mada)"))),
        };
        let output_dir = match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => PathBuf::from(c.str("output.dir")?),
        };
        Ok(Self {
            problem,
            optimizer,
            opts,
            config: config.clone(),
            output_dir,
            output_name: c.str("output.name")?.to_string(),
        })
    }

    /// Where [`Self::execute`]'s record belongs on disk.
    pub fn csv_path(&self) -> PathBuf {
        self.output_dir.join(format!("{}.csv", self.output_name))
    }

    pub fn execute(&self) -> Result<Outcome> {
        self.execute_observed(&mut |_| {})
    }

    /// Runs the experiment; `observer` sees every step in order.
    pub fn execute_observed(&self, observer: &mut dyn FnMut(&Progress)) -> Result<Outcome> {
        let dim = self.problem.dim();
        let (x, mut record) = match &self.optimizer {
            OptimizerSpec::Base { kind, hp } => {
                let mut opt = BaseOptimizer::new(*kind, *hp, dim)?;
                run_fixed_observed(&self.problem, &mut opt, &self.opts, observer)?
            }
            OptimizerSpec::Poly { variant, q } => {
                let mut opt = freeze(*q, *variant, dim, self.opts.eps, self.opts.weight_decay)?;
                run_fixed_observed(&self.problem, &mut opt, &self.opts, observer)?
            }
            OptimizerSpec::Mada { variant, q0, hyper } => {
                let (x, _, rec) = run_mada_observed(&self.problem, *q0, *variant, hyper, &self.opts, &mut |p, _| observer(p))?;
                (x, rec)
            }
        };
        record.summary.config_hash = self.config.hash();
        record.summary.config = self.config.resolved();
        Ok(Outcome { x, record })
    }
}

/// Average-regret series of a Reddi run, sampled at the record's steps.
#[derive(Clone, Debug)]
pub struct ReddiOutcome {
    pub outcome: Outcome,
    pub regret: Vec<(u64, f64)>,
}

/// Runs a Reddi config, tracking the played points for the regret series.
pub fn run_reddi(spec: &RunSpec) -> Result<ReddiOutcome> {
    if spec.problem.name() != "reddi" {
        return Err(usage("problem.kind", "the regret series needs problem.kind = reddi"));
    }
    let mut played = Vec::with_capacity(spec.opts.steps as usize);
    let outcome = spec.execute_observed(&mut |p| played.push(p.x[0]))?;
    let avg = reddi_average_regret(&played)?;
    let regret = outcome
        .record
        .rows
        .iter()
        .map(|r| (r.step, avg[r.step as usize - 1]))
        .collect();
    Ok(ReddiOutcome { outcome, regret })
}

/// Configuration of the Reddi experiment for a named optimizer
/// (`adam`, `avgrad`, `amsgrad` or `mada`).
pub fn reddi_config(optimizer: &str) -> Result<Config> {
    match optimizer {
        "adam" | "avgrad" | "amsgrad" | "mada" => Config::load(&format!("reddi_{optimizer}")),
        other => Err(Error::Usage(format!(
            "unknown reddi optimizer `{other}` (adam | avgrad | amsgrad | mada)"
        ))),
    }
}

/// Config that re-runs `record`'s experiment with its final coefficients frozen.
pub fn replay_fs_config(record: &RunRecord) -> Result<Config> {
    let q = extract_fs(record)?;
    let mut cfg = Config::default();
    for (k, v) in &record.summary.config {
        if k.starts_with("mada.") {
            continue;
        }
        cfg.set(k, v)?;
    }
    cfg.set("optimizer.kind", "poly")?;
    for k in Coef::ALL {
        cfg.set(&format!("optimizer.{}", k.name()), &format!("{}", q.get(k)))?;
    }
    let name = cfg.str("output.name")?.to_string();
    cfg.set("output.name", &format!("{name}_fs"))?;
    Ok(cfg)
}

/// MADA-FS: freeze the coefficients a MADA run ended with and train again from scratch.
pub fn replay_fs(record: &RunRecord) -> Result<(RunSpec, Outcome)> {
    let spec = RunSpec::from_config(&replay_fs_config(record)?)?;
    let out = spec.execute()?;
    Ok((spec, out))
}
