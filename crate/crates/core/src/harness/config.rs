//! Flat `key = value` run configuration with dotted keys.
//!
//! Lines starting with `#` are comments. Every key has a documented default
//! (see [`KEYS`]); per-coefficient hyper settings use the patterned keys
//! `mada.lr.<coef>`, `mada.momentum.<coef>` and `mada.bounds.<coef>`.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::poly_opt::Coef;

/// `(key, default, meaning)` for every plain key.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("problem.kind", "quadratic", "quadratic | rosenbrock | logistic | reddi | mlp"),
    ("problem.seed", "0", "dataset / problem-instance seed"),
    ("problem.dim", "10", "dimension (quadratic, rosenbrock, logistic incl. bias)"),
    ("problem.cond", "10", "quadratic: condition number of the Hessian"),
    ("problem.noise", "0", "quadratic: std of the per-step linear noise"),
    ("problem.a", "1", "rosenbrock a"),
    ("problem.b", "100", "rosenbrock b"),
    ("problem.samples", "512", "logistic / mlp dataset size"),
    ("problem.separation", "2", "logistic / mlp class separation"),
    ("problem.batch_size", "32", "logistic / mlp minibatch size (0 = full batch)"),
    ("problem.l2", "0", "logistic L2 penalty"),
    ("problem.label_noise", "0.05", "mlp label flip probability"),
    ("problem.widths", "2,16,16,2", "mlp layer widths"),
    ("problem.x0", "1", "reddi starting point"),
    ("optimizer.kind", "base", "base | poly | mada"),
    ("optimizer.base", "adam", "sgd | adam | amsgrad | avgrad | yogi | adan | lion"),
    ("optimizer.variant", "avgrad-interp", "avgrad-interp | max-interp"),
    ("optimizer.beta1", "0.9", "beta1 (initial value for mada)"),
    ("optimizer.beta2", "0.99", "beta2"),
    ("optimizer.beta3", "0", "beta3"),
    ("optimizer.rho", "1", "rho"),
    ("optimizer.c", "1", "c"),
    ("optimizer.gamma", "1", "gamma"),
    ("optimizer.beta1_lion", "0.9", "Lion beta1"),
    ("optimizer.beta2_lion", "0.99", "Lion beta2"),
    ("optimizer.eps", "1e-8", "epsilon"),
    ("optimizer.weight_decay", "0", "decoupled weight decay"),
    ("optimizer.bias_correction", "false", "base optimizers only"),
    ("mada.hyper_lr_betas", "0.0025", "hyper learning rate for beta1, beta2"),
    ("mada.hyper_lr_other", "0.0025", "hyper learning rate for beta3, rho, c, gamma"),
    ("mada.hyper_momentum", "0.5", "hyper momentum"),
    ("mada.freeze_steps", "0", "steps before coefficients start moving"),
    ("schedule.kind", "inv-sqrt", "constant | inv-sqrt | cosine-warmup"),
    ("schedule.peak", "0.01", "peak learning rate"),
    ("schedule.final", "0", "cosine-warmup final learning rate"),
    ("schedule.warmup_steps", "0", "cosine-warmup warmup length"),
    ("schedule.total_steps", "0", "cosine-warmup horizon (0 = run.steps)"),
    ("run.steps", "1000", "number of optimizer steps"),
    ("run.seed", "0", "minibatch / noise seed"),
    ("run.stride", "0", "record stride (0 = 1 up to 10^4 steps, else 10)"),
    ("output.dir", "runs", "output directory (MADA_OUTPUT_DIR overrides)"),
    ("output.name", "run", "file stem for the record"),
];

const PATTERNED: [&str; 3] = ["mada.lr.", "mada.momentum.", "mada.bounds."];

/// Environment variable that overrides `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "MADA_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

fn default_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(k, _, _)| *k == key).map(|(_, d, _)| *d)
}

fn check_key(key: &str) -> Result<()> {
    if default_of(key).is_some() {
        return Ok(());
    }
    for prefix in PATTERNED {
        if let Some(coef) = key.strip_prefix(prefix) {
            if Coef::parse(coef).is_some() {
                return Ok(());
            }
        }
    }
    Err(Error::Usage(format!("unknown config key `{key}`")))
}

impl Config {
    /// Parses the text format; unknown keys, duplicates and lines without `=` are usage errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Usage(format!("config line {}: expected `key = value`, got `{line}`", n + 1)));
            };
            let key = k.trim();
            if cfg.entries.contains_key(key) {
                return Err(Error::Usage(format!("config key `{key}` given twice")));
            }
            cfg.set(key, v.trim())?;
        }
        Ok(cfg)
    }

    /// A preset name, or else a path to a config file.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if let Some(text) = preset(name_or_path) {
            return Self::parse(text);
        }
        let path = Path::new(name_or_path);
        if !path.exists() {
            return Err(Error::Usage(format!(
                "`{name_or_path}` is neither a preset ({}) nor a readable file",
                PRESETS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
            )));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        check_key(key)?;
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("override `{assignment}` is not of the form key=value")))?;
        self.set(k.trim(), v.trim())
    }

    /// Explicit value, falling back to the documented default.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str).or_else(|| default_of(key))
    }

    /// Only the keys set explicitly.
    pub fn explicit(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// Every plain key with its effective value, plus explicitly set patterned keys.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        let mut out: BTreeMap<String, String> = KEYS.iter().map(|(k, d, _)| (k.to_string(), d.to_string())).collect();
        out.extend(self.entries.clone());
        out
    }

    /// SHA-256 over the sorted resolved `key=value` lines, `output.*` excluded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.resolved().iter().filter(|(k, _)| !k.starts_with("output.")) {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Usage(format!("config key `{key}` has no value")))
    }

    fn bad(key: &str, v: &str, what: &str) -> Error {
        Error::Usage(format!("config key `{key}`: cannot parse `{v}` as {what}"))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.raw(key)?;
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Self::bad(key, v, "a finite number"))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        let v = self.raw(key)?;
        v.parse().map_err(|_| Self::bad(key, v, "a non-negative integer"))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let v = self.raw(key)?;
        v.parse().map_err(|_| Self::bad(key, v, "a non-negative integer"))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        let v = self.raw(key)?;
        match v {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(Self::bad(key, v, "a boolean")),
        }
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.raw(key)
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        let v = self.raw(key)?;
        v.split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Self::bad(key, v, "a comma-separated integer list"))
    }

    pub fn f64_pair(&self, key: &str) -> Result<Option<(f64, f64)>> {
        let Some(v) = self.entries.get(key) else { return Ok(None) };
        let parts: Vec<f64> = v.split(',').filter_map(|p| p.trim().parse().ok()).collect();
        match parts[..] {
            [lo, hi] => Ok(Some((lo, hi))),
            _ => Err(Self::bad(key, v, "`lo,hi`")),
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }
}

/// Named configurations shipped with the library.
pub const PRESETS: &[(&str, &str)] = &[
    (
        "quadratic_adam",
        "problem.kind = quadratic\nproblem.dim = 20\nproblem.cond = 50\nproblem.noise = 0.1\nproblem.seed = 1\n\
         optimizer.kind = base\noptimizer.base = adam\nschedule.kind = inv-sqrt\nschedule.peak = 0.1\n\
         run.steps = 2000\nrun.seed = 1\noutput.name = quadratic_adam\n",
    ),
    (
        "quadratic_mada",
        "problem.kind = quadratic\nproblem.dim = 20\nproblem.cond = 50\nproblem.noise = 0.1\nproblem.seed = 1\n\
         optimizer.kind = mada\nmada.hyper_lr_betas = 0.001\nmada.hyper_lr_other = 0.01\n\
         schedule.kind = inv-sqrt\nschedule.peak = 0.1\nrun.steps = 2000\nrun.seed = 1\noutput.name = quadratic_mada\n",
    ),
    (
        "rosenbrock_adam",
        "problem.kind = rosenbrock\nproblem.dim = 2\noptimizer.kind = base\noptimizer.base = adam\n\
         schedule.kind = constant\nschedule.peak = 0.01\nrun.steps = 5000\noutput.name = rosenbrock_adam\n",
    ),
    (
        "logistic_adam",
        "problem.kind = logistic\nproblem.dim = 11\nproblem.samples = 1000\nproblem.batch_size = 32\nproblem.seed = 2\n\
         optimizer.kind = base\noptimizer.base = adam\nschedule.kind = inv-sqrt\nschedule.peak = 0.05\n\
         run.steps = 3000\nrun.seed = 2\noutput.name = logistic_adam\n",
    ),
    (
        "logistic_mada",
        "problem.kind = logistic\nproblem.dim = 11\nproblem.samples = 1000\nproblem.batch_size = 32\nproblem.seed = 2\n\
         optimizer.kind = mada\noptimizer.variant = avgrad-interp\nschedule.kind = inv-sqrt\nschedule.peak = 0.05\n\
         run.steps = 3000\nrun.seed = 2\noutput.name = logistic_mada\n",
    ),
    (
        "logistic_max_routing",
        "problem.kind = logistic\nproblem.dim = 11\nproblem.samples = 1000\nproblem.batch_size = 32\nproblem.seed = 2\n\
         optimizer.kind = mada\noptimizer.variant = max-interp\noptimizer.rho = 0.5\n\
         schedule.kind = inv-sqrt\nschedule.peak = 0.05\nrun.steps = 5000\nrun.seed = 2\noutput.name = logistic_max_routing\n",
    ),
    (
        "reddi_adam",
        "problem.kind = reddi\nproblem.x0 = 1\noptimizer.kind = base\noptimizer.base = adam\n\
         optimizer.beta1 = 0.9\noptimizer.beta2 = 0.99\nschedule.kind = inv-sqrt\nschedule.peak = 0.5\n\
         run.steps = 500000\noutput.name = reddi_adam\n",
    ),
    (
        "reddi_avgrad",
        "problem.kind = reddi\nproblem.x0 = 1\noptimizer.kind = base\noptimizer.base = avgrad\n\
         optimizer.beta1 = 0.9\noptimizer.beta2 = 0.99\nschedule.kind = inv-sqrt\nschedule.peak = 0.5\n\
         run.steps = 500000\noutput.name = reddi_avgrad\n",
    ),
    (
        "reddi_amsgrad",
        "problem.kind = reddi\nproblem.x0 = 1\noptimizer.kind = base\noptimizer.base = amsgrad\n\
         optimizer.beta1 = 0.9\noptimizer.beta2 = 0.99\nschedule.kind = inv-sqrt\nschedule.peak = 0.5\n\
         run.steps = 500000\noutput.name = reddi_amsgrad\n",
    ),
    (
        "reddi_mada",
        "problem.kind = reddi\nproblem.x0 = 1\noptimizer.kind = mada\noptimizer.variant = avgrad-interp\n\
         optimizer.beta1 = 0.9\noptimizer.beta2 = 0.99\noptimizer.rho = 1\noptimizer.gamma = 1\n\
         mada.hyper_lr_betas = 0\nmada.hyper_lr_other = 1\nmada.lr.c = 0.01\nmada.lr.gamma = 0.0001\n\
         mada.hyper_momentum = 0.5\nschedule.kind = inv-sqrt\nschedule.peak = 0.5\n\
         run.steps = 500000\noutput.name = reddi_mada\n",
    ),
    (
        "mlp_adam",
        "problem.kind = mlp\nproblem.separation = 4\noptimizer.kind = base\noptimizer.base = adam\n\
         optimizer.beta1 = 0.9\noptimizer.beta2 = 0.95\nschedule.kind = cosine-warmup\nschedule.peak = 0.03\n\
         schedule.final = 0.0001\nschedule.warmup_steps = 100\nrun.steps = 3000\noutput.name = mlp_adam\n",
    ),
    (
        "mlp_adam_poor",
        "problem.kind = mlp\nproblem.separation = 4\noptimizer.kind = base\noptimizer.base = adam\n\
         optimizer.beta1 = 0.7\noptimizer.beta2 = 0.8\nschedule.kind = cosine-warmup\nschedule.peak = 0.03\n\
         schedule.final = 0.0001\nschedule.warmup_steps = 100\nrun.steps = 3000\noutput.name = mlp_adam_poor\n",
    ),
    (
        "mlp_mada_poor",
        "problem.kind = mlp\nproblem.separation = 4\noptimizer.kind = mada\noptimizer.variant = avgrad-interp\n\
         optimizer.beta1 = 0.7\noptimizer.beta2 = 0.8\nschedule.kind = cosine-warmup\nschedule.peak = 0.03\n\
         schedule.final = 0.0001\nschedule.warmup_steps = 100\nrun.steps = 3000\noutput.name = mlp_mada_poor\n",
    ),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_falls_back_to_defaults() {
        let c = Config::parse("# comment\nproblem.kind = reddi\n\nrun.steps=5\nmada.lr.rho = 0.3\n").unwrap();
        assert_eq!(c.str("problem.kind").unwrap(), "reddi");
        assert_eq!(c.u64("run.steps").unwrap(), 5);
        assert_eq!(c.f64("mada.lr.rho").unwrap(), 0.3);
        assert_eq!(c.f64("optimizer.eps").unwrap(), 1e-8);
    }

    #[test]
    fn usage_errors_name_the_key() {
        let e = Config::parse("problem.kindd = reddi").unwrap_err();
        assert!(matches!(&e, Error::Usage(m) if m.contains("problem.kindd")));
        let e = Config::parse("mada.lr.delta = 1").unwrap_err();
        assert!(e.to_string().contains("mada.lr.delta"));
        let c = Config::parse("run.steps = many").unwrap();
        assert!(c.u64("run.steps").unwrap_err().to_string().contains("run.steps"));
        assert!(Config::parse("a.b.c").is_err());
        assert!(Config::parse("run.seed = 1\nrun.seed = 2").is_err());
    }

    #[test]
    fn hash_tracks_every_non_output_key() {
        let base = Config::parse("run.steps = 10").unwrap();
        let mut other = base.clone();
        other.set("optimizer.beta3", "0.1").unwrap();
        assert_ne!(base.hash(), other.hash());
        let mut out = base.clone();
        out.set("output.dir", "/elsewhere").unwrap();
        assert_eq!(base.hash(), out.hash());
        // An explicit default is the same configuration.
        let mut explicit = base.clone();
        explicit.set("run.seed", "0").unwrap();
        assert_eq!(base.hash(), explicit.hash());
    }

    #[test]
    fn every_preset_parses() {
        for (name, _) in PRESETS {
            Config::load(name).unwrap();
        }
        assert!(matches!(Config::load("no_such_preset"), Err(Error::Usage(_))));
    }
}
