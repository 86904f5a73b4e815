//! Cartesian sweeps over config keys. Cells are independent single-threaded
//! runs; the parallel path fans cells out over the worker pool.

use super::config::Config;
use super::experiment::RunSpec;
use crate::error::{Error, Result};
use crate::exec;
use crate::record::RunRecord;

/// One swept key and the values it takes.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

impl Axis {
    /// Parses `key=v1,v2,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let (k, vs) = s
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("sweep axis `{s}` is not of the form key=v1,v2,...")))?;
        let values: Vec<String> = vs.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(Error::Usage(format!("sweep axis `{}` has no values", k.trim())));
        }
        Ok(Self {
            key: k.trim().to_string(),
            values,
        })
    }
}

#[derive(Clone, Debug)]
pub struct SweepCell {
    pub index: usize,
    pub assignments: Vec<(String, String)>,
    pub spec: RunSpec,
    pub record: RunRecord,
}

/// A cell's `(key, value)` assignments and its full config.
pub type CellConfig = (Vec<(String, String)>, Config);

/// Every cell's config, row-major over `axes` (last axis fastest). Each cell's
/// `output.name` gets a `_<index>` suffix.
pub fn expand(base: &Config, axes: &[Axis]) -> Result<Vec<CellConfig>> {
    if axes.is_empty() {
        return Err(Error::Usage("a sweep needs at least one axis".into()));
    }
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let stem = base.str("output.name")?.to_string();
    (0..total)
        .map(|i| {
            let mut cfg = base.clone();
            let mut rest = i;
            let mut assignments = vec![(String::new(), String::new()); axes.len()];
            for (j, axis) in axes.iter().enumerate().rev() {
                let v = &axis.values[rest % axis.values.len()];
                rest /= axis.values.len();
                cfg.set(&axis.key, v)?;
                assignments[j] = (axis.key.clone(), v.clone());
            }
            cfg.set("output.name", &format!("{stem}_{i}"))?;
            Ok((assignments, cfg))
        })
        .collect()
}

/// Runs every cell. Parallel and sequential execution produce identical records
/// (apart from wall-clock fields).
pub fn sweep(base: &Config, axes: &[Axis], parallel: bool) -> Result<Vec<SweepCell>> {
    let cells = expand(base, axes)?;
    let specs = cells
        .iter()
        .map(|(_, c)| RunSpec::from_config(c))
        .collect::<Result<Vec<_>>>()?;
    let run = |i: usize| specs[i].execute().map(|o| o.record);
    let records = if parallel {
        exec::map(specs.len(), run)
    } else {
        exec::map_seq(specs.len(), run)
    };
    cells
        .into_iter()
        .zip(specs)
        .zip(records)
        .enumerate()
        .map(|(index, (((assignments, _), spec), record))| {
            Ok(SweepCell {
                index,
                assignments,
                spec,
                record: record?,
            })
        })
        .collect()
}
