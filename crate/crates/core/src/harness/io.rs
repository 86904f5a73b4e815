//! Record persistence: a CSV of rows plus a `key = value` summary sidecar.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces every bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::poly_opt::{CoefficientVector, NUM_COEFS};
use crate::record::{RecordRow, RunRecord, Summary, CSV_COLUMNS, SCHEMA_VERSION};

/// Sidecar path for a CSV path: `foo.csv` → `foo.summary`.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("summary")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            msg: format!("{other:?}"),
        },
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

/// Writes `path` (CSV rows) and its `.summary` sidecar.
pub fn write_record(record: &RunRecord, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(CSV_COLUMNS).map_err(|e| csv_err(path, e))?;
    for r in &record.rows {
        let mut fields = vec![r.step.to_string(), format!("{}", r.loss), format!("{}", r.lr), format!("{}", r.grad_norm)];
        fields.extend(r.q.iter().map(|v| format!("{v}")));
        fields.extend([format!("{}", r.eff_lr_min), format!("{}", r.eff_lr_max)]);
        w.write_record(&fields).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let s = &record.summary;
    let mut text = String::new();
    text.push_str(&format!("schema_version = {}\n", s.schema_version));
    text.push_str(&format!("seed = {}\n", s.seed));
    text.push_str(&format!("steps = {}\n", s.steps));
    text.push_str(&format!("wall_clock_secs = {}\n", s.wall_clock_secs));
    text.push_str(&format!("final_loss = {}\n", s.final_loss));
    let q = s.final_q.map_or("none".to_string(), |q| join(&q.to_array()));
    text.push_str(&format!("final_q = {q}\n"));
    text.push_str(&format!("final_x = {}\n", join(&s.final_x)));
    text.push_str(&format!("config_hash = {}\n", s.config_hash));
    for (k, v) in &s.config {
        text.push_str(&format!("config.{k} = {v}\n"));
    }
    let sp = summary_path(path);
    fs::write(&sp, text).map_err(|e| Error::io(&sp, e))
}

fn parse_f64(path: &Path, what: &str, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        msg: format!("{what}: `{s}` is not a number"),
    })
}

fn parse_list(path: &Path, what: &str, s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| parse_f64(path, what, p)).collect()
}

fn read_summary(path: &Path) -> Result<Summary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut fields = BTreeMap::new();
    let mut config = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line.split_once(" = ").ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            msg: format!("malformed summary line `{line}`"),
        })?;
        match k.strip_prefix("config.") {
            Some(ck) => config.insert(ck.to_string(), v.to_string()),
            None => fields.insert(k.to_string(), v.to_string()),
        };
    }
    let field = |k: &str| {
        fields.get(k).map(String::as_str).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            msg: format!("summary lacks `{k}`"),
        })
    };
    let version = field("schema_version")?;
    if version != SCHEMA_VERSION.to_string() {
        return Err(Error::SchemaVersion {
            path: path.to_path_buf(),
            expected: SCHEMA_VERSION,
            found: version.to_string(),
        });
    }
    let int = |k: &str| -> Result<u64> {
        let v = field(k)?;
        v.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            msg: format!("{k}: `{v}` is not an integer"),
        })
    };
    let final_q = match field("final_q")? {
        "none" => None,
        s => {
            let v = parse_list(path, "final_q", s)?;
            let arr: [f64; NUM_COEFS] = v.try_into().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                msg: format!("final_q must have {NUM_COEFS} entries"),
            })?;
            Some(CoefficientVector::from_array(arr))
        }
    };
    Ok(Summary {
        schema_version: SCHEMA_VERSION,
        seed: int("seed")?,
        steps: int("steps")?,
        wall_clock_secs: parse_f64(path, "wall_clock_secs", field("wall_clock_secs")?)?,
        final_loss: parse_f64(path, "final_loss", field("final_loss")?)?,
        final_q,
        final_x: parse_list(path, "final_x", field("final_x")?)?,
        config_hash: field("config_hash")?.to_string(),
        config,
    })
}

/// Reads a record written by [`write_record`].
pub fn read_record(path: &Path) -> Result<RunRecord> {
    let summary = read_summary(&summary_path(path))?;
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?;
    if header.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            msg: format!("unexpected CSV header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let num = |i: usize| parse_f64(path, CSV_COLUMNS[i], &rec[i]);
        let step = rec[0].parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            msg: format!("step: `{}` is not an integer", &rec[0]),
        })?;
        let mut q = [0.0; NUM_COEFS];
        for (k, slot) in q.iter_mut().enumerate() {
            *slot = num(4 + k)?;
        }
        rows.push(RecordRow {
            step,
            loss: num(1)?,
            lr: num(2)?,
            grad_norm: num(3)?,
            q,
            eff_lr_min: num(12)?,
            eff_lr_max: num(13)?,
        });
    }
    Ok(RunRecord { rows, summary })
}
