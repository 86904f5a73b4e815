//! Plot-ready text series. Each file is a `#`-prefixed header naming the
//! columns followed by whitespace-separated rows; nothing is rendered.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::poly_opt::Coef;
use crate::record::RunRecord;
use crate::theory::BoundSweep;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// step, then one column per coefficient.
    Coefficients,
    /// step, average regret.
    Regret,
    /// ρ, bound.
    Bound,
    /// step, loss.
    Loss,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [PlotKind::Coefficients, PlotKind::Regret, PlotKind::Bound, PlotKind::Loss];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Coefficients => "coefficients",
            PlotKind::Regret => "regret",
            PlotKind::Bound => "bound",
            PlotKind::Loss => "loss",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Series available for plotting; a kind fails if the series it needs is absent.
#[derive(Clone, Copy, Debug, Default)]
pub struct PlotInput<'a> {
    pub record: Option<&'a RunRecord>,
    pub regret: Option<&'a [(u64, f64)]>,
    pub bound: Option<&'a BoundSweep>,
}

fn missing(series: &str) -> Error {
    Error::Contract(format!("plot data needs the `{series}` series, which was not provided"))
}

/// Renders the series for `kind` as text.
pub fn plotdata(input: &PlotInput, kind: PlotKind) -> Result<String> {
    let mut out = String::new();
    match kind {
        PlotKind::Coefficients => {
            let rec = input.record.ok_or_else(|| missing("coefficients"))?;
            if rec.rows.is_empty() || rec.rows.iter().any(|r| r.q.iter().any(|v| v.is_nan())) {
                return Err(missing("coefficients"));
            }
            out.push_str("# step");
            for k in Coef::ALL {
                out.push(' ');
                out.push_str(k.name());
            }
            out.push('\n');
            for r in &rec.rows {
                write!(out, "{}", r.step).unwrap();
                for v in r.q {
                    write!(out, " {v}").unwrap();
                }
                out.push('\n');
            }
        }
        PlotKind::Loss => {
            let rec = input.record.ok_or_else(|| missing("loss"))?;
            out.push_str("# step loss\n");
            for r in &rec.rows {
                writeln!(out, "{} {}", r.step, r.loss).unwrap();
            }
        }
        PlotKind::Regret => {
            let reg = input.regret.ok_or_else(|| missing("regret"))?;
            out.push_str("# step average_regret\n");
            for (t, v) in reg {
                writeln!(out, "{t} {v}").unwrap();
            }
        }
        PlotKind::Bound => {
            let b = input.bound.ok_or_else(|| missing("bound"))?;
            out.push_str("# rho bound\n");
            for (rho, v) in &b.points {
                writeln!(out, "{rho} {v}").unwrap();
            }
        }
    }
    Ok(out)
}

/// Writes the series for `kind` to `path`.
pub fn emit_plotdata(input: &PlotInput, kind: PlotKind, path: &Path) -> Result<()> {
    let text = plotdata(input, kind)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{rho_grid, thm3_sweep, BoundParams};

    fn data_rows(text: &str) -> Vec<Vec<f64>> {
        text.lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
            .collect()
    }

    #[test]
    fn bound_rows_match_grid() {
        let sweep = thm3_sweep(&BoundParams::default(), &rho_grid(37)).unwrap();
        let text = plotdata(&PlotInput { bound: Some(&sweep), ..Default::default() }, PlotKind::Bound).unwrap();
        assert_eq!(data_rows(&text).len(), 37);
    }

    #[test]
    fn missing_series_is_named() {
        for kind in PlotKind::ALL {
            let e = plotdata(&PlotInput::default(), kind).unwrap_err();
            assert!(matches!(&e, Error::Contract(m) if m.contains(kind.name())), "{e}");
        }
    }

    #[test]
    fn regret_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.dat");
        let reg = [(1, 0.0), (2, 0.0)];
        emit_plotdata(&PlotInput { regret: Some(&reg), ..Default::default() }, PlotKind::Regret, &p).unwrap();
        let rows = data_rows(&fs::read_to_string(p).unwrap());
        assert_eq!(rows, vec![vec![1.0, 0.0], vec![2.0, 0.0]]);
    }
}
