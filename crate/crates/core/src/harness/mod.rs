//! Experiment plumbing: flat configs and presets, record persistence,
//! sweeps and plot-ready series. The `mada` binary is a thin layer over this.

mod config;
mod experiment;
mod io;
mod plot;
mod sweep;

pub use config::{preset, Config, KEYS, OUTPUT_DIR_ENV, PRESETS};
pub use experiment::{reddi_config, replay_fs, replay_fs_config, run_reddi, OptimizerSpec, Outcome, ReddiOutcome, RunSpec};
pub use io::{read_record, summary_path, write_record};
pub use plot::{emit_plotdata, plotdata, PlotInput, PlotKind};
pub use sweep::{expand, sweep, Axis, CellConfig, SweepCell};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly_opt::CoefficientVector;

    #[test]
    fn zero_hyper_lr_coefficient_series_is_constant() {
        let c = Config::parse(
            "problem.kind = quadratic\nproblem.dim = 4\noptimizer.kind = mada\noptimizer.rho = 0.4\n\
             mada.hyper_lr_betas = 0\nmada.hyper_lr_other = 0\nrun.steps = 30",
        )
        .unwrap();
        let out = RunSpec::from_config(&c).unwrap().execute().unwrap();
        let text = plotdata(&PlotInput { record: Some(&out.record), ..Default::default() }, PlotKind::Coefficients).unwrap();
        let mut q0 = CoefficientVector::adam(0.9, 0.99);
        q0.rho = 0.4;
        let lines: Vec<_> = text.lines().skip(1).collect();
        assert_eq!(lines.len(), 30);
        for l in lines {
            let vals: Vec<f64> = l.split_whitespace().skip(1).map(|v| v.parse().unwrap()).collect();
            assert_eq!(vals, q0.to_array());
        }
    }

    #[test]
    fn written_record_carries_config_hash() {
        let dir = tempfile::tempdir().unwrap();
        let a = Config::parse("run.steps = 5").unwrap();
        let mut b = a.clone();
        b.set("problem.noise", "0.25").unwrap();
        for (cfg, name) in [(&a, "a.csv"), (&b, "b.csv")] {
            let out = RunSpec::from_config(cfg).unwrap().execute().unwrap();
            write_record(&out.record, &dir.path().join(name)).unwrap();
        }
        let ha = read_record(&dir.path().join("a.csv")).unwrap().summary.config_hash;
        let hb = read_record(&dir.path().join("b.csv")).unwrap().summary.config_hash;
        assert_eq!(ha, a.hash());
        assert_ne!(ha, hb);
    }
}
