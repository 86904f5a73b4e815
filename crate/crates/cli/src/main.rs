//! `mada` — run optimizer experiments, sweeps and the analytical checks.
//!
//! Failures print a single `error[<kind>]: <message>` line on stderr and exit
//! with status 2; checks that run but do not pass exit with status 1.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mada::harness::{
    emit_plotdata, read_record, reddi_config, replay_fs_config, run_reddi, sweep, write_record, Axis, Config, PlotInput,
    PlotKind, RunSpec,
};
use mada::hyper::{fd_check, FD_FLOOR};
use mada::numkit::DEFAULT_FD_STEP;
use mada::record::RunRecord;
use mada::theory::{prop1_batch, prop1_boundary, prop1_corrected, rho_grid, thm3_sweep, BoundParams};
use mada::{Error, Result};

#[derive(Parser)]
#[command(name = "mada", version, about = "Parameterized adaptive optimizers and online coefficient learning")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Preset name or config file path.
    #[arg(long)]
    config: String,
    /// `key=value` override; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<Config> {
        let mut c = Config::load(&self.config)?;
        for s in &self.set {
            c.apply_override(s)?;
        }
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment and write its record.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Also write loss (and coefficient) plot data here.
        #[arg(long)]
        plot_dir: Option<PathBuf>,
    },
    /// Run a cartesian grid over config keys, one record per cell.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// `key=v1,v2,...`; repeatable.
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        /// Run cells one after another on the calling thread.
        #[arg(long)]
        serial: bool,
    },
    /// The projected online problem whose optimum is x = −1.
    Reddi {
        /// adam | avgrad | amsgrad | mada
        #[arg(long)]
        optimizer: String,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// `key=value` override; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        plot_dir: Option<PathBuf>,
        /// Exit 1 unless the run shows the expected outcome for its optimizer.
        #[arg(long)]
        check: bool,
    },
    /// Tabulate the interpolated-optimizer bound over a ρ grid.
    Bound {
        #[arg(long, default_value_t = 0.9)]
        beta2: f64,
        #[arg(long = "T", default_value_t = 10_000)]
        t: u64,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 1.0)]
        f_gap: f64,
        /// Write the (ρ, bound) series to this file.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Monte Carlo check that the effective learning rate never increases under a ρ schedule.
    Prop1 {
        /// boundary: ρ_t = 1/(t(1−β₂)+1); corrected: β₂/(t(1−β₂)+1); adam: ρ ≡ 1; avgrad: ρ ≡ 0
        #[arg(long, default_value = "boundary")]
        schedule: String,
        #[arg(long, default_value_t = 0.9)]
        beta2: f64,
        #[arg(long, default_value_t = 1000)]
        streams: u64,
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare analytic hyper-gradients against central finite differences.
    CheckHypergrad {
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// Re-run a MADA record's experiment with its final coefficients frozen.
    ReplayFs {
        /// CSV path of the MADA record.
        #[arg(long)]
        record: PathBuf,
    },
}

fn save(record: &RunRecord, spec: &RunSpec) -> Result<PathBuf> {
    let path = spec.csv_path();
    write_record(record, &path)?;
    Ok(path)
}

fn print_summary(record: &RunRecord, path: &Path) {
    let s = &record.summary;
    println!("record = {}", path.display());
    println!("final_loss = {}", s.final_loss);
    if let Some(q) = s.final_q {
        let q: Vec<String> = q.to_array().iter().map(|v| format!("{v}")).collect();
        println!("final_q = {}", q.join(","));
    }
    if s.final_x.len() <= 8 {
        let x: Vec<String> = s.final_x.iter().map(|v| format!("{v}")).collect();
        println!("final_x = {}", x.join(","));
    }
    println!("config_hash = {}", s.config_hash);
}

fn plot_record(record: &RunRecord, dir: &Path, stem: &str) -> Result<()> {
    let input = PlotInput {
        record: Some(record),
        ..Default::default()
    };
    emit_plotdata(&input, PlotKind::Loss, &dir.join(format!("{stem}.loss.dat")))?;
    if record.rows.iter().all(|r| r.q.iter().all(|v| v.is_finite())) {
        emit_plotdata(&input, PlotKind::Coefficients, &dir.join(format!("{stem}.coefficients.dat")))?;
    }
    Ok(())
}

fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Run { cfg, plot_dir } => {
            let spec = RunSpec::from_config(&cfg.load()?)?;
            let out = spec.execute()?;
            let path = save(&out.record, &spec)?;
            if let Some(dir) = plot_dir {
                plot_record(&out.record, &dir, &spec.output_name)?;
            }
            print_summary(&out.record, &path);
            Ok(true)
        }
        Cmd::Sweep { cfg, axes, serial } => {
            let base = cfg.load()?;
            let axes = axes.iter().map(|a| Axis::parse(a)).collect::<Result<Vec<_>>>()?;
            let cells = sweep(&base, &axes, !serial)?;
            println!("cell\t{}\tfinal_loss\trecord", axes.iter().map(|a| a.key.as_str()).collect::<Vec<_>>().join("\t"));
            for cell in &cells {
                let path = save(&cell.record, &cell.spec)?;
                let vals: Vec<&str> = cell.assignments.iter().map(|(_, v)| v.as_str()).collect();
                println!("{}\t{}\t{}\t{}", cell.index, vals.join("\t"), cell.record.summary.final_loss, path.display());
            }
            Ok(true)
        }
        Cmd::Reddi {
            optimizer,
            steps,
            seed,
            set,
            plot_dir,
            check,
        } => {
            let mut c = reddi_config(&optimizer)?;
            if let Some(s) = steps {
                c.set("run.steps", &s.to_string())?;
            }
            if let Some(s) = seed {
                c.set("run.seed", &s.to_string())?;
            }
            for s in &set {
                c.apply_override(s)?;
            }
            let spec = RunSpec::from_config(&c)?;
            let r = run_reddi(&spec)?;
            let rec = &r.outcome.record;
            let path = save(rec, &spec)?;
            if let Some(dir) = &plot_dir {
                plot_record(rec, dir, &spec.output_name)?;
                let input = PlotInput {
                    regret: Some(&r.regret),
                    ..Default::default()
                };
                emit_plotdata(&input, PlotKind::Regret, &dir.join(format!("{}.regret.dat", spec.output_name)))?;
            }
            print_summary(rec, &path);
            let x = rec.summary.final_x[0];
            let rho = rec.summary.final_q.map(|q| q.rho);
            let regret = r.regret.last().map_or(f64::NAN, |p| p.1);
            println!("final_average_regret = {regret}");
            let (expect, ok) = match optimizer.as_str() {
                "adam" => ("x > 0", x > 0.0),
                "mada" => ("|x + 1| <= 0.05 and rho < 0.1", (x + 1.0).abs() <= 0.05 && rho.is_some_and(|r| r < 0.1)),
                _ => ("|x + 1| <= 0.05", (x + 1.0).abs() <= 0.05),
            };
            println!("expected: {expect} -> {}", if ok { "yes" } else { "no" });
            Ok(ok || !check)
        }
        Cmd::Bound {
            beta2,
            t,
            grid,
            alpha,
            eps,
            r,
            l,
            d,
            f_gap,
            plot,
        } => {
            if grid < 2 {
                return Err(Error::Usage("--grid needs at least 2 points".into()));
            }
            let p = BoundParams {
                r,
                l,
                d,
                alpha,
                beta2,
                eps,
                f_gap,
                t,
                ..BoundParams::default()
            };
            let sweep = thm3_sweep(&p, &rho_grid(grid))?;
            println!("rho\tbound");
            for (rho, b) in &sweep.points {
                println!("{rho}\t{b}");
            }
            println!("argmin\t{}\t{}", sweep.argmin.0, sweep.argmin.1);
            if let Some(path) = plot {
                let input = PlotInput {
                    bound: Some(&sweep),
                    ..Default::default()
                };
                emit_plotdata(&input, PlotKind::Bound, &path)?;
            }
            Ok(true)
        }
        Cmd::Prop1 {
            schedule,
            beta2,
            streams,
            steps,
            dim,
            eps,
            seed,
        } => {
            if !(0.0..1.0).contains(&beta2) || dim == 0 || steps == 0 || streams == 0 {
                return Err(Error::Usage("need 0 <= beta2 < 1 and positive --dim, --steps, --streams".into()));
            }
            let rho: Box<dyn Fn(u64) -> f64 + Sync> = match schedule.as_str() {
                "boundary" => Box::new(move |t| prop1_boundary(beta2, t)),
                "corrected" => Box::new(move |t| prop1_corrected(beta2, t)),
                "adam" => Box::new(|_| 1.0),
                "avgrad" => Box::new(|_| 0.0),
                other => return Err(Error::Usage(format!("unknown --schedule `{other}`"))),
            };
            let b = prop1_batch(beta2, rho.as_ref(), streams, steps, dim, eps, seed);
            println!("schedule\t{schedule}");
            println!("streams\t{}", b.streams);
            println!("violating_streams\t{}", b.violating_streams);
            println!("condition_holds\t{}", b.condition_holds);
            println!(
                "earliest_violation\t{}",
                b.earliest_violation.map_or("none".to_string(), |t| t.to_string())
            );
            println!("max_rel_increase\t{:e}", b.max_rel_increase);
            let ok = b.violating_streams == 0;
            println!("verdict\t{}", if ok { "non-increasing" } else { "violated" });
            Ok(ok)
        }
        Cmd::CheckHypergrad { trials, seed, tolerance } => {
            if trials == 0 {
                return Err(Error::Usage("--trials must be positive".into()));
            }
            let reports = fd_check(trials, seed, DEFAULT_FD_STEP)?;
            println!("variant\tcoef\ttrials\tmax_rel_err");
            let mut ok = true;
            for r in &reports {
                println!("{}\t{}\t{}\t{:e}", r.variant.name(), r.coef.name(), r.trials, r.max_rel_err);
                ok &= r.max_rel_err <= tolerance;
            }
            println!("floor\t{FD_FLOOR:e}");
            println!("verdict\t{}", if ok { "pass" } else { "fail" });
            Ok(ok)
        }
        Cmd::ReplayFs { record } => {
            let rec = read_record(&record)?;
            let spec = RunSpec::from_config(&replay_fs_config(&rec)?)?;
            let out = spec.execute()?;
            let path = save(&out.record, &spec)?;
            print_summary(&out.record, &path);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), e.to_string().replace('\n', " "));
            ExitCode::from(2)
        }
    }
}
