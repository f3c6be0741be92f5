use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use opinion_fp::config::{parse_config, ExperimentConfig};
use opinion_fp::harness;
use opinion_fp::{Error, KineticParams, Result};

#[derive(Parser)]
#[command(name = "opinion-fp", version, about = "Opinion Fokker-Planck and particle experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (key = value lines)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Seed for particle runs and random test densities
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = parse_config(&self.config)?;
        if let Some(n) = self.n {
            cfg.n = n;
            cfg.grid()?;
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Validation {
                    field: "dt".into(),
                    msg: format!("must be positive, got {dt}"),
                });
            }
            cfg.dt = dt;
        }
        if let Some(t) = self.t_end {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Validation {
                    field: "t_end".into(),
                    msg: format!("must be nonnegative, got {t}"),
                });
            }
            cfg.t_end = t;
        }
        if let (Some(seed), Some(mc)) = (self.seed, cfg.mc.as_mut()) {
            mc.seed = seed;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok((cfg, out))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Beta equilibrium, its constants and the discrete kernel
    Equilibrium(Common),
    /// Chang-Cooper run with entropy, Fisher and L² diagnostics
    Solve(Common),
    /// Stochastic binary-interaction simulation in the quasi-invariant scaling
    Mc(Common),
    /// `solve` for every λ in `sweep.lambdas`
    Sweep(Common),
    /// Log-Sobolev inequality on random densities over the `ls.*` grid
    VerifyLs(Common),
    /// Checks of the angular change of variables
    TransformCheck {
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        m: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exponential rate of a CSV column against the first column
    Fit {
        csv: PathBuf,
        #[arg(long, default_value = "H")]
        column: String,
        /// Window start; with neither bound the second half of the rows is used
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
    },
}

fn checked(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::CheckFailed(what.into()))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Equilibrium(c) => {
            let (cfg, out) = c.load()?;
            let r = harness::run_equilibrium(&cfg, &out)?;
            println!("regime {}  log C {:.12e}  kernel L1 {:.3e}", r.regime, r.log_c, r.kernel_l1);
            if let (Some(k), Some(rho)) = (r.k, r.rho) {
                println!("K {k:.15}  rho {rho:.15}");
            }
            Ok(())
        }
        Command::Solve(c) => {
            let (cfg, out) = c.load()?;
            let r = harness::run_solve(&cfg, &out)?;
            println!("{} steps, summary in {}", r.trajectory.steps, out.join("summary.txt").display());
            checked(r.passed(), "decay checks failed, see summary.txt")
        }
        Command::Mc(c) => {
            let (cfg, out) = c.load()?;
            let r = harness::run_mc(&cfg, &out)?;
            for row in &r.rows {
                match row.l1_to_fp {
                    Some(l1) => println!("t {:<6} mean {:+.5} L1 {:.4}", row.t_fp, row.mean, l1),
                    None => println!("t {:<6} mean {:+.5}", row.t_fp, row.mean),
                }
            }
            println!("rejected {:.3e} of pairs", r.total().rejection_fraction());
            Ok(())
        }
        Command::Sweep(c) => {
            let (cfg, out) = c.load()?;
            let reports = harness::run_sweep(&cfg, &out)?;
            checked(reports.iter().all(|r| r.passed()), "sweep has failing runs, see sweep.csv")
        }
        Command::VerifyLs(c) => {
            let (cfg, out) = c.load()?;
            let rows = harness::verify_ls(&cfg, c.seed.unwrap_or(1), &out)?;
            let failed = rows.iter().filter(|r| !r.passed()).count();
            println!("{} grid points, {failed} failing", rows.len());
            checked(failed == 0, "log-Sobolev check failed, see ls_report.csv")
        }
        Command::TransformCheck { lambda, m, out } => {
            let p = KineticParams::new(lambda, m)?;
            let r = harness::transform_check(&p, out.as_deref())?;
            println!("rho {:.15}  numeric {:.15}", r.rho, r.rho_numeric);
            checked(r.passed(), "transform checks failed")
        }
        Command::Fit { csv, column, from, to } => {
            let window = match (from, to) {
                (None, None) => None,
                _ => Some(window_bounds(&csv, from, to)?),
            };
            let fit = harness::fit_csv_column(&csv, &column, window)?;
            println!(
                "slope {:.10e}  intercept {:.10e}  r2 {:.6}  samples {}",
                fit.slope, fit.intercept, fit.r_squared, fit.samples
            );
            Ok(())
        }
    }
}

fn window_bounds(csv: &Path, from: Option<f64>, to: Option<f64>) -> Result<(f64, f64)> {
    let (_, rows) = harness::read_csv(csv)?;
    let t0 = rows.first().map_or(0.0, |r| r[0]);
    let t1 = rows.last().map_or(0.0, |r| r[0]);
    Ok((from.unwrap_or(t0), to.unwrap_or(t1)))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
