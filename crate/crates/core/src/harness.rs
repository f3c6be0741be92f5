//! Experiment drivers behind the `opinion-fp` binary.
//!
//! Every driver writes comma-separated files with a header row and numbers in
//! `{:.16e}` (17 significant digits), so re-running a config reproduces the
//! same bytes and values parse back exactly. Pass/fail verdicts in the
//! summaries are computed from the same rows that go to disk.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};

use crate::config::{ExperimentConfig, InitialCondition};
use crate::error::{Error, Result};
use crate::fit::{fit_decay_rate, second_half, DecayFit};
use crate::functionals::{ls_slack, uniform_ls_slack, LS_DISCRETIZATION_ALLOWANCE};
use crate::grid::{DensityField, Grid};
use crate::mc::{histogram, moments, Ensemble, InteractionParams, SweepStats};
use crate::params::{bakry_emery_rho, log_normalization, log_sobolev_constant, BetaEquilibrium, KineticParams, ParamRegime};
use crate::solver::{discretize_equilibrium, solve, DecayRow, SolverState, Trajectory};
use crate::transform::{
    boundary_exponent, fit_boundary_exponent, g_density, g_density_explicit, minimize_w_second, stationary_sine, w_second, Side,
};

/// Tolerance factor applied to the theoretical rates.
pub const RATE_SLACK: f64 = 0.95;

pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| format_value(*x)).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Header and numeric rows of a file written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::ConfigParse {
            line: 1,
            msg: format!("{} is empty", path.display()),
        })?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| Error::ConfigParse {
                    line: k + 2,
                    msg: format!("{}: {s:?} is not a number", path.display()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

// ---------------------------------------------------------------- equilibrium

#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub params: KineticParams,
    pub regime: ParamRegime,
    pub log_c: f64,
    pub k: Option<f64>,
    pub rho: Option<f64>,
    /// L¹ distance between the discrete kernel and the sampled Beta density.
    pub kernel_l1: f64,
}

pub fn run_equilibrium(cfg: &ExperimentConfig, out: &Path) -> Result<EquilibriumReport> {
    ensure_dir(out)?;
    let grid = cfg.grid()?;
    let eq = cfg.equilibrium()?;
    let kernel = write_equilibrium_csv(&out.join("equilibrium.csv"), &eq, &grid)?;
    let analytic = eq.sample_normalized(&grid);
    let report = EquilibriumReport {
        params: cfg.params,
        regime: cfg.params.regime(),
        log_c: log_normalization(&cfg.params)?,
        k: log_sobolev_constant(&cfg.params).ok(),
        rho: bakry_emery_rho(&cfg.params).ok(),
        kernel_l1: crate::functionals::l1_distance(&kernel, &analytic)?,
    };
    let mut text = String::new();
    writeln!(text, "lambda: {}", format_value(cfg.params.lambda())).unwrap();
    writeln!(text, "m: {}", format_value(cfg.params.m())).unwrap();
    writeln!(text, "regime: {}", report.regime).unwrap();
    writeln!(text, "log_C: {}", format_value(report.log_c)).unwrap();
    writeln!(text, "exponent_a: {}", format_value(eq.exponent_minus())).unwrap();
    writeln!(text, "exponent_b: {}", format_value(eq.exponent_plus())).unwrap();
    writeln!(text, "K: {}", optional(report.k)).unwrap();
    writeln!(text, "rho: {}", optional(report.rho)).unwrap();
    writeln!(text, "kernel_vs_beta_l1: {}", format_value(report.kernel_l1)).unwrap();
    write_text(&out.join("equilibrium_summary.txt"), &text)?;
    Ok(report)
}

fn optional(x: Option<f64>) -> String {
    x.map(format_value).unwrap_or_else(|| "n/a".into())
}

/// Writes `y, analytic Beta, discrete kernel` and returns the kernel.
fn write_equilibrium_csv(path: &Path, eq: &BetaEquilibrium, grid: &Grid) -> Result<DensityField> {
    let kernel = discretize_equilibrium(eq.params(), grid);
    let rows = grid
        .centers()
        .into_iter()
        .zip(kernel.values())
        .map(|(y, k)| vec![y, eq.ln_value_from_distances(1.0 - y, 1.0 + y).exp(), *k])
        .collect::<Vec<_>>();
    write_csv(path, &["y", "analytic", "discrete"], &rows)?;
    Ok(kernel)
}

// ---------------------------------------------------------------------- solve

pub const DECAY_HEADER: [&str; 8] = ["t", "H", "fisher", "K_fisher", "l1", "weighted_l2", "mass", "mean"];

pub fn decay_row_values(r: &DecayRow) -> Vec<f64> {
    vec![
        r.time,
        r.entropy,
        r.fisher,
        r.ls_bound.unwrap_or(f64::NAN),
        r.l1,
        r.weighted_l2,
        r.mass,
        r.mean,
    ]
}

/// Outcome of one rate check.
#[derive(Debug, Clone, PartialEq)]
pub enum RateCheck {
    Checked { fit: DecayFit, bound: f64, passed: bool },
    /// No bound applies, or the series cannot be fitted.
    Skipped(String),
}

impl RateCheck {
    pub fn passed(&self) -> bool {
        !matches!(self, RateCheck::Checked { passed: false, .. })
    }

    pub fn slope(&self) -> Option<f64> {
        match self {
            RateCheck::Checked { fit, .. } => Some(fit.slope),
            RateCheck::Skipped(_) => None,
        }
    }

    fn describe(&self, name: &str) -> String {
        match self {
            RateCheck::Checked { fit, bound, passed } => format!(
                "slope_{name}: {}\nintercept_{name}: {}\nr2_{name}: {}\nfit_window_{name}: [{}, {}]\nfit_samples_{name}: {}\nbound_{name}: {}\nverdict_{name}: {}\n",
                format_value(fit.slope),
                format_value(fit.intercept),
                format_value(fit.r_squared),
                format_value(fit.window.0),
                format_value(fit.window.1),
                fit.samples,
                format_value(*bound),
                verdict(*passed)
            ),
            RateCheck::Skipped(why) => format!("verdict_{name}: SKIP ({why})\n"),
        }
    }
}

/// Verdicts derived from decay rows alone.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayAssessment {
    pub entropy_rate: RateCheck,
    pub l2_rate: RateCheck,
    /// Largest increase of H between consecutive rows.
    pub max_row_increase: f64,
    /// Smallest `K Ĩ - H` over the rows, when K applies.
    pub min_ls_gap: Option<f64>,
}

impl DecayAssessment {
    pub fn passed(&self) -> bool {
        self.entropy_rate.passed()
            && self.l2_rate.passed()
            && self.max_row_increase <= 1e-12
            && self.min_ls_gap.is_none_or(|g| g >= -LS_DISCRETIZATION_ALLOWANCE)
    }
}

/// Rate bounds: `-2ρ·0.95` for log H and `-2·0.95` for the weighted L²
/// distance, both over the second half of the run.
pub fn assess_decay(params: &KineticParams, rows: &[DecayRow]) -> DecayAssessment {
    let t_start = rows.first().map_or(0.0, |r| r.time);
    let t_end = rows.last().map_or(0.0, |r| r.time);
    let window = second_half(t_start, t_end);
    let rate = |series: Vec<(f64, f64)>, bound: Option<f64>| match bound {
        None => RateCheck::Skipped("parameters outside the log-Sobolev regime".into()),
        Some(bound) => match fit_decay_rate(&series, window) {
            Ok(fit) => RateCheck::Checked {
                passed: fit.slope <= bound,
                fit,
                bound,
            },
            Err(e) => RateCheck::Skipped(e.to_string()),
        },
    };
    let h_bound = bakry_emery_rho(params).ok().map(|rho| -2.0 * rho * RATE_SLACK);
    let l2_bound = params.admits_log_sobolev().then_some(-2.0 * RATE_SLACK);
    let entropy_rate = rate(rows.iter().map(|r| (r.time, r.entropy)).collect(), h_bound);
    let l2_rate = rate(rows.iter().map(|r| (r.time, r.weighted_l2)).collect(), l2_bound);
    let max_row_increase = rows
        .windows(2)
        .map(|w| w[1].entropy - w[0].entropy)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_ls_gap = if params.admits_log_sobolev() {
        rows.iter()
            .filter_map(|r| r.ls_bound.map(|b| b - r.entropy))
            .filter(|g| !g.is_nan())
            .reduce(f64::min)
    } else {
        None
    };
    DecayAssessment {
        entropy_rate,
        l2_rate,
        max_row_increase,
        min_ls_gap,
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub trajectory: Trajectory,
    pub assessment: DecayAssessment,
    pub out_dir: PathBuf,
}

impl SolveReport {
    pub fn passed(&self) -> bool {
        self.assessment.passed()
    }
}

pub fn run_solve(cfg: &ExperimentConfig, out: &Path) -> Result<SolveReport> {
    ensure_dir(out)?;
    let grid = cfg.grid()?;
    let v0 = cfg.initial_field()?;
    let traj = solve(&cfg.params, &v0, cfg.dt, cfg.t_end, cfg.sample_every)?;

    let rows: Vec<Vec<f64>> = traj.rows.iter().map(decay_row_values).collect();
    write_csv(&out.join("decay.csv"), &DECAY_HEADER, &rows)?;
    write_equilibrium_csv(&out.join("equilibrium.csv"), &cfg.equilibrium()?, &grid)?;
    let final_rows: Vec<Vec<f64>> = grid
        .centers()
        .into_iter()
        .zip(traj.final_state.values())
        .map(|(y, v)| vec![y, *v])
        .collect();
    write_csv(&out.join("final_state.csv"), &["y", "density"], &final_rows)?;

    let assessment = assess_decay(&cfg.params, &traj.rows);
    let mut text = String::new();
    writeln!(text, "lambda: {}", format_value(cfg.params.lambda())).unwrap();
    writeln!(text, "m: {}", format_value(cfg.params.m())).unwrap();
    writeln!(text, "regime: {}", cfg.params.regime()).unwrap();
    writeln!(text, "initial: {}", cfg.initial.label()).unwrap();
    writeln!(text, "n: {}", cfg.n).unwrap();
    writeln!(text, "dt: {}", format_value(cfg.dt)).unwrap();
    writeln!(text, "t_end: {}", format_value(cfg.t_end)).unwrap();
    writeln!(text, "steps: {}", traj.steps).unwrap();
    writeln!(text, "K: {}", optional(log_sobolev_constant(&cfg.params).ok())).unwrap();
    writeln!(text, "rho: {}", optional(bakry_emery_rho(&cfg.params).ok())).unwrap();
    writeln!(text, "max_step_entropy_increase: {}", format_value(traj.max_entropy_increase)).unwrap();
    writeln!(text, "max_step_mass_drift: {}", format_value(traj.max_mass_drift)).unwrap();
    text.push_str(&assessment.entropy_rate.describe("H"));
    text.push_str(&assessment.l2_rate.describe("L2"));
    writeln!(text, "max_row_entropy_increase: {}", format_value(assessment.max_row_increase)).unwrap();
    writeln!(text, "verdict_monotone: {}", verdict(assessment.max_row_increase <= 1e-12)).unwrap();
    match assessment.min_ls_gap {
        Some(g) => {
            writeln!(text, "min_K_fisher_minus_H: {}", format_value(g)).unwrap();
            writeln!(text, "verdict_log_sobolev_rows: {}", verdict(g >= -LS_DISCRETIZATION_ALLOWANCE)).unwrap();
        }
        None => writeln!(text, "verdict_log_sobolev_rows: SKIP").unwrap(),
    }
    writeln!(text, "overall: {}", verdict(assessment.passed())).unwrap();
    write_text(&out.join("summary.txt"), &text)?;

    Ok(SolveReport {
        trajectory: traj,
        assessment,
        out_dir: out.to_path_buf(),
    })
}

/// One `run_solve` per `λ` in `cfg.sweep_lambdas`, each in `out/lambda_<λ>`.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<SolveReport>> {
    ensure_dir(out)?;
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for &lambda in &cfg.sweep_lambdas {
        let mut sub = cfg.clone();
        sub.params = KineticParams::new(lambda, cfg.params.m())?;
        let report = run_solve(&sub, &out.join(format!("lambda_{lambda}")))?;
        let a = &report.assessment;
        rows.push(vec![
            lambda,
            cfg.params.m(),
            a.entropy_rate.slope().unwrap_or(f64::NAN),
            bakry_emery_rho(&sub.params).map_or(f64::NAN, |rho| -2.0 * rho * RATE_SLACK),
            a.l2_rate.slope().unwrap_or(f64::NAN),
            if a.l2_rate.slope().is_some() { -2.0 * RATE_SLACK } else { f64::NAN },
            if report.passed() { 1.0 } else { 0.0 },
        ]);
        reports.push(report);
    }
    write_csv(
        &out.join("sweep.csv"),
        &["lambda", "m", "slope_H", "bound_H", "slope_L2", "bound_L2", "pass"],
        &rows,
    )?;
    Ok(reports)
}

// ------------------------------------------------------------------------- mc

#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub t_fp: f64,
    pub sweeps: usize,
    pub mean: f64,
    pub variance: f64,
    pub interval: SweepStats,
    pub histogram: DensityField,
    /// L¹ distance to the coarsened solver state; `None` without noise.
    pub l1_to_fp: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct McReport {
    pub interaction: InteractionParams,
    pub rows: Vec<McRow>,
}

impl McReport {
    pub fn total(&self) -> SweepStats {
        let mut s = SweepStats::default();
        for r in &self.rows {
            s.pairs += r.interval.pairs;
            s.rejected += r.interval.rejected;
        }
        s
    }
}

/// Initial opinions drawn from the configured initial condition.
pub fn sample_initial(initial: &InitialCondition, params: &KineticParams, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    match initial {
        InitialCondition::Bimodal(b) => Ok(b.sample(n, rng)),
        InitialCondition::Uniform => Ok((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()),
        InitialCondition::Equilibrium => {
            let eq = BetaEquilibrium::new(*params)?;
            let beta = Beta::new(eq.exponent_plus(), eq.exponent_minus()).map_err(|e| Error::Validation {
                field: "initial".into(),
                msg: e.to_string(),
            })?;
            Ok((0..n).map(|_| 2.0 * beta.sample(rng) - 1.0).collect())
        }
        InitialCondition::File(_) => Err(Error::Validation {
            field: "initial".into(),
            msg: "particle runs need a preset initial condition, not a file".into(),
        }),
    }
}

pub fn run_mc(cfg: &ExperimentConfig, out: &Path) -> Result<McReport> {
    let mc = cfg.mc.clone().ok_or_else(|| Error::Validation {
        field: "mc".into(),
        msg: "config has no mc block".into(),
    })?;
    if cfg.n % mc.bins != 0 {
        return Err(Error::Validation {
            field: "mc.bins".into(),
            msg: format!("{} bins must divide n = {}", mc.bins, cfg.n),
        });
    }
    let sigma2 = mc.sigma2.unwrap_or(cfg.params.lambda() * mc.gamma);
    let interaction = InteractionParams::new(mc.gamma, sigma2, mc.epsilon)?;
    let grid = cfg.grid()?;
    let bins = Grid::new(mc.bins)?;
    let v0 = cfg.initial_field()?;
    if (v0.mean() - cfg.params.m()).abs() > 1e-2 {
        return Err(Error::Validation {
            field: "m".into(),
            msg: format!(
                "the particle model keeps the initial mean {:.4}; m = {} would describe a different limit",
                v0.mean(),
                cfg.params.m()
            ),
        });
    }
    ensure_dir(out)?;

    let initial = cfg.initial.clone();
    let params = cfg.params;
    let mut sampling_error = None;
    let mut ensemble = Ensemble::generate(mc.agents, mc.seed, |n, rng| match sample_initial(&initial, &params, n, rng) {
        Ok(xs) => xs,
        Err(e) => {
            sampling_error = Some(e);
            Vec::new()
        }
    })?;
    if let Some(e) = sampling_error {
        return Err(e);
    }

    // solver run alongside, with λ = σ²/γ
    let mut fp = if sigma2 > 0.0 {
        Some(SolverState::new(KineticParams::new(interaction.lambda(), cfg.params.m())?, v0, cfg.dt)?)
    } else {
        None
    };

    let mut rows = Vec::new();
    let (m0, var0) = moments(&ensemble);
    let mut push_row = |t_fp: f64, sweeps: usize, ensemble: &Ensemble, interval: SweepStats, fp: Option<&SolverState>| -> Result<()> {
        let (mean, variance) = if t_fp == 0.0 { (m0, var0) } else { moments(ensemble) };
        let hist = histogram(ensemble, &bins);
        let l1_to_fp = match fp {
            Some(state) => {
                let coarse = state.density().coarsen(grid.n_cells() / bins.n_cells())?;
                Some(crate::functionals::l1_distance(&hist, &coarse)?)
            }
            None => None,
        };
        rows.push(McRow {
            t_fp,
            sweeps,
            mean,
            variance: variance.unwrap_or(f64::NAN),
            interval,
            histogram: hist,
            l1_to_fp,
        });
        Ok(())
    };

    let mut times = mc.times.clone();
    if times[0] != 0.0 {
        times.insert(0, 0.0);
    }
    let mut done = 0;
    for &t in &times {
        let target = interaction.sweeps_for(t);
        let mut interval = SweepStats::default();
        while done < target {
            let s = ensemble.sweep(&interaction)?;
            interval.pairs += s.pairs;
            interval.rejected += s.rejected;
            done += 1;
        }
        if let Some(state) = fp.as_mut() {
            let steps = (t / cfg.dt).round() as usize;
            while state.step_count() < steps {
                state.step()?;
            }
        }
        push_row(t, done, &ensemble, interval, fp.as_ref())?;
    }

    let mut hist_rows = Vec::new();
    for r in &rows {
        for (y, d) in bins.centers().into_iter().zip(r.histogram.values()) {
            hist_rows.push(vec![r.t_fp, y, *d]);
        }
    }
    write_csv(&out.join("mc_hist.csv"), &["t_fp", "y", "density"], &hist_rows)?;
    let moment_rows: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.t_fp, r.sweeps as f64, r.mean, r.variance]).collect();
    write_csv(&out.join("moments.csv"), &["t_fp", "sweeps", "mean", "variance"], &moment_rows)?;
    let rejection_rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            vec![
                r.t_fp,
                r.sweeps as f64,
                r.interval.pairs as f64,
                r.interval.rejected as f64,
                r.interval.rejection_fraction(),
            ]
        })
        .collect();
    write_csv(
        &out.join("rejection_stats.csv"),
        &["t_fp", "sweeps", "pairs", "rejected", "fraction"],
        &rejection_rows,
    )?;
    let cmp_rows: Vec<Vec<f64>> = rows.iter().filter_map(|r| r.l1_to_fp.map(|l1| vec![r.t_fp, l1])).collect();
    write_csv(&out.join("mc_vs_fp.csv"), &["t_fp", "l1"], &cmp_rows)?;

    Ok(McReport { interaction, rows })
}

// ------------------------------------------------------------------ verify-ls

/// `v · exp(ψ)`, renormalized, with `ψ` a random cosine series of random
/// amplitude; `v` is the equilibrium sampled on the grid.
pub fn random_tilted_density(reference: &DensityField, rng: &mut ChaCha8Rng) -> DensityField {
    let grid = *reference.grid();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let amplitude = 10f64.powf(rng.random_range(-2.0..0.5));
    let coeffs: Vec<(f64, f64)> = (1..=6)
        .map(|k| (amplitude * normal.sample(rng) / k as f64, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    let values = grid
        .centers()
        .into_iter()
        .zip(reference.values())
        .map(|(y, v)| {
            let psi: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, (a, phase))| a * ((k + 1) as f64 * std::f64::consts::FRAC_PI_2 * (y + 1.0) + phase).cos())
                .sum();
            v * psi.exp()
        })
        .collect();
    let mut f = DensityField::new(grid, values).expect("tilted density is positive");
    f.normalize().expect("tilted density has positive mass");
    f
}

/// Random smooth `w` on the grid; may change sign.
pub fn random_smooth_function(grid: &Grid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let coeffs: Vec<f64> = (0..7).map(|k| normal.sample(rng) / (k + 1) as f64).collect();
    grid.centers()
        .into_iter()
        .map(|y| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a * (k as f64 * std::f64::consts::FRAC_PI_2 * (y + 1.0)).cos())
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsRow {
    pub lambda: f64,
    pub m: f64,
    pub min_slack: f64,
    pub rho: f64,
    pub rho_numeric: f64,
    pub identity_error: f64,
    /// Smallest uniform-equilibrium slack, only at `(λ, m) = (1, 0)`.
    pub min_uniform_slack: Option<f64>,
}

impl LsRow {
    pub fn passed(&self) -> bool {
        self.min_slack >= -LS_DISCRETIZATION_ALLOWANCE
            && (self.rho_numeric - self.rho).abs() <= 1e-10
            && self.identity_error <= 1e-12
            && self.min_uniform_slack.is_none_or(|s| s >= -LS_DISCRETIZATION_ALLOWANCE)
    }
}

pub fn verify_ls(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<Vec<LsRow>> {
    let points = cfg.ls.points();
    let bad: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(lambda, m)| !KineticParams::new(lambda, m).is_ok_and(|p| p.admits_log_sobolev()))
        .collect();
    if !bad.is_empty() {
        return Err(Error::RegimeGrid(bad));
    }
    ensure_dir(out)?;
    let grid = Grid::new(cfg.ls.n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for (lambda, m) in points {
        let p = KineticParams::new(lambda, m)?;
        let reference = BetaEquilibrium::new(p)?.sample_normalized(&grid);
        let mut min_slack = f64::INFINITY;
        for _ in 0..cfg.ls.samples {
            let f = random_tilted_density(&reference, &mut rng);
            min_slack = min_slack.min(ls_slack(&f, &p)?);
        }
        let k = log_sobolev_constant(&p)?;
        let rho = bakry_emery_rho(&p)?;
        let (_, rho_numeric) = minimize_w_second(&p)?;
        let min_uniform_slack = if lambda == 1.0 && m == 0.0 {
            let mut s = f64::INFINITY;
            for _ in 0..cfg.ls.samples {
                let w = random_smooth_function(&grid, &mut rng);
                s = s.min(uniform_ls_slack(&grid, &w)?);
            }
            Some(s)
        } else {
            None
        };
        rows.push(LsRow {
            lambda,
            m,
            min_slack,
            rho,
            rho_numeric,
            identity_error: (2.0 * k * rho - 1.0).abs(),
            min_uniform_slack,
        });
    }
    let csv_rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            vec![
                r.lambda,
                r.m,
                r.min_slack,
                r.min_uniform_slack.unwrap_or(f64::NAN),
                r.rho,
                r.rho_numeric,
                (r.rho_numeric - r.rho).abs(),
                r.identity_error,
                if r.passed() { 1.0 } else { 0.0 },
            ]
        })
        .collect();
    write_csv(
        &out.join("ls_report.csv"),
        &[
            "lambda",
            "m",
            "min_ls_slack",
            "min_uniform_slack",
            "rho",
            "rho_numeric",
            "rho_abs_diff",
            "identity_error",
            "pass",
        ],
        &csv_rows,
    )?;
    Ok(rows)
}

// ------------------------------------------------------------ transform-check

#[derive(Debug, Clone, PartialEq)]
pub struct TransformReport {
    pub params: KineticParams,
    /// Max relative gap between `g(z)` and `v(sin z) cos z`.
    pub pointwise_error: f64,
    /// Max relative gap between the closed form and `g`.
    pub explicit_error: f64,
    pub min_w_second_on_grid: f64,
    pub rho: f64,
    pub rho_numeric: f64,
    pub stationarity_residual: f64,
    /// `(side, expected, fitted)`; sides with exponent near zero are left out.
    pub exponents: Vec<(Side, f64, f64)>,
}

impl TransformReport {
    pub fn passed(&self) -> bool {
        self.pointwise_error <= 1e-12
            && self.explicit_error <= 1e-10
            && self.min_w_second_on_grid > 0.0
            && (self.rho_numeric - self.rho).abs() <= 1e-10
            && self.stationarity_residual <= 1e-8
            && self.exponents.iter().all(|(_, e, f)| (f - e).abs() <= 0.02 * e.abs())
    }
}

pub fn transform_check(params: &KineticParams, out: Option<&Path>) -> Result<TransformReport> {
    params.admits_log_sobolev().then_some(()).ok_or(Error::Regime {
        lambda: params.lambda(),
        m: params.m(),
    })?;
    let eq = BetaEquilibrium::new(*params)?;
    let points = 10_000;
    let mut pointwise_error: f64 = 0.0;
    let mut explicit_error: f64 = 0.0;
    let mut min_w2 = f64::INFINITY;
    let mut rows = Vec::new();
    for k in 0..points {
        let z = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * (k as f64 + 0.5) / points as f64;
        let g = g_density(params, z)?;
        let explicit = g_density_explicit(params, z)?;
        let w2 = w_second(params, z)?;
        min_w2 = min_w2.min(w2);
        if z.abs() <= 1.5 {
            let direct = eq.value(z.sin())? * z.cos();
            pointwise_error = pointwise_error.max((g - direct).abs() / direct);
        }
        if g > 0.0 && g.is_finite() {
            explicit_error = explicit_error.max((explicit - g).abs() / g);
        }
        if k % 50 == 25 {
            rows.push(vec![z, g, explicit, w2]);
        }
    }
    let rho = bakry_emery_rho(params)?;
    let (z_bar, rho_numeric) = minimize_w_second(params)?;
    let s = z_bar.sin();
    let stationarity_residual = (params.m() * s * s + (params.lambda() - 2.0) * s + params.m()).abs();
    debug_assert!((s - stationary_sine(params)).abs() < 1e-6);
    let mut exponents = Vec::new();
    for side in [Side::Lower, Side::Upper] {
        let expected = boundary_exponent(params, side);
        if expected.abs() < 0.05 {
            continue;
        }
        let fitted = fit_boundary_exponent(params, side, 1e-6, 1e-3, 40)?;
        exponents.push((side, expected, fitted));
    }
    let report = TransformReport {
        params: *params,
        pointwise_error,
        explicit_error,
        min_w_second_on_grid: min_w2,
        rho,
        rho_numeric,
        stationarity_residual,
        exponents,
    };
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_csv(&dir.join("transform.csv"), &["z", "g", "g_explicit", "w_second"], &rows)?;
        let mut text = String::new();
        writeln!(text, "lambda: {}", format_value(params.lambda())).unwrap();
        writeln!(text, "m: {}", format_value(params.m())).unwrap();
        writeln!(text, "pointwise_rel_error: {}", format_value(report.pointwise_error)).unwrap();
        writeln!(text, "explicit_rel_error: {}", format_value(report.explicit_error)).unwrap();
        writeln!(text, "min_w_second_on_grid: {}", format_value(report.min_w_second_on_grid)).unwrap();
        writeln!(text, "rho: {}", format_value(report.rho)).unwrap();
        writeln!(text, "rho_numeric: {}", format_value(report.rho_numeric)).unwrap();
        writeln!(text, "stationarity_residual: {}", format_value(report.stationarity_residual)).unwrap();
        for (side, e, f) in &report.exponents {
            writeln!(text, "boundary_exponent_{side:?}: expected {} fitted {}", format_value(*e), format_value(*f)).unwrap();
        }
        writeln!(text, "overall: {}", verdict(report.passed())).unwrap();
        write_text(&dir.join("transform_summary.txt"), &text)?;
    }
    Ok(report)
}

// ------------------------------------------------------------------------ fit

/// Fits column `column` of a CSV against its first column over `window`
/// (default: second half of the time range).
pub fn fit_csv_column(path: &Path, column: &str, window: Option<(f64, f64)>) -> Result<DecayFit> {
    let (header, rows) = read_csv(path)?;
    let idx = header.iter().position(|h| h == column).ok_or_else(|| Error::Validation {
        field: "column".into(),
        msg: format!("{column:?} not in {}", header.join(",")),
    })?;
    let series: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[idx])).collect();
    let window = window.unwrap_or_else(|| {
        let t0 = series.first().map_or(0.0, |s| s.0);
        let t1 = series.last().map_or(0.0, |s| s.0);
        second_half(t0, t1)
    });
    fit_decay_rate(&series, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_str;

    fn config(text: &str) -> ExperimentConfig {
        parse_str(text, Path::new(".")).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let rows = vec![vec![0.1, -2.5e-300, f64::NAN], vec![1.0 / 3.0, 7.0, f64::INFINITY]];
        write_csv(&path, &["a", "b", "c"], &rows).unwrap();
        let (header, back) = read_csv(&path).unwrap();
        assert_eq!(header, vec!["a", "b", "c"]);
        assert_eq!(back[0][0], 0.1);
        assert_eq!(back[0][1], -2.5e-300);
        assert!(back[0][2].is_nan());
        assert_eq!(back[1][0], 1.0 / 3.0);
        assert_eq!(back[1][2], f64::INFINITY);
        assert_eq!(format_value(1.0 / 3.0), "3.3333333333333331e-1");
    }

    #[test]
    fn equilibrium_start_is_flat() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("lambda = 1\nm = 0\ninitial = equilibrium\nt_end = 0.5\nn = 100\ndt = 1e-2\nsample_every = 5\n");
        let report = run_solve(&cfg, dir.path()).unwrap();
        for r in &report.trajectory.rows {
            assert!(r.entropy.abs() < 1e-12 && r.l1 < 1e-12 && r.weighted_l2 < 1e-12);
        }
        // H vanishes identically, so there is no rate to fit
        assert!(matches!(report.assessment.entropy_rate, RateCheck::Skipped(_)));
        assert!(report.passed());
        let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert!(summary.contains("verdict_H: SKIP"));
    }

    #[test]
    fn verdicts_recomputable_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("lambda = 0.5\nt_end = 2\nn = 100\ndt = 1e-2\nsample_every = 2\n");
        let report = run_solve(&cfg, dir.path()).unwrap();
        let (_, rows) = read_csv(&dir.path().join("decay.csv")).unwrap();
        let parsed: Vec<DecayRow> = rows
            .iter()
            .map(|r| DecayRow {
                time: r[0],
                entropy: r[1],
                fisher: r[2],
                ls_bound: if r[3].is_nan() { None } else { Some(r[3]) },
                l1: r[4],
                weighted_l2: r[5],
                mass: r[6],
                mean: r[7],
            })
            .collect();
        assert_eq!(assess_decay(&cfg.params, &parsed), report.assessment);
        let fit = fit_csv_column(&dir.path().join("decay.csv"), "H", None).unwrap();
        assert_eq!(Some(fit.slope), report.assessment.entropy_rate.slope());
    }

    #[test]
    fn ls_grid_rejected_up_front() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("lambda = 1\nls.lambdas = 1.9, 0.5\nls.m = 0.5\n");
        match verify_ls(&cfg, 1, dir.path()) {
            Err(Error::RegimeGrid(points)) => assert_eq!(points, vec![(1.9, 0.5)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn small_ls_battery() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("lambda = 1\nls.lambdas = 1, 0.5\nls.m = 0, 0.5\nls.samples = 20\nls.n = 200\n");
        let rows = verify_ls(&cfg, 3, dir.path()).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.passed()), "{rows:?}");
        assert!(rows[0].min_uniform_slack.is_some());
    }

    #[test]
    fn transform_report_for_reference_params() {
        let report = transform_check(&KineticParams::new(0.5, 0.25).unwrap(), None).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.exponents.len(), 2);
        assert!(transform_check(&KineticParams::new(1.9, 0.5).unwrap(), None).is_err());
    }

    #[test]
    fn mc_requires_block_and_matching_mean() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("lambda = 0.5\n");
        assert!(matches!(run_mc(&cfg, dir.path()), Err(Error::Validation { .. })));
        let cfg = config("lambda = 0.5\nm = 0.3\nmc.agents = 100\n");
        assert!(matches!(run_mc(&cfg, dir.path()), Err(Error::Validation { field, .. }) if field == "m"));
    }

    #[test]
    fn pure_compromise_variance_decreases() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("lambda = 0.5\nn = 50\nmc.agents = 2000\nmc.sigma2 = 0\nmc.gamma = 0.5\nmc.epsilon = 0.1\nmc.bins = 10\nmc.times = 0.5, 1, 2\n");
        let report = run_mc(&cfg, dir.path()).unwrap();
        assert_eq!(report.rows.len(), 4);
        for w in report.rows.windows(2) {
            assert!(w[1].variance < w[0].variance);
        }
        assert!(report.rows.iter().all(|r| r.l1_to_fp.is_none()));
    }

    #[test]
    fn mc_output_is_deterministic() {
        let text = "lambda = 0.5\nn = 50\nmc.agents = 2000\nmc.bins = 10\nmc.times = 0.1, 0.2\nmc.epsilon = 0.05\n";
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_mc(&config(text), a.path()).unwrap();
        run_mc(&config(text), b.path()).unwrap();
        for file in ["mc_hist.csv", "moments.csv", "rejection_stats.csv", "mc_vs_fp.csv"] {
            assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
        }
    }
}
