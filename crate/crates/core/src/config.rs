//! Experiment configuration: line-oriented `key = value` files.
//!
//! ```text
//! # parameters
//! lambda = 0.5
//! m = 0
//! n = 200
//! dt = 1e-3
//! t_end = 10
//! initial = bimodal          # bimodal | bimodal-mean | uniform | equilibrium | file:<path>
//! width = 0.15
//!
//! mc.agents = 100000
//! mc.epsilon = 0.01
//! mc.gamma = 0.5
//! mc.seed = 1
//! mc.times = 0.5, 1, 2
//!
//! sweep.lambdas = 0.2, 0.4, 0.6, 0.8
//! ls.lambdas = 0.2, 0.6, 1.0, 1.4, 1.8
//! ```
//!
//! Every key except `lambda` has a default. Unknown keys are parse errors.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid};
use crate::initial::{Bimodal, DEFAULT_WIDTH};
use crate::params::{BetaEquilibrium, KineticParams};
use crate::solver::{DEFAULT_CELLS, DEFAULT_DT};

pub const DEFAULT_T_END: f64 = 10.0;
pub const DEFAULT_SAMPLE_EVERY: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Bimodal(Bimodal),
    Uniform,
    Equilibrium,
    /// Values read from a file, one per cell (last comma-separated column).
    File(PathBuf),
}

impl InitialCondition {
    pub fn field(&self, grid: Grid, params: &KineticParams) -> Result<DensityField> {
        match self {
            InitialCondition::Bimodal(b) => b.field(grid),
            InitialCondition::Uniform => Ok(DensityField::uniform(grid)),
            InitialCondition::Equilibrium => Ok(crate::solver::discretize_equilibrium(params, &grid)),
            InitialCondition::File(path) => read_field(path, grid),
        }
    }

    pub fn label(&self) -> String {
        match self {
            InitialCondition::Bimodal(b) => format!("bimodal(width={}, plus_weight={})", b.width(), b.plus_weight()),
            InitialCondition::Uniform => "uniform".into(),
            InitialCondition::Equilibrium => "equilibrium".into(),
            InitialCondition::File(p) => format!("file:{}", p.display()),
        }
    }
}

fn read_field(path: &Path, grid: Grid) -> Result<DensityField> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let last = line.rsplit(',').next().unwrap_or("").trim();
        match last.parse::<f64>() {
            Ok(v) => values.push(v),
            // a header row is allowed before any data
            Err(_) if values.is_empty() => continue,
            Err(_) => {
                return Err(Error::ConfigParse {
                    line: k + 1,
                    msg: format!("{}: cannot read a number from {last:?}", path.display()),
                })
            }
        }
    }
    if values.len() != grid.n_cells() {
        return Err(Error::GridMismatch(grid.n_cells(), values.len()));
    }
    let mut field = DensityField::new(grid, values)?;
    field.normalize()?;
    Ok(field)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub agents: usize,
    pub epsilon: f64,
    pub gamma: f64,
    /// Overrides `σ² = λγ` when set.
    pub sigma2: Option<f64>,
    pub seed: u64,
    pub bins: usize,
    /// FP times at which histograms are recorded.
    pub times: Vec<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            agents: 100_000,
            epsilon: 0.01,
            gamma: 0.5,
            sigma2: None,
            seed: 1,
            bins: 50,
            times: vec![0.5, 1.0, 2.0],
        }
    }
}

/// Parameter grid for the log-Sobolev battery.
#[derive(Debug, Clone, PartialEq)]
pub struct LsGrid {
    pub lambdas: Vec<f64>,
    /// Explicit `m` values; when absent each `λ` gets
    /// `m ∈ {0, ±(1-λ/2)/2, ±(1-λ/2)}`.
    pub m_values: Option<Vec<f64>>,
    pub samples: usize,
    pub n: usize,
}

impl Default for LsGrid {
    fn default() -> Self {
        LsGrid {
            lambdas: (1..=9).map(|k| 0.2 * k as f64).collect(),
            m_values: None,
            samples: 200,
            n: 400,
        }
    }
}

impl LsGrid {
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &lambda in &self.lambdas {
            match &self.m_values {
                Some(ms) => out.extend(ms.iter().map(|&m| (lambda, m))),
                None => {
                    let c = 1.0 - 0.5 * lambda;
                    if c <= 0.0 {
                        // no admissible m; keep the point so validation reports it
                        out.push((lambda, 0.0));
                    } else {
                        let top = c.min(0.99);
                        for m in [-top, -0.5 * top, 0.0, 0.5 * top, top] {
                            out.push((lambda, m));
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: KineticParams,
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
    pub initial: InitialCondition,
    pub mc: Option<McConfig>,
    pub sweep_lambdas: Vec<f64>,
    pub ls: LsGrid,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(params: KineticParams) -> Self {
        ExperimentConfig {
            params,
            n: DEFAULT_CELLS,
            dt: DEFAULT_DT,
            t_end: DEFAULT_T_END,
            sample_every: DEFAULT_SAMPLE_EVERY,
            initial: InitialCondition::Bimodal(Bimodal::new(DEFAULT_WIDTH).expect("default width is valid")),
            mc: None,
            sweep_lambdas: vec![0.2, 0.4, 0.6, 0.8],
            ls: LsGrid::default(),
            out_dir: None,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n)
    }

    pub fn initial_field(&self) -> Result<DensityField> {
        self.initial.field(self.grid()?, &self.params)
    }

    pub fn equilibrium(&self) -> Result<BetaEquilibrium> {
        BetaEquilibrium::new(self.params)
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_str(&text, path.parent().unwrap_or(Path::new(".")))
}

fn invalid(field: &str, msg: impl Into<String>) -> Error {
    Error::Validation {
        field: field.into(),
        msg: msg.into(),
    }
}

/// Parses config text; relative `file:` paths resolve against `base`.
pub fn parse_str(text: &str, base: &Path) -> Result<ExperimentConfig> {
    let mut lambda = None;
    let mut m = 0.0;
    let mut n = DEFAULT_CELLS as f64;
    let mut dt = DEFAULT_DT;
    let mut t_end = DEFAULT_T_END;
    let mut sample_every = DEFAULT_SAMPLE_EVERY as f64;
    let mut initial = String::from("bimodal");
    let mut width = DEFAULT_WIDTH;
    let mut plus_weight = 0.5;
    let mut mc: Option<McConfig> = None;
    let mut sweep_lambdas = vec![0.2, 0.4, 0.6, 0.8];
    let mut ls = LsGrid::default();
    let mut out_dir = None;

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
            line: line_no,
            msg: format!("expected `key = value`, got {line:?}"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let number = || -> Result<f64> {
            value.parse::<f64>().map_err(|_| Error::ConfigParse {
                line: line_no,
                msg: format!("{key}: {value:?} is not a number"),
            })
        };
        let list = || -> Result<Vec<f64>> {
            value
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| Error::ConfigParse {
                        line: line_no,
                        msg: format!("{key}: {s:?} is not a number"),
                    })
                })
                .collect()
        };
        if let Some(sub) = key.strip_prefix("mc.") {
            let block = mc.get_or_insert_with(McConfig::default);
            match sub {
                "agents" => block.agents = count(number()?, key)?,
                "epsilon" => block.epsilon = number()?,
                "gamma" => block.gamma = number()?,
                "sigma2" => block.sigma2 = Some(number()?),
                "seed" => {
                    block.seed = value.parse::<u64>().map_err(|_| Error::ConfigParse {
                        line: line_no,
                        msg: format!("{key}: {value:?} is not an unsigned integer"),
                    })?
                }
                "bins" => block.bins = count(number()?, key)?,
                "times" => block.times = list()?,
                _ => return Err(unknown(line_no, key)),
            }
            continue;
        }
        match key {
            "lambda" => lambda = Some(number()?),
            "m" => m = number()?,
            "n" => n = number()?,
            "dt" => dt = number()?,
            "t_end" => t_end = number()?,
            "sample_every" => sample_every = number()?,
            "initial" => initial = value.to_string(),
            "width" => width = number()?,
            "plus_weight" => plus_weight = number()?,
            "out" => out_dir = Some(PathBuf::from(value)),
            "sweep.lambdas" => sweep_lambdas = list()?,
            "ls.lambdas" => ls.lambdas = list()?,
            "ls.m" => ls.m_values = Some(list()?),
            "ls.samples" => ls.samples = count(number()?, key)?,
            "ls.n" => ls.n = count(number()?, key)?,
            _ => return Err(unknown(line_no, key)),
        }
    }

    let lambda = lambda.ok_or_else(|| invalid("lambda", "missing"))?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    if !(m.abs() < 1.0) {
        return Err(invalid("m", format!("must lie in (-1, 1), got {m}")));
    }
    let params = KineticParams::new(lambda, m)?;
    let n = count(n, "n")?;
    if n < Grid::MIN_CELLS {
        return Err(invalid("n", format!("need at least {} cells, got {n}", Grid::MIN_CELLS)));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(invalid("t_end", format!("must be positive, got {t_end}")));
    }
    let sample_every = count(sample_every, "sample_every")?;
    if sample_every == 0 {
        return Err(invalid("sample_every", "must be at least 1"));
    }
    let bimodal_err = |e: Error| match e {
        Error::Validation { field, msg } => invalid(if field == "plus_weight" { "plus_weight" } else { "width" }, msg),
        other => other,
    };
    let initial = match initial.as_str() {
        "bimodal" => InitialCondition::Bimodal(Bimodal::weighted(width, plus_weight).map_err(bimodal_err)?),
        "bimodal-mean" => InitialCondition::Bimodal(Bimodal::with_mean(width, m).map_err(bimodal_err)?),
        "uniform" => InitialCondition::Uniform,
        "equilibrium" => InitialCondition::Equilibrium,
        other => match other.strip_prefix("file:") {
            Some(p) if !p.trim().is_empty() => InitialCondition::File(base.join(p.trim())),
            _ => return Err(invalid("initial", format!("unknown preset {other:?}"))),
        },
    };
    if let Some(block) = &mc {
        if block.agents == 0 || block.agents % 2 == 1 {
            return Err(invalid("mc.agents", format!("must be positive and even, got {}", block.agents)));
        }
        if !(block.epsilon > 0.0 && block.epsilon <= 1.0) {
            return Err(invalid("mc.epsilon", format!("must lie in (0, 1], got {}", block.epsilon)));
        }
        if !(block.gamma > 0.0 && block.gamma < 1.0) {
            return Err(invalid("mc.gamma", format!("must lie in (0, 1), got {}", block.gamma)));
        }
        if let Some(s) = block.sigma2 {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(invalid("mc.sigma2", format!("must be nonnegative, got {s}")));
            }
        }
        if block.bins < Grid::MIN_CELLS {
            return Err(invalid("mc.bins", format!("need at least {} bins", Grid::MIN_CELLS)));
        }
        if block.times.is_empty() || block.times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(invalid("mc.times", "need a nonempty list of nonnegative times"));
        }
        if block.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("mc.times", "times must increase"));
        }
    }
    if sweep_lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(invalid("sweep.lambdas", "values must be positive"));
    }
    if ls.lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(invalid("ls.lambdas", "values must be positive"));
    }
    if ls.n < Grid::MIN_CELLS {
        return Err(invalid("ls.n", format!("need at least {} cells", Grid::MIN_CELLS)));
    }

    Ok(ExperimentConfig {
        params,
        n,
        dt,
        t_end,
        sample_every,
        initial,
        mc,
        sweep_lambdas,
        ls,
        out_dir,
    })
}

fn unknown(line: usize, key: &str) -> Error {
    Error::ConfigParse {
        line,
        msg: format!("unknown key {key:?}"),
    }
}

fn count(x: f64, field: &str) -> Result<usize> {
    if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
        Ok(x as usize)
    } else {
        Err(invalid(field, format!("must be a nonnegative integer, got {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        parse_str(text, Path::new("."))
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = parse("lambda = 0.5\nm = 0\n").unwrap();
        assert_eq!(cfg.params, KineticParams::new(0.5, 0.0).unwrap());
        assert_eq!(cfg.n, 200);
        assert_eq!(cfg.dt, 1e-3);
        assert_eq!(cfg.t_end, DEFAULT_T_END);
        assert_eq!(cfg.sample_every, DEFAULT_SAMPLE_EVERY);
        assert!(cfg.mc.is_none());
        assert!(matches!(cfg.initial, InitialCondition::Bimodal(b) if b.width() == 0.15));
    }

    #[test]
    fn negative_lambda() {
        match parse("lambda = -1") {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "lambda"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse("lambda = 0.5\n# note\nn = lots\n") {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse("lambda = 0.5\nbogus = 1\n") {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("lambda 0.5"), Err(Error::ConfigParse { line: 1, .. })));
    }

    #[test]
    fn validation_names_field() {
        for (text, field) in [
            ("lambda = 1\nn = 2", "n"),
            ("lambda = 1\ndt = 0", "dt"),
            ("lambda = 1\nm = 1", "m"),
            ("lambda = 1\nwidth = -0.1", "width"),
            ("lambda = 1\ninitial = triangle", "initial"),
            ("lambda = 1\nmc.agents = 3", "mc.agents"),
            ("lambda = 1\nmc.times = 2, 1", "mc.times"),
            ("m = 0.1", "lambda"),
        ] {
            match parse(text) {
                Err(Error::Validation { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn bimodal_preset_has_unit_mass() {
        let cfg = parse("lambda = 0.5\ninitial = bimodal\nwidth = 0.15\n").unwrap();
        let f = cfg.initial_field().unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn blocks_and_lists() {
        let cfg = parse(
            "lambda = 0.5 # inline comment\n\
             mc.agents = 1000\nmc.seed = 42\nmc.times = 0, 0.5\n\
             sweep.lambdas = 0.3, 0.6\nls.lambdas = 1\nls.m = 0, 0.25\n",
        )
        .unwrap();
        let mc = cfg.mc.unwrap();
        assert_eq!(mc.agents, 1000);
        assert_eq!(mc.seed, 42);
        assert_eq!(mc.times, vec![0.0, 0.5]);
        assert_eq!(mc.bins, 50);
        assert_eq!(cfg.sweep_lambdas, vec![0.3, 0.6]);
        assert_eq!(cfg.ls.points(), vec![(1.0, 0.0), (1.0, 0.25)]);
    }

    #[test]
    fn default_ls_grid() {
        let points = LsGrid::default().points();
        assert_eq!(points.len(), 45);
        for (lambda, m) in points {
            assert!(KineticParams::new(lambda, m).unwrap().admits_log_sobolev(), "{lambda} {m}");
        }
    }

    #[test]
    fn file_initial_condition() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("init.csv");
        let rows: String = (0..8).map(|i| format!("{},{}\n", i, 1 + i % 2)).collect();
        fs::write(&path, format!("y,value\n{rows}")).unwrap();
        let cfg = parse_str("lambda = 1\nn = 8\ninitial = file:init.csv\n", dir.path()).unwrap();
        let f = cfg.initial_field().unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-14);
        assert!((f.values()[1] / f.values()[0] - 2.0).abs() < 1e-14);

        let cfg = parse_str("lambda = 1\nn = 10\ninitial = file:init.csv\n", dir.path()).unwrap();
        assert!(matches!(cfg.initial_field(), Err(Error::GridMismatch(10, 8))));
    }
}
