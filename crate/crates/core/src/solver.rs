//! Chang–Cooper finite-volume integrator for the opinion Fokker–Planck equation.
//!
//! The equation is written in flux form `∂_t v = ∂_y F` with
//! `F = D ∂_y v + B v`, `D = (λ/2)(1-y²)` and `B = (1-λ) y - m`. At every
//! interior interface the Chang–Cooper weight `δ(w)`, `w = Δy B / D`, makes
//! the discrete flux vanish exactly on the discrete Beta steady state. The
//! boundary fluxes are identically zero, so mass is conserved. Backward Euler
//! then gives an M-matrix system that keeps the density nonnegative for every
//! `Δt > 0`.

use crate::error::{Error, Result};
use crate::functionals::{relative_entropy_equal_mass, weighted_fisher, weighted_l2, l1_distance};
use crate::grid::{DensityField, Grid};
use crate::params::{log_sobolev_constant, KineticParams};
use crate::tridiag::Tridiagonal;

pub const DEFAULT_CELLS: usize = 200;
pub const DEFAULT_DT: f64 = 1e-3;

pub fn build_grid(n: usize) -> Result<Grid> {
    Grid::new(n)
}

/// Chang–Cooper weight `δ(w) = 1/w - 1/(e^w - 1)`, with `δ(0) = 1/2`.
pub fn chang_cooper_delta(w: f64) -> f64 {
    if w.abs() < 1e-4 {
        return 0.5 - w / 12.0 + w * w * w / 720.0;
    }
    1.0 / w - 1.0 / w.exp_m1()
}

/// `x / (e^x - 1)`; equals `1 - xδ(x)`, and `1 + x(1 - δ(x))` at `-x`.
fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-10 {
        return 1.0 - 0.5 * x;
    }
    x / x.exp_m1()
}

/// One cell interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interface {
    /// Boundary interface at `y = ±1` carrying zero flux.
    NoFlux,
    Open {
        drift: f64,
        diffusion: f64,
        weight: f64,
    },
}

/// Per-interface drift, diffusion and Chang–Cooper weights for a grid.
///
/// The flux across the interface between cells `k` and `k+1` is
/// `F = c_k v_{k+1} - a_k v_k` with `a_k = (D/Δy)(1 - wδ)` and
/// `c_k = (D/Δy)(1 + w(1 - δ))`. Both are evaluated through the Bernoulli
/// function, which is the same expression without the cancellation at
/// large `|w|`.
#[derive(Debug, Clone)]
pub struct FluxCoefficients {
    grid: Grid,
    interfaces: Vec<Interface>,
    from_left: Vec<f64>,
    from_right: Vec<f64>,
}

impl FluxCoefficients {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `n + 1` interfaces, from `y = -1` to `y = 1`.
    pub fn interfaces(&self) -> &[Interface] {
        &self.interfaces
    }

    /// Coefficient `a_k` of `v_k` in the flux across interior interface `k`.
    pub fn from_left(&self) -> &[f64] {
        &self.from_left
    }

    /// Coefficient `c_k` of `v_{k+1}` in the flux across interior interface `k`.
    pub fn from_right(&self) -> &[f64] {
        &self.from_right
    }

    /// Interior fluxes `F_{k+1/2}`, `k = 0..n-2`.
    pub fn fluxes(&self, v: &[f64]) -> Vec<f64> {
        (0..self.from_left.len())
            .map(|k| self.from_right[k] * v[k + 1] - self.from_left[k] * v[k])
            .collect()
    }

    /// Flux-divergence operator `(A v)_i = (F_{i+1/2} - F_{i-1/2}) / Δy`.
    pub fn operator(&self) -> Tridiagonal {
        let n = self.grid.n_cells();
        let inv_dy = 1.0 / self.grid.cell_width();
        let mut a = Tridiagonal::zeros(n);
        for k in 0..n - 1 {
            let left = self.from_left[k] * inv_dy;
            let right = self.from_right[k] * inv_dy;
            // flux F_k leaves cell k and enters cell k+1
            a.upper[k] += right;
            a.diag[k] -= left;
            a.diag[k + 1] -= right;
            a.lower[k + 1] += left;
        }
        a
    }
}

pub fn assemble_coefficients(p: &KineticParams, grid: &Grid) -> FluxCoefficients {
    let n = grid.n_cells();
    let dy = grid.cell_width();
    let mut interfaces = Vec::with_capacity(n + 1);
    let mut from_left = Vec::with_capacity(n - 1);
    let mut from_right = Vec::with_capacity(n - 1);
    interfaces.push(Interface::NoFlux);
    for k in 0..n - 1 {
        let y = grid.interface(k);
        let drift = (1.0 - p.lambda()) * y - p.m();
        let diffusion = 0.5 * p.lambda() * (1.0 - y * y);
        let w = dy * drift / diffusion;
        interfaces.push(Interface::Open {
            drift,
            diffusion,
            weight: chang_cooper_delta(w),
        });
        let scale = diffusion / dy;
        from_left.push(scale * bernoulli(w));
        from_right.push(scale * bernoulli(-w));
    }
    interfaces.push(Interface::NoFlux);
    FluxCoefficients {
        grid: *grid,
        interfaces,
        from_left,
        from_right,
    }
}

/// Unit-mass kernel vector of the discrete operator.
///
/// Zero flux across interface `k` gives `v_{k+1}/v_k = a_k/c_k`; the
/// recurrence runs in log space and is normalized at the end.
pub fn discretize_equilibrium(p: &KineticParams, grid: &Grid) -> DensityField {
    kernel_of(&assemble_coefficients(p, grid), p, grid)
}

fn kernel_of(coeffs: &FluxCoefficients, p: &KineticParams, grid: &Grid) -> DensityField {
    let n = grid.n_cells();
    let dy = grid.cell_width();
    let mut log_v = Vec::with_capacity(n);
    log_v.push(0.0);
    for k in 0..n - 1 {
        let (a, c) = (coeffs.from_left[k], coeffs.from_right[k]);
        let step = if a > 0.0 && c > 0.0 && (a / c).is_finite() && a / c > 0.0 {
            (a / c).ln()
        } else {
            // underflowed Bernoulli factor; ln(a/c) = -w exactly
            let y = grid.interface(k);
            -dy * ((1.0 - p.lambda()) * y - p.m()) / (0.5 * p.lambda() * (1.0 - y * y))
        };
        log_v.push(log_v[k] + step);
    }
    let top = log_v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let values = log_v.into_iter().map(|l| (l - top).exp()).collect();
    let mut field = DensityField::new(*grid, values).expect("kernel values are finite and positive");
    field.normalize().expect("kernel has positive mass");
    field
}

/// Time-stepping state; owned by one run.
#[derive(Debug, Clone)]
pub struct SolverState {
    params: KineticParams,
    time: f64,
    density: DensityField,
    dt: f64,
    step_count: usize,
    coeffs: FluxCoefficients,
    system: Tridiagonal,
}

impl SolverState {
    pub fn new(params: KineticParams, initial: DensityField, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Validation {
                field: "dt".into(),
                msg: format!("must be positive, got {dt}"),
            });
        }
        let grid = *initial.grid();
        let coeffs = assemble_coefficients(&params, &grid);
        let mut system = coeffs.operator();
        for i in 0..system.len() {
            system.lower[i] *= -dt;
            system.upper[i] *= -dt;
            system.diag[i] = 1.0 - dt * system.diag[i];
        }
        Ok(SolverState {
            params,
            time: 0.0,
            density: initial,
            dt,
            step_count: 0,
            coeffs,
            system,
        })
    }

    pub fn params(&self) -> &KineticParams {
        &self.params
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn density(&self) -> &DensityField {
        &self.density
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn coefficients(&self) -> &FluxCoefficients {
        &self.coeffs
    }

    /// Unit-mass discrete equilibrium of this state's operator.
    pub fn equilibrium(&self) -> DensityField {
        kernel_of(&self.coeffs, &self.params, self.density.grid())
    }

    /// One backward-Euler step: solve `(I - Δt A) v^{k+1} = v^k`.
    pub fn step(&mut self) -> Result<()> {
        let next = self.system.solve(self.density.values())?;
        self.density.values_mut().copy_from_slice(&next);
        self.step_count += 1;
        self.time = self.step_count as f64 * self.dt;
        Ok(())
    }
}

/// Consumes a state and returns it advanced by one step.
pub fn step_implicit(mut s: SolverState) -> Result<SolverState> {
    s.step()?;
    Ok(s)
}

/// Functionals of the solution at one sampled time, measured against the
/// discrete equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub time: f64,
    pub entropy: f64,
    pub fisher: f64,
    /// `K_{m,λ} Ĩ`; `None` outside the log-Sobolev regime.
    pub ls_bound: Option<f64>,
    pub l1: f64,
    pub weighted_l2: f64,
    pub mass: f64,
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: KineticParams,
    pub dt: f64,
    pub steps: usize,
    pub rows: Vec<DecayRow>,
    pub equilibrium: DensityField,
    pub final_state: DensityField,
    /// Largest `H(v^{k+1}) - H(v^k)` over all steps.
    pub max_entropy_increase: f64,
    /// Largest `|mass(v^{k+1}) - mass(v^k)|` over all steps.
    pub max_mass_drift: f64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.time).collect()
    }
}

struct Meter {
    equilibrium: DensityField,
    lambda: f64,
    k: Option<f64>,
}

impl Meter {
    fn entropy(&self, v: &DensityField) -> Result<f64> {
        relative_entropy_equal_mass(v, &self.equilibrium.scaled(v.mass()))
    }

    fn row(&self, time: f64, v: &DensityField) -> Result<DecayRow> {
        let fisher = match weighted_fisher(v, &self.equilibrium, self.lambda) {
            Ok(x) => x,
            Err(Error::NonPositive { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let mass = v.mass();
        Ok(DecayRow {
            time,
            entropy: self.entropy(v)?,
            fisher,
            ls_bound: self.k.map(|k| k * fisher),
            l1: l1_distance(v, &self.equilibrium)?,
            weighted_l2: weighted_l2(v, &self.equilibrium.scaled(mass))?,
            mass,
            mean: v.mean(),
        })
    }
}

/// Integrates from `v0` to `t_end`, sampling functionals every `sample_every`
/// steps (plus the first and last step).
pub fn solve(
    p: &KineticParams,
    v0: &DensityField,
    dt: f64,
    t_end: f64,
    sample_every: usize,
) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(Error::Validation {
            field: "t_end".into(),
            msg: format!("must be positive, got {t_end}"),
        });
    }
    if sample_every == 0 {
        return Err(Error::Validation {
            field: "sample_every".into(),
            msg: "must be at least 1".into(),
        });
    }
    let mut state = SolverState::new(*p, v0.clone(), dt)?;
    let meter = Meter {
        equilibrium: state.equilibrium(),
        lambda: p.lambda(),
        k: log_sobolev_constant(p).ok(),
    };
    let steps = (t_end / dt).round().max(1.0) as usize;

    let mut rows = vec![meter.row(0.0, state.density())?];
    let mut entropy = meter.entropy(state.density())?;
    let mut mass = state.density().mass();
    let mut max_entropy_increase = f64::NEG_INFINITY;
    let mut max_mass_drift = 0.0f64;

    for k in 1..=steps {
        state.step()?;
        let next_entropy = meter.entropy(state.density())?;
        let next_mass = state.density().mass();
        max_entropy_increase = max_entropy_increase.max(next_entropy - entropy);
        max_mass_drift = max_mass_drift.max((next_mass - mass).abs());
        entropy = next_entropy;
        mass = next_mass;
        if k % sample_every == 0 || k == steps {
            rows.push(meter.row(state.time(), state.density())?);
        }
    }

    Ok(Trajectory {
        params: *p,
        dt,
        steps,
        rows,
        equilibrium: meter.equilibrium,
        final_state: state.density().clone(),
        max_entropy_increase,
        max_mass_drift,
    })
}
