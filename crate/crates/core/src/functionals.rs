//! Lyapunov functionals and inequality slacks on grid densities.
//!
//! All integrals are midpoint sums over the cell centers. The weighted Fisher
//! information uses interface differences of the log-ratio with
//! arithmetic-mean density weights, the same stencil the finite-volume solver
//! uses for its fluxes.

use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid};
use crate::params::{log_sobolev_constant, BetaEquilibrium, KineticParams};

/// `r ln r - r + 1` evaluated through `e = r - 1` without cancellation near `r = 1`.
fn entropy_integrand(e: f64) -> f64 {
    if e <= -1.0 {
        return 1.0;
    }
    if e.abs() < 1e-3 {
        // Σ_{k≥2} (-1)^k e^k / (k(k-1))
        let e2 = e * e;
        return e2 * (0.5 - e / 6.0 + e2 / 12.0 - e2 * e / 20.0 + e2 * e2 / 30.0 - e2 * e2 * e / 42.0);
    }
    (1.0 + e) * e.ln_1p() - e
}

/// `ln(f/g)` for positive `f`, `g`, accurate when `f ≈ g`.
fn ln_ratio(f: f64, g: f64) -> f64 {
    ((f - g) / g).ln_1p()
}

/// `log(v / v_ref)` on the grid.
#[derive(Debug, Clone)]
pub struct RatioField {
    grid: Grid,
    log_ratio: Vec<f64>,
}

impl RatioField {
    /// Requires `f > 0` and `reference > 0` in every cell.
    pub fn new(f: &DensityField, reference: &DensityField) -> Result<Self> {
        f.ensure_same_grid(reference)?;
        let mut log_ratio = Vec::with_capacity(f.values().len());
        for (i, (&fi, &gi)) in f.values().iter().zip(reference.values()).enumerate() {
            if !(fi > 0.0) {
                return Err(Error::NonPositive { index: i, value: fi });
            }
            if !(gi > 0.0) {
                return Err(Error::NonPositive { index: i, value: gi });
            }
            log_ratio.push(ln_ratio(fi, gi));
        }
        Ok(RatioField {
            grid: *f.grid(),
            log_ratio,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_ratio
    }
}

/// `H(f, g) = Σ f_i ln(f_i/g_i) Δy`, with `0 ln 0 = 0`.
///
/// Evaluated as `Σ g φ(f/g) Δy + Σ (f - g) Δy` with `φ(r) = r ln r - r + 1 ≥ 0`,
/// which is the same sum rearranged.
pub fn relative_entropy(f: &DensityField, g: &DensityField) -> Result<f64> {
    let nonneg = entropy_core(f, g)?;
    let mass_gap: f64 = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a - b)
        .sum();
    Ok((nonneg + mass_gap) * f.grid().cell_width())
}

/// `H(f, g)` for fields of equal mass: only the nonnegative part `Σ g φ(f/g) Δy`.
///
/// Rounding in the masses would otherwise put a floor of order `1e-15` under
/// entropies that decay far below it.
pub fn relative_entropy_equal_mass(f: &DensityField, g: &DensityField) -> Result<f64> {
    Ok(entropy_core(f, g)? * f.grid().cell_width())
}

fn entropy_core(f: &DensityField, g: &DensityField) -> Result<f64> {
    f.ensure_same_grid(g)?;
    let mut sum = 0.0;
    for (i, (&fi, &gi)) in f.values().iter().zip(g.values()).enumerate() {
        if gi == 0.0 {
            if fi > 0.0 {
                return Err(Error::AbsoluteContinuity { index: i });
            }
            continue;
        }
        sum += gi * entropy_integrand((fi - gi) / gi);
    }
    Ok(sum)
}

/// Weighted Fisher information `Ĩ(f, v) = ∫ (λ/2)(1-y²) (∂_y ln(f/v))² f dy`.
///
/// `reference` is the equilibrium sampled on the grid (center values or the
/// discrete kernel of the solver).
pub fn weighted_fisher(f: &DensityField, reference: &DensityField, lambda: f64) -> Result<f64> {
    let ratio = RatioField::new(f, reference)?;
    Ok(fisher_from_ratio(f, &ratio, lambda))
}

fn fisher_from_ratio(f: &DensityField, ratio: &RatioField, lambda: f64) -> f64 {
    let grid = f.grid();
    let dy = grid.cell_width();
    let lr = ratio.log_values();
    let v = f.values();
    let mut sum = 0.0;
    for i in 0..grid.n_cells() - 1 {
        let y = grid.interface(i);
        let diffusion = 0.5 * lambda * (1.0 - y * y);
        let slope = (lr[i + 1] - lr[i]) / dy;
        let weight = 0.5 * (v[i] + v[i + 1]);
        sum += diffusion * slope * slope * weight;
    }
    sum * dy
}

/// Weighted L² distance `Σ (f - v)²/v Δy`; infinite if `f > 0` where `v = 0`.
pub fn weighted_l2(f: &DensityField, reference: &DensityField) -> Result<f64> {
    f.ensure_same_grid(reference)?;
    let mut sum = 0.0;
    for (&fi, &vi) in f.values().iter().zip(reference.values()) {
        if vi == 0.0 {
            if fi > 0.0 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        let d = fi - vi;
        sum += d * d / vi;
    }
    Ok(sum * f.grid().cell_width())
}

pub fn l1_distance(f: &DensityField, g: &DensityField) -> Result<f64> {
    f.ensure_same_grid(g)?;
    let sum: f64 = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(sum * f.grid().cell_width())
}

/// Csiszár–Kullback–Pinsker slack `2 H(f, g) - ‖f - g‖₁²`.
///
/// Returns `+∞` when `f` is not absolutely continuous with respect to `g`.
pub fn ckp_slack(f: &DensityField, g: &DensityField) -> Result<f64> {
    let h = match relative_entropy(f, g) {
        Ok(h) => h,
        Err(Error::AbsoluteContinuity { .. }) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    let l1 = l1_distance(f, g)?;
    Ok(2.0 * h - l1 * l1)
}

/// Weighted log-Sobolev slack `K_{m,λ} Ĩ(φ, v) - H(φ, v)`.
///
/// The equilibrium is sampled at cell centers and rescaled to unit discrete
/// mass. For smooth `φ` at `n ≥ 400` the discretization can push the slack
/// below zero by at most [`LS_DISCRETIZATION_ALLOWANCE`].
pub fn ls_slack(phi: &DensityField, p: &KineticParams) -> Result<f64> {
    let k = log_sobolev_constant(p)?;
    let eq = BetaEquilibrium::new(*p)?;
    let reference = eq.sample_normalized(phi.grid());
    let fisher = weighted_fisher(phi, &reference, p.lambda())?;
    let entropy = relative_entropy(phi, &reference)?;
    Ok(k * fisher - entropy)
}

pub const LS_DISCRETIZATION_ALLOWANCE: f64 = 1e-6;

/// Slack of the uniform-equilibrium inequality valid for any `w ∈ L²(-1, 1)`:
///
/// `2∫(1-x²)(w')² - [∫ w² ln w² - ‖w‖₂² ln(‖w‖₂²/2)]`.
///
/// `w` holds cell-center values and may change sign.
pub fn uniform_ls_slack(grid: &Grid, w: &[f64]) -> Result<f64> {
    if w.len() != grid.n_cells() {
        return Err(Error::GridMismatch(grid.n_cells(), w.len()));
    }
    if let Some((index, &value)) = w.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidDensity { index, value });
    }
    let dy = grid.cell_width();
    let norm_sq: f64 = w.iter().map(|x| x * x).sum::<f64>() * dy;
    if norm_sq == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let ent: f64 = w
        .iter()
        .map(|x| {
            let s = x * x;
            if s == 0.0 {
                0.0
            } else {
                s * s.ln()
            }
        })
        .sum::<f64>()
        * dy;
    let mut dirichlet = 0.0;
    for i in 0..grid.n_cells() - 1 {
        let y = grid.interface(i);
        let slope = (w[i + 1] - w[i]) / dy;
        dirichlet += (1.0 - y * y) * slope * slope;
    }
    dirichlet *= dy;
    Ok(2.0 * dirichlet - (ent - norm_sq * (0.5 * norm_sq).ln()))
}
