//! The trigonometric change of variables `y = sin z`.
//!
//! Under `y = sin z` the equilibrium becomes `g(z) = v(sin z) cos z =
//! exp(-(2/λ) W(z))` up to normalization, with
//! `W'(z) = ((1-λ/2) sin z - m)/cos z`. Convexity of `W` gives the
//! Bakry–Emery constant `ρ = min W''`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid};
use crate::interp::{cumulative, remap_masses};
use crate::params::{BetaEquilibrium, KineticParams, ParamRegime};

fn check_angle(z: f64) -> Result<()> {
    if z.abs() < FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::Domain(format!("angle {z} outside (-π/2, π/2)")))
    }
}

/// `(1 - sin z, 1 + sin z)` without cancellation near `±π/2`.
fn sine_distances(z: f64) -> (f64, f64) {
    let half = FRAC_PI_4 - 0.5 * z;
    let s = half.sin();
    let c = half.cos();
    (2.0 * s * s, 2.0 * c * c)
}

/// `W'` and `W''` for one parameter pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigPotential {
    params: KineticParams,
}

impl TrigPotential {
    pub fn new(params: KineticParams) -> Self {
        TrigPotential { params }
    }

    pub fn params(&self) -> &KineticParams {
        &self.params
    }

    fn c(&self) -> f64 {
        1.0 - 0.5 * self.params.lambda()
    }

    pub fn w_prime(&self, z: f64) -> Result<f64> {
        check_angle(z)?;
        Ok((self.c() * z.sin() - self.params.m()) / z.cos())
    }

    /// `((1-λ/2) - m sin z)/cos² z`.
    pub fn w_second(&self, z: f64) -> Result<f64> {
        check_angle(z)?;
        let (c, m) = (self.c(), self.params.m());
        let (below, above) = sine_distances(z);
        // c - m sin z = (c - |m|) + |m|(1 ∓ sin z)
        let numerator = if m >= 0.0 {
            (c - m) + m * below
        } else {
            (c + m) - m * above
        };
        let cos = z.cos();
        Ok(numerator / (cos * cos))
    }

    // W'' as a function of t = tan(z/2), written so that the vanishing factor
    // at the favoured endpoint cancels analytically
    fn w_second_half_angle(&self, t: f64) -> f64 {
        let (c, m) = (self.c(), self.params.m());
        let q = 1.0 + t * t;
        if m >= 0.0 {
            ((c - m) * q / ((1.0 - t) * (1.0 - t)) + m) * q / ((1.0 + t) * (1.0 + t))
        } else {
            ((c + m) * q / ((1.0 + t) * (1.0 + t)) - m) * q / ((1.0 - t) * (1.0 - t))
        }
    }

    /// Golden-section minimum of `W''`; returns `(z̄, min W'')`.
    pub fn minimize(&self) -> Result<(f64, f64)> {
        if self.params.regime() < ParamRegime::L2Equilibrium {
            return Err(Error::Regime {
                lambda: self.params.lambda(),
                m: self.params.m(),
            });
        }
        let f = |t: f64| self.w_second_half_angle(t);
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        while hi - lo > 1e-12 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = f(x2);
            }
        }
        let mut t = if f1 <= f2 { x1 } else { x2 };
        // W'' is flat at its minimum, so the bracket fixes t only to about
        // √ε; one Newton step on W''' = 0, i.e. on m s² - 2c s + m = 0 in
        // s = sin z, recovers the minimizer to full precision
        let (c, m) = (self.c(), self.params.m());
        let q = |s: f64| m * s * s - 2.0 * c * s + m;
        let s = (2.0 * t.atan()).sin();
        let slope = 2.0 * m * s - 2.0 * c;
        if slope != 0.0 {
            let polished = s - q(s) / slope;
            if polished.abs() < 1.0 && q(polished).abs() < q(s).abs() {
                t = (0.5 * polished.asin()).tan();
            }
        }
        Ok((2.0 * t.atan(), f(t)))
    }
}

pub fn w_prime(p: &KineticParams, z: f64) -> Result<f64> {
    TrigPotential::new(*p).w_prime(z)
}

pub fn w_second(p: &KineticParams, z: f64) -> Result<f64> {
    TrigPotential::new(*p).w_second(z)
}

pub fn minimize_w_second(p: &KineticParams) -> Result<(f64, f64)> {
    TrigPotential::new(*p).minimize()
}

/// Root in `[-1, 1]` of `m s² + (λ-2) s + m = 0`, the sine of the minimizer.
pub fn stationary_sine(p: &KineticParams) -> f64 {
    let (c, m) = (1.0 - 0.5 * p.lambda(), p.m());
    if m == 0.0 {
        return 0.0;
    }
    // m/(c + √(c²-m²)) is the small root without cancellation
    m / (c + (c * c - m * m).max(0.0).sqrt())
}

/// `g(z) = v(sin z) cos z`.
pub fn g_density(p: &KineticParams, z: f64) -> Result<f64> {
    check_angle(z)?;
    let eq = BetaEquilibrium::new(*p)?;
    Ok(g_from(&eq, z))
}

fn g_from(eq: &BetaEquilibrium, z: f64) -> f64 {
    let (below, above) = sine_distances(z);
    (eq.ln_value_from_distances(below, above) + z.cos().ln()).exp()
}

/// The same density from the closed form
/// `C (cos z)^{2/λ-1} ((1 + tan(z/2))/(1 - tan(z/2)))^{2m/λ}`.
pub fn g_density_explicit(p: &KineticParams, z: f64) -> Result<f64> {
    check_angle(z)?;
    let eq = BetaEquilibrium::new(*p)?;
    let (lambda, m) = (p.lambda(), p.m());
    let tau = (0.5 * z).tan();
    let ln_g = eq.log_norm_constant()
        + (2.0 / lambda - 1.0) * z.cos().ln()
        + (2.0 * m / lambda) * (tau.ln_1p() - (-tau).ln_1p());
    Ok(ln_g.exp())
}

/// Which end of `(-π/2, π/2)` an asymptotic statement refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// Exponent `e` in `g(z) ~ R (π/2 ∓ z)^e`: `2/λ - 1 ∓ 2m/λ`.
pub fn boundary_exponent(p: &KineticParams, side: Side) -> f64 {
    let base = 2.0 / p.lambda() - 1.0;
    let tilt = 2.0 * p.m() / p.lambda();
    match side {
        Side::Upper => base - tilt,
        Side::Lower => base + tilt,
    }
}

/// Least-squares slope of `ln g` against `ln u`, `u` the distance to the
/// boundary, over `points` log-spaced values of `u` in `[u_min, u_max]`.
pub fn fit_boundary_exponent(p: &KineticParams, side: Side, u_min: f64, u_max: f64, points: usize) -> Result<f64> {
    if !(0.0 < u_min && u_min < u_max && u_max < FRAC_PI_2) || points < 2 {
        return Err(Error::DegenerateWindow(format!(
            "need 0 < u_min < u_max < π/2 and two points, got [{u_min}, {u_max}] with {points}"
        )));
    }
    let eq = BetaEquilibrium::new(*p)?;
    let (lo, hi) = (u_min.ln(), u_max.ln());
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for k in 0..points {
        let ln_u = lo + (hi - lo) * k as f64 / (points - 1) as f64;
        let u = ln_u.exp();
        let z = match side {
            Side::Upper => FRAC_PI_2 - u,
            Side::Lower => u - FRAC_PI_2,
        };
        let (below, above) = sine_distances(z);
        xs.push(ln_u);
        ys.push(eq.ln_value_from_distances(below, above) + z.cos().ln());
    }
    let n = points as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Cell-centered samples on a uniform grid of `(-π/2, π/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularDensity {
    dz: f64,
    values: Vec<f64>,
}

impl AngularDensity {
    pub fn cell_width(&self) -> f64 {
        self.dz
    }

    pub fn center(&self, j: usize) -> f64 {
        -FRAC_PI_2 + (j as f64 + 0.5) * self.dz
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.values.len()).map(|j| self.center(j)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dz
    }
}

/// `g(z) = f(sin z) cos z` on `n_z` cells.
///
/// Both densities are cell averages. The cell masses of `g` are differences
/// of the monotone cubic interpolant of the cumulative distribution of `f`
/// at `sin z_{j±1/2}`, so the Jacobian factor is carried exactly and the
/// total mass is preserved.
pub fn pushforward_density(f: &DensityField, n_z: usize) -> Result<AngularDensity> {
    if n_z < Grid::MIN_CELLS {
        return Err(Error::GridSize(n_z));
    }
    require_positive(f.values())?;
    let grid = f.grid();
    let edges: Vec<f64> = (0..=grid.n_cells()).map(|i| -1.0 + i as f64 * grid.cell_width()).collect();
    let cdf = cumulative(&edges, f.values());
    let dz = PI / n_z as f64;
    let to: Vec<f64> = (0..=n_z).map(|j| (-FRAC_PI_2 + j as f64 * dz).sin()).collect();
    let values = remap_masses(&cdf, &to).into_iter().map(|m| m / dz).collect();
    Ok(AngularDensity { dz, values })
}

/// Inverse of [`pushforward_density`]: `f(y) = g(arcsin y)/√(1-y²)` on `grid`.
pub fn pullback_density(g: &AngularDensity, grid: &Grid) -> Result<DensityField> {
    require_positive(g.values())?;
    let n_z = g.values.len();
    let edges: Vec<f64> = (0..=n_z).map(|j| -FRAC_PI_2 + j as f64 * g.dz).collect();
    let cdf = cumulative(&edges, g.values());
    let to: Vec<f64> = (0..=grid.n_cells())
        .map(|i| (-1.0 + i as f64 * grid.cell_width()).clamp(-1.0, 1.0).asin())
        .collect();
    let dy = grid.cell_width();
    let values = remap_masses(&cdf, &to).into_iter().map(|m| m / dy).collect();
    DensityField::new(*grid, values)
}

fn require_positive(values: &[f64]) -> Result<()> {
    for (index, &value) in values.iter().enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonPositive { index, value });
        }
    }
    Ok(())
}
