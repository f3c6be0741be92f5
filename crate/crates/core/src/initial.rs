//! Initial data shared by the solver and the particle simulation.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid};

pub const DEFAULT_WIDTH: f64 = 0.15;

/// Two Gaussians centered at ±1/2, truncated to (-1, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bimodal {
    width: f64,
    plus_weight: f64,
}

impl Bimodal {
    /// Equal weights.
    pub fn new(width: f64) -> Result<Self> {
        Self::weighted(width, 0.5)
    }

    /// Weight `plus_weight` on the mode at +1/2.
    pub fn weighted(width: f64, plus_weight: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::Validation {
                field: "width".into(),
                msg: format!("must be positive, got {width}"),
            });
        }
        if !(0.0..=1.0).contains(&plus_weight) {
            return Err(Error::Validation {
                field: "plus_weight".into(),
                msg: format!("must lie in [0, 1], got {plus_weight}"),
            });
        }
        Ok(Bimodal { width, plus_weight })
    }

    /// Weights chosen so the untruncated mixture has mean `m`; needs `|m| ≤ 1/2`.
    pub fn with_mean(width: f64, m: f64) -> Result<Self> {
        if m.abs() > 0.5 {
            return Err(Error::Validation {
                field: "m".into(),
                msg: format!("a mixture at ±1/2 cannot have mean {m}"),
            });
        }
        Self::weighted(width, 0.5 + m)
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn plus_weight(&self) -> f64 {
        self.plus_weight
    }

    /// Unnormalized density.
    pub fn density(&self, y: f64) -> f64 {
        let s2 = 2.0 * self.width * self.width;
        self.plus_weight * (-(y - 0.5).powi(2) / s2).exp()
            + (1.0 - self.plus_weight) * (-(y + 0.5).powi(2) / s2).exp()
    }

    /// Center values, normalized to unit discrete mass.
    pub fn field(&self, grid: Grid) -> Result<DensityField> {
        DensityField::from_fn(grid, |y| self.density(y))
    }

    /// `n` independent draws; rejection enforces the truncation.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let plus = Normal::new(0.5, self.width).expect("width is positive");
        let minus = Normal::new(-0.5, self.width).expect("width is positive");
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let x = if rng.random::<f64>() < self.plus_weight {
                plus.sample(rng)
            } else {
                minus.sample(rng)
            };
            if x > -1.0 && x < 1.0 {
                out.push(x);
            }
        }
        out
    }
}
