//! Cell-centered discretization of the opinion interval (-1, 1).

use crate::error::{Error, Result};

/// Uniform cell-centered grid on (-1, 1).
///
/// Centers `y_i = -1 + (i + 1/2) Δy` never touch the endpoints, so Beta
/// densities that blow up at ±1 are never evaluated there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    dy: f64,
}

impl Grid {
    pub const MIN_CELLS: usize = 4;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_CELLS {
            return Err(Error::GridSize(n));
        }
        Ok(Grid {
            n,
            dy: 2.0 / n as f64,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n
    }

    pub fn cell_width(&self) -> f64 {
        self.dy
    }

    pub fn center(&self, i: usize) -> f64 {
        -1.0 + (i as f64 + 0.5) * self.dy
    }

    /// Position of the interface between cells `i` and `i + 1`.
    pub fn interface(&self, i: usize) -> f64 {
        -1.0 + (i as f64 + 1.0) * self.dy
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }

    /// Index of the cell containing `y`; points on the boundary go to the end cells.
    pub fn cell_of(&self, y: f64) -> usize {
        let idx = ((y + 1.0) / self.dy).floor();
        if idx < 0.0 {
            0
        } else {
            (idx as usize).min(self.n - 1)
        }
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch(self.n, other.n));
        }
        Ok(())
    }
}

/// Nonnegative density values at the cell centers of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: Grid,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::GridMismatch(grid.n_cells(), values.len()));
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidDensity { index, value });
        }
        Ok(DensityField { grid, values })
    }

    /// Samples `f` at the cell centers and rescales to unit mass.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.centers().into_iter().map(f).collect();
        let mut field = DensityField::new(grid, values)?;
        field.normalize()?;
        Ok(field)
    }

    pub fn uniform(grid: Grid) -> Self {
        DensityField {
            grid,
            values: vec![0.5; grid.n_cells()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `Σ v_i Δy`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_width()
    }

    /// `Σ y_i v_i Δy`.
    pub fn mean(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.grid.center(i) * v)
            .sum::<f64>()
            * self.grid.cell_width()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.mass() - 1.0).abs() <= tol
    }

    pub fn normalize(&mut self) -> Result<()> {
        let mass = self.mass();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::ZeroFunction);
        }
        self.values.iter_mut().for_each(|v| *v /= mass);
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> DensityField {
        DensityField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Cell averages over blocks of `factor` consecutive cells.
    pub fn coarsen(&self, factor: usize) -> Result<DensityField> {
        if factor == 0 || self.grid.n_cells() % factor != 0 {
            return Err(Error::Validation {
                field: "coarsen factor".into(),
                msg: format!("{factor} does not divide {} cells", self.grid.n_cells()),
            });
        }
        let grid = Grid::new(self.grid.n_cells() / factor)?;
        let values = self
            .values
            .chunks(factor)
            .map(|c| c.iter().sum::<f64>() / factor as f64)
            .collect();
        DensityField::new(grid, values)
    }

    pub(crate) fn ensure_same_grid(&self, other: &DensityField) -> Result<()> {
        self.grid.ensure_same(&other.grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_cell_grid() {
        let g = Grid::new(4).unwrap();
        assert_eq!(g.centers(), vec![-0.75, -0.25, 0.25, 0.75]);
        assert_eq!(g.cell_width(), 0.5);
    }

    #[test]
    fn two_hundred_cells() {
        let g = Grid::new(200).unwrap();
        assert!((g.cell_width() - 0.01).abs() < 1e-15);
        assert!((g.center(0) + 0.995).abs() < 1e-15);
        let c = g.centers();
        assert!(c.iter().all(|y| y.abs() < 1.0));
        for w in c.windows(2) {
            assert!((w[1] - w[0] - g.cell_width()).abs() < 1e-15);
        }
    }

    #[test]
    fn too_few_cells() {
        assert!(matches!(Grid::new(3), Err(Error::GridSize(3))));
    }

    #[test]
    fn negative_density_rejected() {
        let g = Grid::new(4).unwrap();
        assert!(DensityField::new(g, vec![0.5, -0.1, 0.5, 0.5]).is_err());
        assert!(DensityField::new(g, vec![0.5, f64::NAN, 0.5, 0.5]).is_err());
        assert!(DensityField::new(g, vec![0.5; 3]).is_err());
    }

    #[test]
    fn cell_lookup_clamps_endpoints() {
        let g = Grid::new(4).unwrap();
        assert_eq!(g.cell_of(-1.0), 0);
        assert_eq!(g.cell_of(1.0), 3);
        assert_eq!(g.cell_of(0.0), 2);
        assert_eq!(g.cell_of(-0.2), 1);
    }

    #[test]
    fn coarsen_preserves_mass() {
        let g = Grid::new(16).unwrap();
        let f = DensityField::from_fn(g, |y| 1.0 + y * y).unwrap();
        let c = f.coarsen(4).unwrap();
        assert_eq!(c.grid().n_cells(), 4);
        assert!((c.mass() - 1.0).abs() < 1e-14);
    }
}
