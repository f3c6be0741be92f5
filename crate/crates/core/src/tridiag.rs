//! Tridiagonal systems.

use crate::error::{Error, Result};

/// Tridiagonal matrix stored by diagonals.
///
/// Row `i` reads `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1]`;
/// `lower[0]` and `upper[n-1]` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Thomas algorithm. No pivoting: intended for diagonally dominant
    /// M-matrices, where it is stable.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        let mut c_prime = vec![0.0; n];
        let mut x = vec![0.0; n];

        let mut denom = self.diag[0];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::LinearSolve { row: 0 });
        }
        c_prime[0] = self.upper[0] / denom;
        x[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.lower[i] * c_prime[i - 1];
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::LinearSolve { row: i });
            }
            c_prime[i] = if i + 1 < n { self.upper[i] / denom } else { 0.0 };
            x[i] = (rhs[i] - self.lower[i] * x[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c_prime[i] * x[i + 1];
        }
        Ok(x)
    }
}
