//! Kinetic models of opinion formation on the interval (-1, 1).
//!
//! The crate covers three layers:
//!
//! - the Fokker–Planck equation
//!   `∂_t v = (λ/2) ∂²_y((1-y²) v) + ∂_y((y-m) v)` with no-flux boundaries,
//!   integrated by a Chang–Cooper finite-volume scheme ([`solver`]);
//! - the binary-interaction Boltzmann model it is the quasi-invariant limit of,
//!   simulated by Nanbu-style Monte Carlo sweeps ([`mc`]);
//! - an entropy-method verification layer: relative entropy, weighted Fisher
//!   information, the weighted logarithmic-Sobolev inequality with its explicit
//!   constant `K_{m,λ}` ([`functionals`], [`params`]) and the trigonometric
//!   change of variables behind the Bakry–Emery argument ([`transform`]).
//!
//! [`harness`] and the `opinion-fp` binary drive experiments and write CSV.

#![forbid(unsafe_code)]

pub mod config;
pub mod error;
pub mod fit;
pub mod functionals;
pub mod grid;
pub mod harness;
pub mod initial;
pub mod interp;
pub mod mc;
pub mod params;
pub mod quadrature;
pub mod solver;
pub mod transform;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::{DensityField, Grid};
pub use params::{BetaEquilibrium, KineticParams, ParamRegime};
