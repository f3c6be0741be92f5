//! Kinetic parameters `(λ, m)`, regime classification, the Beta steady state
//! and the closed-form entropy-method constants.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid};

/// The pair `(λ, m)`: `λ = σ²/γ > 0` and the conserved mean opinion `m ∈ (-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticParams {
    lambda: f64,
    m: f64,
}

impl KineticParams {
    pub fn new(lambda: f64, m: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParams {
                field: "lambda",
                reason: format!("must be positive and finite, got {lambda}"),
            });
        }
        if !(m > -1.0 && m < 1.0) {
            return Err(Error::InvalidParams {
                field: "m",
                reason: format!("must lie in (-1, 1), got {m}"),
            });
        }
        Ok(KineticParams { lambda, m })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// `1 - λ/2`.
    pub(crate) fn convexity_margin(&self) -> f64 {
        1.0 - 0.5 * self.lambda
    }

    pub fn regime(&self) -> ParamRegime {
        classify_params(self)
    }

    /// Whether the weighted log-Sobolev inequality applies.
    pub fn admits_log_sobolev(&self) -> bool {
        self.regime() >= ParamRegime::L2Equilibrium
    }

    pub(crate) fn require_log_sobolev(&self) -> Result<()> {
        if self.admits_log_sobolev() {
            Ok(())
        } else {
            Err(Error::Regime {
                lambda: self.lambda,
                m: self.m,
            })
        }
    }
}

/// Parameter regimes, ordered from least to most restrictive.
///
/// `VanishingBoundary` (`1-λ > |m|`) implies `L2Equilibrium`
/// (`1-λ/2 ≥ |m|`, strict at `m = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ParamRegime {
    General,
    L2Equilibrium,
    VanishingBoundary,
}

impl std::fmt::Display for ParamRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ParamRegime::General => "general",
            ParamRegime::L2Equilibrium => "l2-equilibrium",
            ParamRegime::VanishingBoundary => "vanishing-boundary",
        };
        f.write_str(s)
    }
}

/// Most restrictive regime whose condition holds.
pub fn classify_params(p: &KineticParams) -> ParamRegime {
    let margin = p.convexity_margin();
    let abs_m = p.m.abs();
    if 1.0 - p.lambda > abs_m {
        return ParamRegime::VanishingBoundary;
    }
    #[allow(clippy::float_cmp)]
    let l2 = if p.m == 0.0 {
        margin > 0.0
    } else {
        margin >= abs_m
    };
    if l2 {
        ParamRegime::L2Equilibrium
    } else {
        ParamRegime::General
    }
}

fn beta_exponents(p: &KineticParams) -> (f64, f64) {
    ((1.0 - p.m) / p.lambda, (1.0 + p.m) / p.lambda)
}

/// `log C_{m,λ}` with `C = 1 / (2^{a+b-1} B(a, b))`, `a = (1-m)/λ`, `b = (1+m)/λ`.
pub fn log_normalization(p: &KineticParams) -> Result<f64> {
    let (a, b) = beta_exponents(p);
    if !a.is_finite() || !b.is_finite() || !(a + b).is_finite() {
        return Err(Error::Overflow(format!(
            "Beta exponents a={a}, b={b} out of range"
        )));
    }
    let ln_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    let log_c = -((a + b - 1.0) * std::f64::consts::LN_2 + ln_beta);
    if !log_c.is_finite() {
        return Err(Error::Overflow(format!(
            "log-gamma overflow for exponents a={a}, b={b}"
        )));
    }
    Ok(log_c)
}

/// `K_{m,λ} = (1 - λ/2 + √((1-λ/2)² - m²))⁻¹`.
pub fn log_sobolev_constant(p: &KineticParams) -> Result<f64> {
    p.require_log_sobolev()?;
    let c = p.convexity_margin();
    Ok(1.0 / (c + discriminant_root(c, p.m)))
}

/// `ρ_{m,λ}`: the uniform convexity bound of the transformed potential.
pub fn bakry_emery_rho(p: &KineticParams) -> Result<f64> {
    p.require_log_sobolev()?;
    let c = p.convexity_margin();
    #[allow(clippy::float_cmp)]
    if p.m == 0.0 {
        return Ok(c);
    }
    Ok(0.5 * (c + discriminant_root(c, p.m)))
}

// √(c² - m²), clamped at the equality case c = |m|
fn discriminant_root(c: f64, m: f64) -> f64 {
    ((c - m.abs()) * (c + m.abs())).max(0.0).sqrt()
}

/// Steady state `v_{m,λ}(y) = C (1-y)^{a-1} (1+y)^{b-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaEquilibrium {
    params: KineticParams,
    exponent_minus: f64,
    exponent_plus: f64,
    log_norm_constant: f64,
}

impl BetaEquilibrium {
    pub fn new(params: KineticParams) -> Result<Self> {
        let (a, b) = beta_exponents(&params);
        Ok(BetaEquilibrium {
            params,
            exponent_minus: a,
            exponent_plus: b,
            log_norm_constant: log_normalization(&params)?,
        })
    }

    pub fn params(&self) -> &KineticParams {
        &self.params
    }

    /// `a = (1-m)/λ`, the power of `(1-y)` plus one.
    pub fn exponent_minus(&self) -> f64 {
        self.exponent_minus
    }

    /// `b = (1+m)/λ`, the power of `(1+y)` plus one.
    pub fn exponent_plus(&self) -> f64 {
        self.exponent_plus
    }

    pub fn log_norm_constant(&self) -> f64 {
        self.log_norm_constant
    }

    /// `ln v(y)` given the distances `1 - y` and `1 + y` directly.
    pub fn ln_value_from_distances(&self, one_minus_y: f64, one_plus_y: f64) -> f64 {
        let shape = (self.exponent_minus - 1.0) * one_minus_y.ln()
            + (self.exponent_plus - 1.0) * one_plus_y.ln();
        self.log_norm_constant + shape
    }

    pub fn ln_value(&self, y: f64) -> Result<f64> {
        if !(y.abs() < 1.0) {
            return Err(Error::Domain(format!(
                "equilibrium evaluated at y={y}, outside (-1, 1)"
            )));
        }
        Ok(self.ln_value_from_distances(1.0 - y, 1.0 + y))
    }

    pub fn value(&self, y: f64) -> Result<f64> {
        Ok(self.ln_value(y)?.exp())
    }

    /// Pointwise values at the cell centers, without renormalization.
    pub fn sample(&self, grid: &Grid) -> DensityField {
        let values = grid
            .centers()
            .into_iter()
            .map(|y| self.ln_value_from_distances(1.0 - y, 1.0 + y).exp())
            .collect();
        DensityField::new(*grid, values).expect("Beta density is positive and finite inside (-1, 1)")
    }

    /// Center samples rescaled to unit discrete mass.
    pub fn sample_normalized(&self, grid: &Grid) -> DensityField {
        let mut field = self.sample(grid);
        field
            .normalize()
            .expect("sampled Beta density has positive mass");
        field
    }
}

/// Pointwise `v_{m,λ}(y)` for `|y| < 1`.
pub fn equilibrium_value(eq: &BetaEquilibrium, y: f64) -> Result<f64> {
    eq.value(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, tanh_sinh};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params(lambda: f64, m: f64) -> KineticParams {
        KineticParams::new(lambda, m).unwrap()
    }

    // independent route: ln ∫ (1-y)^{a-1} (1+y)^{b-1} dy by quadrature
    fn quadrature_log_c(p: &KineticParams) -> f64 {
        let (a, b) = ((1.0 - p.m()) / p.lambda(), (1.0 + p.m()) / p.lambda());
        let mass = tanh_sinh(
            |_, l, r| ((a - 1.0) * r.ln() + (b - 1.0) * l.ln()).exp(),
            -1.0,
            1.0,
            1e-14,
        );
        -mass.ln()
    }

    #[test]
    fn rejects_invalid() {
        assert!(KineticParams::new(0.0, 0.0).is_err());
        assert!(KineticParams::new(-1.0, 0.0).is_err());
        assert!(KineticParams::new(1.0, 1.0).is_err());
        assert!(KineticParams::new(1.0, -1.0).is_err());
        assert!(KineticParams::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_params(&params(1.0, 0.0)), ParamRegime::L2Equilibrium);
        assert_eq!(
            classify_params(&params(0.5, 0.2)),
            ParamRegime::VanishingBoundary
        );
        assert_eq!(classify_params(&params(1.9, 0.5)), ParamRegime::General);
        // m = 0 needs strict inequality
        assert_eq!(classify_params(&params(2.0, 0.0)), ParamRegime::General);
        // m != 0 admits equality
        assert_eq!(
            classify_params(&params(1.0, 0.5)),
            ParamRegime::L2Equilibrium
        );
    }

    #[test]
    fn normalization_examples() {
        let uniform = log_normalization(&params(1.0, 0.0)).unwrap();
        assert!((uniform - 0.5f64.ln()).abs() < 1e-14);
        let arcsine = log_normalization(&params(2.0, 0.0)).unwrap();
        assert!((arcsine + PI.ln()).abs() < 1e-14);
        // frozen from a 30-digit quadrature
        let frozen = [
            (0.5, 0.5, -0.980_829_253_011_726_2),
            (0.3, -0.4, -0.652_787_926_837_768_2),
            (1.7, 0.2, -1.086_602_827_686_835_1),
            (4.0, 0.1, -1.667_905_273_353_190_5),
        ];
        for (lambda, m, expected) in frozen {
            let got = log_normalization(&params(lambda, m)).unwrap();
            assert!((got - expected).abs() < 1e-10 * expected.abs(), "{lambda} {m}: {got}");
        }
    }

    #[test]
    fn normalization_matches_quadrature() {
        for (lambda, m) in [(2.0, 0.0), (0.5, 0.5), (0.3, -0.4), (1.7, 0.2), (4.0, 0.1)] {
            let p = params(lambda, m);
            let exact = log_normalization(&p).unwrap();
            let quad = quadrature_log_c(&p);
            assert!((exact - quad).abs() < 1e-10 * exact.abs().max(1.0), "{lambda} {m}");
        }
    }

    #[test]
    fn normalization_overflow() {
        let p = params(1e-307, 0.0);
        assert!(matches!(log_normalization(&p), Err(Error::Overflow(_))));
    }

    #[test]
    fn equilibrium_examples() {
        let eq = BetaEquilibrium::new(params(1.0, 0.0)).unwrap();
        assert!((equilibrium_value(&eq, 0.3).unwrap() - 0.5).abs() < 1e-15);
        let eq = BetaEquilibrium::new(params(2.0, 0.0)).unwrap();
        assert!((equilibrium_value(&eq, 0.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!(matches!(equilibrium_value(&eq, 1.0), Err(Error::Domain(_))));
        assert!(equilibrium_value(&eq, -1.0).is_err());
    }

    #[test]
    fn constant_examples() {
        assert!((log_sobolev_constant(&params(1.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!((log_sobolev_constant(&params(0.5, 0.0)).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            log_sobolev_constant(&params(1.9, 0.5)),
            Err(Error::Regime { .. })
        ));
        assert!((bakry_emery_rho(&params(1.0, 0.0)).unwrap() - 0.5).abs() < 1e-15);
        let rho = bakry_emery_rho(&params(0.5, 0.25)).unwrap();
        assert!((rho - 0.728_553_390_593_273_8).abs() < 1e-15);
        assert!(bakry_emery_rho(&params(1.9, 0.5)).is_err());
    }

    #[test]
    fn equality_case_admitted() {
        // 1 - λ/2 = |m|: the root vanishes and K = (1-λ/2)^{-1}
        let p = params(1.0, 0.5);
        assert!((log_sobolev_constant(&p).unwrap() - 2.0).abs() < 1e-15);
    }

    fn admissible() -> impl Strategy<Value = KineticParams> {
        (0.01f64..1.99, -1.0f64..=1.0).prop_map(|(lambda, frac)| {
            let c = 1.0 - lambda / 2.0;
            KineticParams::new(lambda, frac * c * 0.999_999).unwrap()
        })
    }

    proptest! {
        #[test]
        fn k_rho_identity(p in admissible()) {
            let k = log_sobolev_constant(&p).unwrap();
            let rho = bakry_emery_rho(&p).unwrap();
            prop_assert!((2.0 * k * rho - 1.0).abs() < 1e-14);
            prop_assert!(rho > 0.0 && rho <= 1.0);
        }

        #[test]
        fn rho_decreasing_in_lambda(l1 in 0.01f64..1.9, dl in 0.001f64..0.09, frac in -0.9f64..0.9) {
            let l2 = l1 + dl;
            let m = frac * (1.0 - l2 / 2.0);
            let r1 = bakry_emery_rho(&KineticParams::new(l1, m).unwrap()).unwrap();
            let r2 = bakry_emery_rho(&KineticParams::new(l2, m).unwrap()).unwrap();
            prop_assert!(r2 < r1);
        }

        #[test]
        fn vanishing_implies_l2(lambda in 0.01f64..3.0, m in -0.99f64..0.99) {
            let p = KineticParams::new(lambda, m).unwrap();
            if 1.0 - lambda > m.abs() {
                prop_assert!(p.admits_log_sobolev());
            }
        }

        #[test]
        fn reflection_symmetry(lambda in 0.05f64..4.0, m in -0.95f64..0.95, y in -0.999f64..0.999) {
            let eq = BetaEquilibrium::new(KineticParams::new(lambda, m).unwrap()).unwrap();
            let mirror = BetaEquilibrium::new(KineticParams::new(lambda, -m).unwrap()).unwrap();
            prop_assert_eq!(eq.ln_value(y).unwrap(), mirror.ln_value(-y).unwrap());
        }
    }

    #[test]
    fn unit_mass_by_quadrature() {
        // each half in s = (1 ± y)^b, which absorbs the endpoint power
        for lambda in [0.1, 0.5, 1.0, 1.5, 2.5, 5.0] {
            for m in [-0.9, -0.3, 0.0, 0.4, 0.8] {
                let eq = BetaEquilibrium::new(params(lambda, m)).unwrap();
                let (a, b) = (eq.exponent_minus(), eq.exponent_plus());
                let half = |power: f64, other: f64| {
                    integrate(
                        |s| {
                            let x = (s.ln() / power).exp();
                            (eq.log_norm_constant() + (other - 1.0) * (2.0 - x).ln()).exp() / power
                        },
                        0.0,
                        1.0,
                        1e-13,
                    )
                };
                let mass = half(b, a) + half(a, b);
                assert!((mass - 1.0).abs() < 1e-8, "lambda={lambda} m={m}: {mass}");
            }
        }
    }
}
