//! Double-exponential (tanh-sinh) quadrature.
//!
//! Handles integrable endpoint singularities such as `(1-y)^{a-1}` with
//! `a > 0`. The integrand receives the abscissa together with its distances to
//! both endpoints, computed without cancellation, so factors like `ln(1-y)`
//! stay accurate right up to the boundary.

use std::f64::consts::FRAC_PI_2;

const T_MAX: f64 = 6.5;
const MAX_LEVELS: usize = 12;

/// Integrates `f(x, x - a, b - x)` over `(a, b)` to relative tolerance `tol`.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64, f64, f64) -> f64,
{
    let half = 0.5 * (b - a);

    let node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cosh_u = u.cosh();
        let weight = half * FRAC_PI_2 * t.cosh() / (cosh_u * cosh_u);
        if weight == 0.0 || !weight.is_finite() {
            return 0.0;
        }
        let to_right = half * 2.0 / (1.0 + (2.0 * u).exp());
        let to_left = half * 2.0 / (1.0 + (-2.0 * u).exp());
        if to_right <= 0.0 || to_left <= 0.0 {
            return 0.0;
        }
        let x = if u >= 0.0 { b - to_right } else { a + to_left };
        let value = f(x, to_left, to_right);
        if value.is_finite() {
            weight * value
        } else {
            0.0
        }
    };

    let mut h = 1.0;
    let mut sum = node(0.0);
    let mut k = 1;
    while k as f64 * h <= T_MAX {
        let t = k as f64 * h;
        sum += node(t) + node(-t);
        k += 1;
    }
    let mut estimate = sum * h;

    for _ in 0..MAX_LEVELS {
        h *= 0.5;
        // new nodes are the odd multiples of the halved step
        let mut k = 1;
        while k as f64 * h <= T_MAX {
            let t = k as f64 * h;
            sum += node(t) + node(-t);
            k += 2;
        }
        let refined = sum * h;
        let converged = (refined - estimate).abs() <= tol * refined.abs().max(f64::MIN_POSITIVE);
        estimate = refined;
        if converged {
            break;
        }
    }
    estimate
}

/// Plain `∫_a^b f(x) dx` via [`tanh_sinh`].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    tanh_sinh(|x, _, _| f(x), a, b, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial() {
        let v = integrate(|x| 3.0 * x * x, -1.0, 1.0, 1e-14);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn arcsine_singularity() {
        // ∫ (1-y)^{-1/2} (1+y)^{-1/2} dy = π
        let v = tanh_sinh(|_, l, r| 1.0 / (l * r).sqrt(), -1.0, 1.0, 1e-14);
        assert!((v - PI).abs() < 1e-12, "{v}");
    }

    #[test]
    fn strong_endpoint_singularity() {
        // ∫_0^1 x^{-0.9} dx = 10
        let v = tanh_sinh(|_, l, _| l.powf(-0.9), 0.0, 1.0, 1e-13);
        assert!((v - 10.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn logarithmic_singularity() {
        // ∫_{-1}^{1} ln(1-y²) dy = 4 ln 2 - 4
        let v = tanh_sinh(|_, l, r| (l * r).ln(), -1.0, 1.0, 1e-14);
        assert!((v - (4.0 * 2f64.ln() - 4.0)).abs() < 1e-12, "{v}");
    }
}
