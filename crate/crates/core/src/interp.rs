//! Monotone piecewise-cubic Hermite interpolation (Fritsch–Carlson / PCHIP).

/// Interpolant through `(xs[i], ys[i])`, `xs` strictly increasing.
#[derive(Debug, Clone)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 2, "need at least two knots");
        assert!(xs.windows(2).all(|w| w[1] > w[0]), "knots must increase");
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes[0] = delta[0];
            slopes[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                if delta[k - 1] * delta[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    slopes[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
                }
            }
            slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Pchip { xs, ys, slopes }
    }

    /// Hermite cubic through increasing data with the given knot slopes,
    /// clipped to `[0, 3 min(δ_{k-1}, δ_k)]` (Hyman's filter) so the result
    /// stays monotone.
    pub fn increasing_with_slopes(xs: Vec<f64>, ys: Vec<f64>, mut slopes: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert_eq!(xs.len(), slopes.len());
        assert!(xs.len() >= 2, "need at least two knots");
        let n = xs.len();
        let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k])).collect();
        assert!(delta.iter().all(|d| *d >= 0.0), "data must be nondecreasing");
        for k in 0..n {
            let left = if k > 0 { delta[k - 1] } else { delta[0] };
            let right = if k < n - 1 { delta[k] } else { delta[n - 2] };
            slopes[k] = slopes[k].clamp(0.0, 3.0 * left.min(right));
        }
        Pchip { xs, ys, slopes }
    }

    /// Value at `x`; outside the knots the end cubic is continued.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let k = match self.xs.partition_point(|&xk| xk <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        };
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

/// Monotone cubic interpolant of the cumulative integral of cell averages
/// `f` on the uniform partition `edges`.
///
/// Knot slopes are the fourth-order interface values of the underlying
/// density; differences of the interpolant give cell masses on any other
/// partition, with the total mass kept exactly.
pub fn cumulative(edges: &[f64], f: &[f64]) -> Pchip {
    let n = f.len();
    assert_eq!(edges.len(), n + 1);
    assert!(n >= 4, "need at least four cells");
    let h = (edges[n] - edges[0]) / n as f64;
    let mut cdf = Vec::with_capacity(n + 1);
    cdf.push(0.0);
    for v in f {
        cdf.push(cdf[cdf.len() - 1] + v * h);
    }
    let mut d = vec![0.0; n + 1];
    d[0] = (25.0 * f[0] - 23.0 * f[1] + 13.0 * f[2] - 3.0 * f[3]) / 12.0;
    d[1] = (3.0 * f[0] + 13.0 * f[1] - 5.0 * f[2] + f[3]) / 12.0;
    for k in 2..n - 1 {
        d[k] = (-f[k - 2] + 7.0 * f[k - 1] + 7.0 * f[k] - f[k + 1]) / 12.0;
    }
    d[n - 1] = (3.0 * f[n - 1] + 13.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4]) / 12.0;
    d[n] = (25.0 * f[n - 1] - 23.0 * f[n - 2] + 13.0 * f[n - 3] - 3.0 * f[n - 4]) / 12.0;
    Pchip::increasing_with_slopes(edges.to_vec(), cdf, d)
}

/// Cell masses of the density behind [`cumulative`] on the partition `to`.
pub fn remap_masses(cdf: &Pchip, to: &[f64]) -> Vec<f64> {
    to.windows(2).map(|w| cdf.eval(w[1]) - cdf.eval(w[0])).collect()
}

// three-point end derivative, limited to keep the end interval monotone
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knots() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let p = Pchip::new(xs.clone(), ys.clone());
        for (x, y) in xs.iter().zip(&ys) {
            assert!((p.eval(*x) - y).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_for_lines() {
        let xs = vec![0.0, 0.5, 1.5, 2.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let p = Pchip::new(xs, ys);
        for x in [-1.0, 0.2, 1.0, 3.3, 5.0] {
            assert!((p.eval(x) - (3.0 - 2.0 * x)).abs() < 1e-13);
        }
    }

    #[test]
    fn preserves_monotonicity() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = vec![0.0, 0.0, 0.1, 5.0, 5.0, 5.1];
        let p = Pchip::new(xs, ys);
        let mut prev = p.eval(0.0);
        for i in 1..=500 {
            let v = p.eval(i as f64 * 0.01);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn cumulative_remap() {
        // cubic density: the fourth-order slopes are exact
        let n = 20;
        let edges: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let prim = |x: f64| x * x * x * x / 4.0 + x / 2.0;
        let f: Vec<f64> = edges.windows(2).map(|w| (prim(w[1]) - prim(w[0])) * n as f64).collect();
        let cdf = cumulative(&edges, &f);
        for x in [0.0, 0.13, 0.5, 0.77, 1.0] {
            assert!((cdf.eval(x) - prim(x)).abs() < 1e-5, "{x}");
        }
        let other: Vec<f64> = (0..=7).map(|i| (i as f64 / 7.0).powi(2)).collect();
        let masses = remap_masses(&cdf, &other);
        assert!((masses.iter().sum::<f64>() - prim(1.0)).abs() < 1e-15);
        assert!(masses.iter().all(|m| *m > 0.0));
    }

    #[test]
    fn hyman_filter_keeps_monotone() {
        let xs = vec![0.0, 1.0, 2.0, 3.0];
        let ys = vec![0.0, 0.01, 0.02, 5.0];
        let p = Pchip::increasing_with_slopes(xs, ys, vec![10.0, -3.0, 40.0, 1.0]);
        let mut prev = p.eval(0.0);
        for i in 1..=300 {
            let v = p.eval(i as f64 * 0.01);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn converges_on_smooth_data() {
        let err = |n: usize| {
            let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
            let ys: Vec<f64> = xs.iter().map(|x| (3.0 * x).exp()).collect();
            let p = Pchip::new(xs, ys);
            (0..1000)
                .map(|i| {
                    let x = (i as f64 + 0.5) / 1000.0;
                    (p.eval(x) - (3.0 * x).exp()).abs()
                })
                .fold(0.0, f64::max)
        };
        assert!(err(100) < err(50) / 3.5);
    }
}
