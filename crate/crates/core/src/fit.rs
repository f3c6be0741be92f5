//! Exponential decay rates by least squares on `log value`.

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
    pub window: (f64, f64),
}

/// Fits `ln value = intercept + slope · t` over rows with `t0 ≤ t ≤ t1`.
pub fn fit_decay_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let (t0, t1) = window;
    if !(t0 < t1) {
        return Err(Error::DegenerateWindow(format!("empty window [{t0}, {t1}]")));
    }
    let mut ts = Vec::new();
    let mut ls = Vec::new();
    for (index, &(t, v)) in series.iter().enumerate() {
        if t < t0 || t > t1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::NonPositive { index, value: v });
        }
        ts.push(t);
        ls.push(v.ln());
    }
    if ts.len() < MIN_SAMPLES {
        return Err(Error::DegenerateWindow(format!(
            "{} samples in [{t0}, {t1}], need at least {MIN_SAMPLES}",
            ts.len()
        )));
    }
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let ml = ls.iter().sum::<f64>() / n;
    let mut stt = 0.0;
    let mut stl = 0.0;
    let mut sll = 0.0;
    for (t, l) in ts.iter().zip(&ls) {
        stt += (t - mt) * (t - mt);
        stl += (t - mt) * (l - ml);
        sll += (l - ml) * (l - ml);
    }
    if stt == 0.0 {
        return Err(Error::DegenerateWindow("all samples share one time".into()));
    }
    let slope = stl / stt;
    let intercept = ml - slope * mt;
    let residual: f64 = ts
        .iter()
        .zip(&ls)
        .map(|(t, l)| {
            let r = l - intercept - slope * t;
            r * r
        })
        .sum();
    let r_squared = if sll == 0.0 { 1.0 } else { 1.0 - residual / sll };
    Ok(DecayFit {
        slope,
        intercept,
        r_squared,
        samples: ts.len(),
        window,
    })
}

/// Window covering the second half of `[t_start, t_end]`.
pub fn second_half(t_start: f64, t_end: f64) -> (f64, f64) {
    (0.5 * (t_start + t_end), t_end)
}
