//! Monte Carlo simulation of the binary-interaction opinion model.
//!
//! Each agent interacts by `x' = x + γ(x* - x) + √(1-x²) η`. In the
//! quasi-invariant scaling `γ → εγ`, `σ² → εσ²` the particle density tends to
//! the Fokker–Planck solution with `λ = σ²/γ`; one sweep advances FP time by
//! `εγ`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionParams {
    gamma: f64,
    sigma2: f64,
    epsilon: f64,
}

impl InteractionParams {
    pub fn new(gamma: f64, sigma2: f64, epsilon: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParams {
                field: "gamma",
                reason: format!("must lie in (0, 1), got {gamma}"),
            });
        }
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidParams {
                field: "sigma2",
                reason: format!("must be finite and nonnegative, got {sigma2}"),
            });
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidParams {
                field: "epsilon",
                reason: format!("must lie in (0, 1], got {epsilon}"),
            });
        }
        Ok(InteractionParams {
            gamma,
            sigma2,
            epsilon,
        })
    }

    /// Parameters with `σ² = λγ`.
    pub fn for_lambda(lambda: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        Self::new(gamma, lambda * gamma, epsilon)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lambda(&self) -> f64 {
        self.sigma2 / self.gamma
    }

    pub fn scaled_gamma(&self) -> f64 {
        self.epsilon * self.gamma
    }

    pub fn scaled_sigma2(&self) -> f64 {
        self.epsilon * self.sigma2
    }

    /// Fokker–Planck time covered by one sweep.
    pub fn fp_time_per_sweep(&self) -> f64 {
        self.epsilon * self.gamma
    }

    /// Sweeps needed to reach FP time `t_fp`, rounded up.
    pub fn sweeps_for(&self, t_fp: f64) -> usize {
        let exact = t_fp / self.fp_time_per_sweep();
        let nearest = exact.round();
        if (exact - nearest).abs() <= 1e-9 * exact.max(1.0) {
            nearest as usize
        } else {
            exact.ceil() as usize
        }
    }
}

/// Opinions of `N` agents plus the random stream that drives them.
#[derive(Debug, Clone)]
pub struct Ensemble {
    opinions: Vec<f64>,
    seed: u64,
    time: f64,
    rng: ChaCha8Rng,
}

impl Ensemble {
    pub fn new(opinions: Vec<f64>, seed: u64) -> Result<Self> {
        for (index, &value) in opinions.iter().enumerate() {
            if !(-1.0..=1.0).contains(&value) {
                return Err(Error::OpinionRange { index, value });
            }
        }
        Ok(Ensemble {
            opinions,
            seed,
            time: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Builds the opinions from the ensemble's own stream, so one seed fixes
    /// both the initial sample and the dynamics.
    pub fn generate(n: usize, seed: u64, draw: impl FnOnce(usize, &mut ChaCha8Rng) -> Vec<f64>) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let opinions = draw(n, &mut rng);
        let mut e = Ensemble::new(opinions, seed)?;
        e.rng = rng;
        Ok(e)
    }

    pub fn opinions(&self) -> &[f64] {
        &self.opinions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Kinetic time, in sweeps.
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.opinions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opinions.is_empty()
    }

    /// One Nanbu sweep: random disjoint pairing, one interaction per pair.
    pub fn sweep(&mut self, p: &InteractionParams) -> Result<SweepStats> {
        let n = self.opinions.len();
        if n % 2 == 1 {
            return Err(Error::OddEnsemble(n));
        }
        self.opinions.shuffle(&mut self.rng);
        let gamma = p.scaled_gamma();
        let sigma2 = p.scaled_sigma2();
        let mut rejected = 0;
        for pair in self.opinions.chunks_exact_mut(2) {
            let eta = sample_noise(&mut self.rng, sigma2);
            let eta_star = sample_noise(&mut self.rng, sigma2);
            match binary_interact(pair[0], pair[1], gamma, eta, eta_star) {
                Interaction::Accepted(x, x_star) => {
                    pair[0] = x;
                    pair[1] = x_star;
                }
                Interaction::Reject => rejected += 1,
            }
        }
        self.time += 1.0;
        Ok(SweepStats {
            pairs: n / 2,
            rejected,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepStats {
    pub pairs: usize,
    pub rejected: usize,
}

impl SweepStats {
    pub fn rejection_fraction(&self) -> f64 {
        if self.pairs == 0 {
            0.0
        } else {
            self.rejected as f64 / self.pairs as f64
        }
    }

    fn absorb(&mut self, other: SweepStats) {
        self.pairs += other.pairs;
        self.rejected += other.rejected;
    }
}

/// Uniform draw on `[-√(3σ²), √(3σ²)]`: mean 0, variance `σ²`.
pub fn sample_noise<R: Rng + ?Sized>(rng: &mut R, sigma2_scaled: f64) -> f64 {
    let half = (3.0 * sigma2_scaled).sqrt();
    half * (2.0 * rng.random::<f64>() - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interaction {
    Accepted(f64, f64),
    /// One of the outcomes left [-1, 1]; both agents keep their opinions.
    Reject,
}

pub fn binary_interact(x: f64, x_star: f64, gamma_scaled: f64, eta: f64, eta_star: f64) -> Interaction {
    let x_new = x + gamma_scaled * (x_star - x) + (1.0 - x * x).max(0.0).sqrt() * eta;
    let x_star_new = x_star + gamma_scaled * (x - x_star) + (1.0 - x_star * x_star).max(0.0).sqrt() * eta_star;
    if x_new.abs() <= 1.0 && x_star_new.abs() <= 1.0 {
        Interaction::Accepted(x_new, x_star_new)
    } else {
        Interaction::Reject
    }
}

/// Consumes an ensemble and returns it after one sweep.
pub fn mc_step(mut e: Ensemble, p: &InteractionParams) -> Result<(Ensemble, SweepStats)> {
    let stats = e.sweep(p)?;
    Ok((e, stats))
}

/// Normalized cell histogram: counts / (N Δy).
pub fn histogram(e: &Ensemble, grid: &Grid) -> DensityField {
    let mut counts = vec![0.0; grid.n_cells()];
    for &x in e.opinions() {
        counts[grid.cell_of(x)] += 1.0;
    }
    let scale = 1.0 / (e.len() as f64 * grid.cell_width());
    let values = counts.into_iter().map(|c| c * scale).collect();
    DensityField::new(*grid, values).expect("counts are finite and nonnegative")
}

/// Sample mean and unbiased sample variance; the variance is `None` for a
/// single agent.
pub fn moments(e: &Ensemble) -> (f64, Option<f64>) {
    let xs = e.opinions();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, Some(ss / (n - 1.0)))
}

#[derive(Debug, Clone)]
pub struct McRun {
    pub ensemble: Ensemble,
    pub histogram: DensityField,
    pub sweeps: usize,
    pub stats: SweepStats,
}

/// Runs the sweeps covering FP time `t_fp` and returns the final histogram.
pub fn quasi_invariant_run(e0: Ensemble, p: &InteractionParams, t_fp: f64, grid: &Grid) -> Result<McRun> {
    if !(t_fp >= 0.0) {
        return Err(Error::Validation {
            field: "t_fp".into(),
            msg: format!("must be nonnegative, got {t_fp}"),
        });
    }
    let sweeps = p.sweeps_for(t_fp);
    let mut ensemble = e0;
    let mut stats = SweepStats::default();
    for _ in 0..sweeps {
        stats.absorb(ensemble.sweep(p)?);
    }
    let histogram = histogram(&ensemble, grid);
    Ok(McRun {
        ensemble,
        histogram,
        sweeps,
        stats,
    })
}
