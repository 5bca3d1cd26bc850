//! Second-order correlation of the fluorescence and its damped Rabi
//! oscillation model
//!
//! g²(t) = bg − A·(cos²(Ω′(t − t₀)/2) − ½)·exp(−|t − t₀|/τ).
//!
//! Fits run internally in nanoseconds and rad/ns, which keeps all five
//! parameters of order one.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::{LeastSquaresProblem, LevenbergMarquardt, LmSolution};

const NS: f64 = 1e-9;

/// Normalized coincidence histogram. Times in s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Histogram {
    pub bin_centers: Vec<f64>,
    pub values: Vec<f64>,
    pub bin_width: f64,
    /// Per-bin standard deviations. Without them the fit is unweighted and
    /// errors are scaled by the residual variance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<Vec<f64>>,
}

impl G2Histogram {
    pub fn validate(&self) -> Result<()> {
        if self.bin_centers.len() != self.values.len() {
            return Err(Error::invalid(
                "g2 histogram: centres and values differ in length",
            ));
        }
        if !(self.bin_width > 0.0) {
            return Err(Error::invalid("g2 histogram: bin width must be > 0"));
        }
        if self.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid(
                "g2 histogram: values must be finite and >= 0",
            ));
        }
        if let Some(e) = &self.errors {
            if e.len() != self.values.len() || e.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::invalid(
                    "g2 histogram: errors must be positive, one per bin",
                ));
            }
        }
        Ok(())
    }
}

/// Model parameters. `omega_prime` in rad/s, times in s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2Params {
    pub bg: f64,
    pub amplitude: f64,
    pub omega_prime: f64,
    pub t0: f64,
    pub tau: f64,
}

impl G2Params {
    fn to_internal(self) -> DVector<f64> {
        DVector::from_vec(vec![
            self.bg,
            self.amplitude,
            self.omega_prime * NS,
            self.t0 / NS,
            self.tau / NS,
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2FitResult {
    pub bg: f64,
    pub amplitude: f64,
    /// rad/s.
    pub omega_prime: f64,
    /// s.
    pub t0: f64,
    /// s.
    pub tau: f64,
    pub bg_err: f64,
    pub amplitude_err: f64,
    pub omega_prime_err: f64,
    pub t0_err: f64,
    pub tau_err: f64,
    pub reduced_chi2: f64,
}

impl G2FitResult {
    pub fn params(&self) -> G2Params {
        G2Params {
            bg: self.bg,
            amplitude: self.amplitude,
            omega_prime: self.omega_prime,
            t0: self.t0,
            tau: self.tau,
        }
    }
}

pub fn g2_model(t: f64, p: &G2Params) -> f64 {
    model_ns(
        t / NS,
        p.bg,
        p.amplitude,
        p.omega_prime * NS,
        p.t0 / NS,
        p.tau / NS,
    )
}

#[inline]
fn model_ns(t: f64, bg: f64, a: f64, w: f64, t0: f64, tau: f64) -> f64 {
    let d = t - t0;
    let c = (0.5 * w * d).cos();
    bg - a * (c * c - 0.5) * (-d.abs() / tau).exp()
}

struct G2Problem {
    t_ns: Vec<f64>,
    y: Vec<f64>,
    inv_err: Vec<f64>,
}

impl LeastSquaresProblem for G2Problem {
    fn residuals(&self, p: &DVector<f64>) -> Option<DVector<f64>> {
        if !(p[4] > 0.0) {
            return None;
        }
        Some(DVector::from_iterator(
            self.y.len(),
            (0..self.y.len()).map(|i| {
                (model_ns(self.t_ns[i], p[0], p[1], p[2], p[3], p[4]) - self.y[i]) * self.inv_err[i]
            }),
        ))
    }

    fn jacobian(&self, p: &DVector<f64>) -> Option<DMatrix<f64>> {
        let (a, w, t0, tau) = (p[1], p[2], p[3], p[4]);
        if !(tau > 0.0) {
            return None;
        }
        let mut j = DMatrix::zeros(self.y.len(), 5);
        for i in 0..self.y.len() {
            let d = self.t_ns[i] - t0;
            let env = (-d.abs() / tau).exp();
            // cos²(x/2) − ½ = cos(x)/2
            let osc = 0.5 * (w * d).cos();
            let dosc_dx = -0.5 * (w * d).sin();
            let s = self.inv_err[i];
            j[(i, 0)] = s;
            j[(i, 1)] = -osc * env * s;
            j[(i, 2)] = -a * dosc_dx * d * env * s;
            // d/dt0 of osc·env: osc'·(−w)·env + osc·env·sign(d)/tau
            j[(i, 3)] = -a * (dosc_dx * (-w) * env + osc * env * d.signum() / tau) * s;
            j[(i, 4)] = -a * osc * env * d.abs() / (tau * tau) * s;
        }
        Some(j)
    }
}

struct Seed {
    bg: f64,
    amplitude: f64,
    t0: f64,
    tau: f64,
    omegas: Vec<f64>,
}

/// Tail median for bg, minimum bin for t₀, dominant periodogram peak of the
/// background-subtracted data for Ω′, envelope area for τ.
fn seed(t: &[f64], y: &[f64]) -> Result<Seed> {
    let n = y.len();
    let (imin, &ymin) = y
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::invalid("empty histogram"))?;
    let t0 = t[imin];

    let mut by_distance: Vec<usize> = (0..n).collect();
    by_distance.sort_by(|&a, &b| (t[b] - t0).abs().total_cmp(&(t[a] - t0).abs()));
    let tail = (n / 5).max(1);
    let mut tail_values: Vec<f64> = by_distance[..tail].iter().map(|&i| y[i]).collect();
    tail_values.sort_by(f64::total_cmp);
    let bg = tail_values[tail / 2];

    let d: Vec<f64> = y.iter().map(|v| v - bg).collect();
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    let span = t[n - 1] - t[0];
    let w_lo = std::f64::consts::PI / span;
    let w_hi = std::f64::consts::PI / dt;
    let grid = 2048;
    let power: Vec<(f64, f64)> = (0..grid)
        .map(|k| {
            let w = w_lo + (w_hi - w_lo) * k as f64 / (grid - 1) as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for i in 0..n {
                let (s, c) = (w * (t[i] - t0)).sin_cos();
                re += d[i] * c;
                im += d[i] * s;
            }
            (w, re * re + im * im)
        })
        .collect();
    let mut sorted: Vec<f64> = power.iter().map(|p| p.1).collect();
    sorted.sort_by(f64::total_cmp);
    let floor = sorted[grid / 2];
    let peak = sorted[grid - 1];
    if !(peak > 3.0 * floor) || peak == 0.0 {
        return Err(Error::SeedFailure(format!(
            "no spectral peak above 3x noise floor (peak {peak:.3e}, floor {floor:.3e})"
        )));
    }
    // local maxima, strongest first
    let mut maxima: Vec<(f64, f64)> = (0..grid)
        .filter(|&k| {
            let left = if k == 0 {
                f64::NEG_INFINITY
            } else {
                power[k - 1].1
            };
            let right = if k + 1 == grid {
                f64::NEG_INFINITY
            } else {
                power[k + 1].1
            };
            power[k].1 >= left && power[k].1 >= right && power[k].1 > 3.0 * floor
        })
        .map(|k| power[k])
        .collect();
    maxima.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut omegas: Vec<f64> = maxima.iter().take(3).map(|m| m.0).collect();
    let main = omegas[0];
    omegas.extend([0.5 * main, 2.0 * main]);

    let depth = (bg - ymin).max(f64::MIN_POSITIVE);
    let area: f64 = d.iter().map(|v| v.abs()).sum::<f64>() * dt;
    let tau = (area / (2.0 * depth)).clamp(2.0 * dt, span);
    Ok(Seed {
        bg,
        amplitude: 2.0 * depth,
        t0,
        tau,
        omegas,
    })
}

/// Damped least-squares fit of the five-parameter model. Without a guess the
/// fit is started from every combination of the spectral frequency
/// candidates and a few envelope times and the lowest χ² wins.
pub fn fit_g2(hist: &G2Histogram, initial_guess: Option<G2Params>) -> Result<G2FitResult> {
    hist.validate()?;
    if hist.values.len() < 6 {
        return Err(Error::invalid("g2 histogram needs at least 6 bins"));
    }
    let t_ns: Vec<f64> = hist.bin_centers.iter().map(|t| t / NS).collect();
    let weighted = hist.errors.is_some();
    let inv_err = match &hist.errors {
        Some(e) => e.iter().map(|v| 1.0 / v).collect(),
        None => vec![1.0; hist.values.len()],
    };
    let problem = G2Problem {
        t_ns,
        y: hist.values.clone(),
        inv_err,
    };
    let lm = LevenbergMarquardt::default();

    let starts: Vec<DVector<f64>> = match initial_guess {
        Some(g) => vec![g.to_internal()],
        None => {
            let s = seed(&problem.t_ns, &problem.y)?;
            let mut v = Vec::new();
            for &w in &s.omegas {
                for tau_scale in [0.5, 1.0, 2.0] {
                    v.push(DVector::from_vec(vec![
                        s.bg,
                        s.amplitude,
                        w,
                        s.t0,
                        s.tau * tau_scale,
                    ]));
                }
            }
            v
        }
    };

    let mut best: Option<LmSolution> = None;
    let mut last_err = None;
    for x0 in starts {
        match lm.minimize(&problem, x0) {
            Ok(sol) if best.as_ref().is_none_or(|b| sol.chi2 < b.chi2) => best = Some(sol),
            Ok(_) => {}
            Err(e) => {
                log::debug!("g2 start failed: {e}");
                last_err = Some(e)
            }
        }
    }
    let sol = best.ok_or_else(|| last_err.unwrap_or(Error::NoConvergence { iterations: 0 }))?;
    let cov = sol.covariance(!weighted);
    let err = |i: usize| cov[(i, i)].max(0.0).sqrt();
    let p = &sol.params;
    Ok(G2FitResult {
        bg: p[0],
        amplitude: p[1],
        omega_prime: p[2].abs() / NS,
        t0: p[3] * NS,
        tau: p[4] * NS,
        bg_err: err(0),
        amplitude_err: err(1),
        omega_prime_err: err(2) / NS,
        t0_err: err(3) * NS,
        tau_err: err(4) * NS,
        reduced_chi2: sol.reduced_chi2(),
    })
}

/// In-model histogram on `n_bins` bins of width `bin_width` starting at
/// `start`. With `coincidences = Some(N)` each bin is a Poisson draw with
/// N coincidences expected in total, normalized back to g² units; the
/// attached errors are the Poisson standard deviations of the expected
/// counts. Without noise no errors are attached.
pub fn synthesize_g2(
    params: &G2Params,
    start: f64,
    bin_width: f64,
    n_bins: usize,
    coincidences: Option<u64>,
    seed: u64,
) -> Result<G2Histogram> {
    if !(bin_width > 0.0) || n_bins == 0 {
        return Err(Error::invalid(
            "g2 synthesis needs a positive bin width and at least one bin",
        ));
    }
    let centers: Vec<f64> = (0..n_bins)
        .map(|i| start + (i as f64 + 0.5) * bin_width)
        .collect();
    let expected: Vec<f64> = centers
        .iter()
        .map(|&t| g2_model(t, params).max(0.0))
        .collect();
    let Some(total) = coincidences else {
        return Ok(G2Histogram {
            bin_centers: centers,
            values: expected,
            bin_width,
            errors: None,
        });
    };
    let norm = total as f64 / expected.iter().sum::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n_bins);
    let mut errors = Vec::with_capacity(n_bins);
    for &g in &expected {
        let mean = g * norm;
        let count = if mean > 0.0 {
            Poisson::new(mean)
                .map_err(|e| Error::invalid(e.to_string()))?
                .sample(&mut rng)
        } else {
            0.0
        };
        values.push(count / norm);
        errors.push(mean.max(1.0).sqrt() / norm);
    }
    Ok(G2Histogram {
        bin_centers: centers,
        values,
        bin_width,
        errors: Some(errors),
    })
}
