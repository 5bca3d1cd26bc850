//! Axis projections and the 1D Gaussian-plus-offset fit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::frame::ImageFrame;
use crate::error::{Error, Result};
use crate::lm::{LeastSquaresProblem, LevenbergMarquardt};

/// Sum of each column; index = x.
pub fn project_columns(frame: &ImageFrame) -> Vec<f64> {
    let w = frame.width();
    let mut profile = vec![0.0; w];
    for row in frame.counts().chunks(w.max(1)) {
        for (acc, v) in profile.iter_mut().zip(row) {
            *acc += v;
        }
    }
    profile
}

/// Sum of each row; index = y.
pub fn project_rows(frame: &ImageFrame) -> Vec<f64> {
    frame
        .counts()
        .chunks(frame.width().max(1))
        .map(|row| row.iter().sum())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWeights {
    #[default]
    Uniform,
    /// Residuals divided by √max(y, 1).
    Poisson,
}

/// Starting point for [`fit_gaussian_1d`]; positions in samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianGuess {
    pub amplitude: f64,
    pub center: f64,
    pub sigma: f64,
    pub offset: f64,
}

/// Fitted `A·exp(−(x−x₀)²/(2σ²)) + b`, x in sample index units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit1D {
    pub amplitude: f64,
    pub center: f64,
    pub sigma: f64,
    pub offset: f64,
    pub amplitude_err: f64,
    pub center_err: f64,
    pub sigma_err: f64,
    pub offset_err: f64,
    pub reduced_chi2: f64,
    pub iterations: usize,
}

impl GaussianFit1D {
    pub fn eval(&self, x: f64) -> f64 {
        gaussian(self.amplitude, self.center, self.sigma, self.offset, x)
    }
}

#[inline]
fn gaussian(a: f64, x0: f64, s: f64, b: f64, x: f64) -> f64 {
    let d = x - x0;
    a * (-(d * d) / (2.0 * s * s)).exp() + b
}

struct GaussianProblem<'a> {
    y: &'a [f64],
    w: Vec<f64>,
}

impl LeastSquaresProblem for GaussianProblem<'_> {
    fn residuals(&self, p: &DVector<f64>) -> Option<DVector<f64>> {
        if p[2] == 0.0 {
            return None;
        }
        Some(DVector::from_iterator(
            self.y.len(),
            self.y
                .iter()
                .enumerate()
                .map(|(i, y)| (gaussian(p[0], p[1], p[2], p[3], i as f64) - y) * self.w[i]),
        ))
    }

    fn jacobian(&self, p: &DVector<f64>) -> Option<DMatrix<f64>> {
        let (a, x0, s) = (p[0], p[1], p[2]);
        if s == 0.0 {
            return None;
        }
        let mut j = DMatrix::zeros(self.y.len(), 4);
        for i in 0..self.y.len() {
            let d = i as f64 - x0;
            let e = (-(d * d) / (2.0 * s * s)).exp();
            let w = self.w[i];
            j[(i, 0)] = e * w;
            j[(i, 1)] = a * e * d / (s * s) * w;
            j[(i, 2)] = a * e * d * d / (s * s * s) * w;
            j[(i, 3)] = w;
        }
        Some(j)
    }
}

/// Moment-based seed: offset = min, centre = centroid, σ = RMS width of the
/// pedestal-subtracted profile.
pub fn moment_seed(profile: &[f64]) -> Result<GaussianGuess> {
    let min = profile.iter().copied().fold(f64::INFINITY, f64::min);
    let max = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mass: f64 = profile.iter().map(|y| y - min).sum();
    if !(mass > 0.0) {
        return Err(Error::DegenerateProfile(
            "profile has no structure above its minimum".into(),
        ));
    }
    let center = profile
        .iter()
        .enumerate()
        .map(|(i, y)| i as f64 * (y - min))
        .sum::<f64>()
        / mass;
    let var = profile
        .iter()
        .enumerate()
        .map(|(i, y)| (i as f64 - center).powi(2) * (y - min))
        .sum::<f64>()
        / mass;
    if !(var > 0.0) {
        return Err(Error::DegenerateProfile(format!(
            "moment width {var} is not positive"
        )));
    }
    Ok(GaussianGuess {
        amplitude: max - min,
        center,
        sigma: var.sqrt(),
        offset: min,
    })
}

/// Half-maximum width around the peak sample, converted to σ. Used as a
/// second start when the moment seed is swamped by a noisy pedestal.
fn half_max_seed(profile: &[f64], offset: f64) -> Option<GaussianGuess> {
    let (peak, &top) = profile
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let half = offset + 0.5 * (top - offset);
    let left = profile[..peak]
        .iter()
        .rposition(|&y| y < half)
        .map(|i| peak - i)?;
    let right = profile[peak..].iter().position(|&y| y < half)?;
    let fwhm = (left + right) as f64;
    Some(GaussianGuess {
        amplitude: top - offset,
        center: peak as f64,
        sigma: (fwhm / 2.354_820_045).max(0.5),
        offset,
    })
}

pub fn fit_gaussian_1d(profile: &[f64], guess: Option<GaussianGuess>) -> Result<GaussianFit1D> {
    fit_gaussian_1d_weighted(profile, guess, FitWeights::Uniform)
}

pub fn fit_gaussian_1d_weighted(
    profile: &[f64],
    guess: Option<GaussianGuess>,
    weights: FitWeights,
) -> Result<GaussianFit1D> {
    if profile.len() < 5 {
        return Err(Error::invalid(format!(
            "need at least 5 samples for a Gaussian fit, got {}",
            profile.len()
        )));
    }
    if profile.iter().any(|y| !y.is_finite()) {
        return Err(Error::invalid("profile contains non-finite samples"));
    }
    let w = match weights {
        FitWeights::Uniform => vec![1.0; profile.len()],
        FitWeights::Poisson => profile.iter().map(|y| 1.0 / y.max(1.0).sqrt()).collect(),
    };
    let problem = GaussianProblem { y: profile, w };
    let lm = LevenbergMarquardt::default();

    let mut starts = Vec::new();
    match guess {
        Some(g) => starts.push(g),
        None => {
            let seed = moment_seed(profile)?;
            starts.push(seed);
            if let Some(alt) = half_max_seed(profile, seed.offset) {
                starts.push(alt);
            }
        }
    }

    let mut best: Option<crate::lm::LmSolution> = None;
    let mut last_err = None;
    for g in starts {
        let x0 = DVector::from_vec(vec![g.amplitude, g.center, g.sigma, g.offset]);
        match lm.minimize(&problem, x0) {
            Ok(sol) => {
                if best.as_ref().is_none_or(|b| sol.chi2 < b.chi2) {
                    best = Some(sol);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let sol = match best {
        Some(s) => s,
        None => return Err(last_err.unwrap_or(Error::NoConvergence { iterations: 0 })),
    };
    let cov = sol.covariance(true);
    let err = |i: usize| cov[(i, i)].max(0.0).sqrt();
    let sigma = sol.params[2].abs();
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::DegenerateProfile("fitted width collapsed".into()));
    }
    Ok(GaussianFit1D {
        amplitude: sol.params[0],
        center: sol.params[1],
        sigma,
        offset: sol.params[3],
        amplitude_err: err(0),
        center_err: err(1),
        sigma_err: err(2),
        offset_err: err(3),
        reduced_chi2: sol.reduced_chi2(),
        iterations: sol.iterations,
    })
}
