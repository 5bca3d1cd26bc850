//! Heating-rate regression on width scans and conversion of image widths to
//! temperatures with propagated calibration errors.
//!
//! The equilibrium temperature is affine in the anomalous heating rate,
//! T = T_recoil + ζ·∂T/∂ζ, so every scan point is reduced once to those two
//! numbers and the fit only evaluates
//! σ² = σ_PSF² + M²·σ₀²·(1 + 2k_B·T/(ħω)).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constants::K_B;
use crate::error::{Error, Result};
use crate::imaging::{composite_width, extract_ion_width, ImagingConfig};
use crate::lm::{LeastSquaresProblem, LevenbergMarquardt, LmSolution};
use crate::physics::{
    equilibrium_components, ExperimentParams, HeatingRate, LaserSetting, ThermalState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    /// Rabi frequency varied, detuning held.
    RabiScan,
    /// Detuning varied, Rabi frequency held.
    DetuningScan,
}

impl ScanKind {
    /// Laser setting for one scan point; `control` and `fixed` in rad/s.
    pub fn laser(self, control: f64, fixed: f64) -> LaserSetting {
        match self {
            ScanKind::RabiScan => LaserSetting::new(control, fixed),
            ScanKind::DetuningScan => LaserSetting::new(fixed, control),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    /// rad/s.
    pub control: f64,
    /// Image width, m.
    pub sigma: f64,
    pub sigma_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanDataset {
    pub scan_kind: ScanKind,
    /// The held Δ (Rabi scan) or Ω (detuning scan), rad/s.
    pub fixed_value: f64,
    /// Trap axis the widths belong to.
    #[serde(default = "default_axis")]
    pub axis: String,
    pub points: Vec<ScanPoint>,
}

fn default_axis() -> String {
    "horizontal".to_string()
}

impl ScanDataset {
    pub fn new(scan_kind: ScanKind, fixed_value: f64, points: Vec<ScanPoint>) -> Self {
        Self {
            scan_kind,
            fixed_value,
            axis: default_axis(),
            points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 4 {
            return Err(Error::invalid(format!(
                "a fit of 2 parameters needs at least 4 points, dataset has {}",
                self.points.len()
            )));
        }
        for (i, p) in self.points.iter().enumerate() {
            if !(p.sigma.is_finite() && p.sigma > 0.0) {
                return Err(Error::invalid(format!("point {i}: width must be > 0")));
            }
            if !(p.sigma_err.is_finite() && p.sigma_err > 0.0) {
                return Err(Error::invalid(format!(
                    "point {i}: width error must be > 0"
                )));
            }
            if !p.control.is_finite() {
                return Err(Error::invalid(format!("point {i}: control is not finite")));
            }
        }
        let mut controls: Vec<f64> = self.points.iter().map(|p| p.control).collect();
        controls.sort_by(f64::total_cmp);
        if controls.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("control values must be distinct"));
        }
        Ok(())
    }
}

/// σ(Ω, Δ) = √(σ_PSF² + M²σ_i(T_eq)²).
pub fn model_width(
    control: f64,
    kind: ScanKind,
    fixed: f64,
    zeta: HeatingRate,
    sigma_psf: f64,
    magnification: f64,
    p: &ExperimentParams,
) -> Result<f64> {
    let t = crate::physics::equilibrium_temperature(&kind.laser(control, fixed), p, zeta)?;
    let state = ThermalState::from_temperature(t, p)?;
    let cfg = ImagingConfig {
        sigma_psf,
        magnification,
        ..ImagingConfig::default()
    };
    composite_width(state.sigma_ion, &cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Residuals divided by each point's width error.
    #[default]
    InverseVariance,
    /// Plain residuals; covariance scaled by χ²/dof.
    Unweighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HeatingFitOptions {
    pub weighting: Weighting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatingFitResult {
    pub zeta: HeatingRate,
    /// quanta/s.
    pub zeta_err: f64,
    /// m.
    pub sigma_psf: f64,
    pub sigma_psf_err: f64,
    /// Covariance of (ζ [quanta/s], σ_PSF [m]).
    pub covariance: [[f64; 2]; 2],
    pub chi2: f64,
    pub reduced_chi2: f64,
    /// Model width at each point, m.
    pub model: Vec<f64>,
    /// Measured minus model width, m.
    pub residuals: Vec<f64>,
    /// Secular frequency used to turn quanta into energy, rad/s.
    pub reference_trap_omega: f64,
    pub iterations: usize,
}

// Internal coordinates: u² = ζ in quanta/ms, v = σ_PSF in µm.
const ZETA_UNIT: f64 = 1e3;
const LEN_UNIT: f64 = 1e-6;

struct HeatingProblem {
    /// σ₀²·M² in µm².
    scale: f64,
    /// 2k_B/(ħω), 1/K.
    n_per_kelvin: f64,
    recoil: Vec<f64>,
    slope: Vec<f64>,
    sigma: Vec<f64>,
    inv_err: Vec<f64>,
}

impl HeatingProblem {
    fn new(
        ds: &ScanDataset,
        p: &ExperimentParams,
        magnification: f64,
        weighting: Weighting,
    ) -> Result<Self> {
        ds.validate()?;
        p.validate()?;
        if !(magnification > 0.0 && magnification.is_finite()) {
            return Err(Error::invalid("magnification must be > 0"));
        }
        let mut recoil = Vec::new();
        let mut slope = Vec::new();
        for pt in &ds.points {
            let laser = ds.scan_kind.laser(pt.control, ds.fixed_value);
            if !(laser.rabi > 0.0) {
                return Err(Error::invalid(
                    "every scan point needs a positive Rabi frequency",
                ));
            }
            let (t0, g) = equilibrium_components(&laser, p)?;
            recoil.push(t0);
            slope.push(g * ZETA_UNIT);
        }
        let g0 = p.ground_state_width() / LEN_UNIT;
        Ok(Self {
            scale: g0 * g0 * magnification * magnification,
            n_per_kelvin: 2.0 * K_B / p.quantum_energy(),
            recoil,
            slope,
            sigma: ds.points.iter().map(|pt| pt.sigma / LEN_UNIT).collect(),
            inv_err: match weighting {
                Weighting::InverseVariance => {
                    ds.points.iter().map(|pt| LEN_UNIT / pt.sigma_err).collect()
                }
                Weighting::Unweighted => vec![1.0; ds.points.len()],
            },
        })
    }

    /// Model width in µm for ζ in quanta/ms and σ_PSF in µm.
    fn width(&self, j: usize, zeta_ms: f64, psf_um: f64) -> f64 {
        let t = self.recoil[j] + zeta_ms * self.slope[j];
        (psf_um * psf_um + self.scale * (1.0 + self.n_per_kelvin * t)).sqrt()
    }

    /// ∂σ/∂ζ and ∂σ/∂σ_PSF² in µm per (quanta/ms) and per µm².
    fn sensitivities(&self, j: usize, zeta_ms: f64, psf_um: f64) -> (f64, f64) {
        let s = self.width(j, zeta_ms, psf_um);
        (
            self.scale * self.n_per_kelvin * self.slope[j] / (2.0 * s),
            1.0 / (2.0 * s),
        )
    }
}

impl LeastSquaresProblem for HeatingProblem {
    fn residuals(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let zeta = x[0] * x[0];
        Some(DVector::from_iterator(
            self.sigma.len(),
            (0..self.sigma.len())
                .map(|j| (self.width(j, zeta, x[1]) - self.sigma[j]) * self.inv_err[j]),
        ))
    }

    fn jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let zeta = x[0] * x[0];
        let mut jac = DMatrix::zeros(self.sigma.len(), 2);
        for j in 0..self.sigma.len() {
            let (d_zeta, d_psf2) = self.sensitivities(j, zeta, x[1]);
            jac[(j, 0)] = d_zeta * 2.0 * x[0] * self.inv_err[j];
            jac[(j, 1)] = d_psf2 * 2.0 * x[1] * self.inv_err[j];
        }
        Some(jac)
    }
}

/// The 4×4 log-spaced start grid of (ζ [quanta/s], σ_PSF [m]).
pub fn seed_grid(ds: &ScanDataset) -> Vec<(f64, f64)> {
    let min_sigma = ds
        .points
        .iter()
        .map(|p| p.sigma)
        .fold(f64::INFINITY, f64::min);
    let zetas = [1e1, 1e2, 1e3, 1e4];
    let psf_ratio: f64 = 9f64.powf(1.0 / 3.0);
    let psfs: Vec<f64> = (0..4)
        .map(|i| 0.1 * psf_ratio.powi(i) * min_sigma)
        .collect();
    zetas
        .iter()
        .flat_map(|&z| psfs.iter().map(move |&s| (z, s)))
        .collect()
}

pub fn fit_heating_rate(
    ds: &ScanDataset,
    p: &ExperimentParams,
    magnification: f64,
) -> Result<HeatingFitResult> {
    fit_heating_rate_with(ds, p, magnification, &HeatingFitOptions::default())
}

/// Weighted least squares over (ζ, σ_PSF) from every seed of
/// [`seed_grid`]; the lowest χ² is reported.
pub fn fit_heating_rate_with(
    ds: &ScanDataset,
    p: &ExperimentParams,
    magnification: f64,
    opts: &HeatingFitOptions,
) -> Result<HeatingFitResult> {
    let problem = HeatingProblem::new(ds, p, magnification, opts.weighting)?;
    let mut best: Option<LmSolution> = None;
    let mut last_err = None;
    for (z, s) in seed_grid(ds) {
        match solve_from(&problem, z, s) {
            Ok(sol) if best.as_ref().is_none_or(|b| sol.chi2 < b.chi2) => best = Some(sol),
            Ok(_) => {}
            Err(e) => {
                log::debug!("heating fit from zeta={z:.3e}/s, sigma_psf={s:.3e} m failed: {e}");
                last_err = Some(e)
            }
        }
    }
    let sol = best.ok_or_else(|| last_err.unwrap_or(Error::NoConvergence { iterations: 0 }))?;
    log::debug!(
        "heating fit: chi2={:.4e} after {} iterations",
        sol.chi2,
        sol.iterations
    );
    summarize(&problem, ds, p, opts, sol)
}

/// Single-start variant of [`fit_heating_rate_with`].
pub fn fit_heating_rate_from(
    ds: &ScanDataset,
    p: &ExperimentParams,
    magnification: f64,
    opts: &HeatingFitOptions,
    start: (f64, f64),
) -> Result<HeatingFitResult> {
    let problem = HeatingProblem::new(ds, p, magnification, opts.weighting)?;
    let sol = solve_from(&problem, start.0, start.1)?;
    summarize(&problem, ds, p, opts, sol)
}

fn solve_from(problem: &HeatingProblem, zeta: f64, sigma_psf: f64) -> Result<LmSolution> {
    let x0 = DVector::from_vec(vec![
        (zeta / ZETA_UNIT).max(0.0).sqrt(),
        sigma_psf / LEN_UNIT,
    ]);
    LevenbergMarquardt::default().minimize(problem, x0)
}

fn summarize(
    problem: &HeatingProblem,
    ds: &ScanDataset,
    p: &ExperimentParams,
    opts: &HeatingFitOptions,
    sol: LmSolution,
) -> Result<HeatingFitResult> {
    let (u, v) = (sol.params[0], sol.params[1]);
    let zeta_ms = u * u;
    let psf_um = v.abs();

    // rank test on (ζ, σ_PSF²), where neither column vanishes at a bound
    let n = problem.sigma.len();
    let mut sens = DMatrix::zeros(n, 2);
    for j in 0..n {
        let (a, b) = problem.sensitivities(j, zeta_ms, psf_um);
        sens[(j, 0)] = a * problem.inv_err[j];
        sens[(j, 1)] = b * problem.inv_err[j];
    }
    for mut col in sens.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let sv = sens.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smax > 0.0) || smin / smax < 1e-12 {
        return Err(Error::UnderDetermined(format!(
            "scan points do not separate the heating rate from the PSF width (singular values {smax:.3e}, {smin:.3e})"
        )));
    }

    let cov_internal = sol.covariance(opts.weighting == Weighting::Unweighted);
    // chain rule to (ζ [quanta/s], σ_PSF [m])
    let d = [2.0 * u * ZETA_UNIT, v.signum() * LEN_UNIT];
    let mut covariance = [[0.0; 2]; 2];
    for (a, row) in covariance.iter_mut().enumerate() {
        for (b, c) in row.iter_mut().enumerate() {
            *c = d[a] * cov_internal[(a, b)] * d[b];
        }
    }
    let sym = 0.5 * (covariance[0][1] + covariance[1][0]);
    covariance[0][1] = sym;
    covariance[1][0] = sym;

    let model: Vec<f64> = (0..n)
        .map(|j| problem.width(j, zeta_ms, psf_um) * LEN_UNIT)
        .collect();
    let residuals = ds
        .points
        .iter()
        .zip(&model)
        .map(|(pt, m)| pt.sigma - m)
        .collect();
    Ok(HeatingFitResult {
        zeta: HeatingRate::per_second(zeta_ms * ZETA_UNIT)?,
        zeta_err: covariance[0][0].max(0.0).sqrt(),
        sigma_psf: psf_um * LEN_UNIT,
        sigma_psf_err: covariance[1][1].max(0.0).sqrt(),
        covariance,
        chi2: sol.chi2,
        reduced_chi2: sol.reduced_chi2(),
        model,
        residuals,
        reference_trap_omega: p.trap_omega,
        iterations: sol.iterations,
    })
}

/// Densely sampled model curve between the smallest and largest control,
/// log-spaced for Rabi scans and linear for detuning scans.
pub fn model_curve(
    ds: &ScanDataset,
    fit: &HeatingFitResult,
    p: &ExperimentParams,
    magnification: f64,
    samples: usize,
) -> Result<Vec<(f64, f64)>> {
    let lo = ds
        .points
        .iter()
        .map(|pt| pt.control)
        .fold(f64::INFINITY, f64::min);
    let hi = ds
        .points
        .iter()
        .map(|pt| pt.control)
        .fold(f64::NEG_INFINITY, f64::max);
    let samples = samples.max(2);
    (0..samples)
        .map(|i| {
            let f = i as f64 / (samples - 1) as f64;
            let c = match ds.scan_kind {
                ScanKind::RabiScan if lo > 0.0 => lo * (hi / lo).powf(f),
                _ => lo + (hi - lo) * f,
            };
            let s = model_width(
                c,
                ds.scan_kind,
                ds.fixed_value,
                fit.zeta,
                fit.sigma_psf,
                magnification,
                p,
            )?;
            Ok((c, s))
        })
        .collect()
}

/// Synthetic scan: model widths with multiplicative Gaussian noise of
/// relative size `rel_noise`, error bars `rel_noise·σ_model`.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_scan(
    kind: ScanKind,
    fixed: f64,
    controls: &[f64],
    zeta: HeatingRate,
    sigma_psf: f64,
    magnification: f64,
    p: &ExperimentParams,
    rel_noise: f64,
    seed: u64,
) -> Result<ScanDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(controls.len());
    for &c in controls {
        let s = model_width(c, kind, fixed, zeta, sigma_psf, magnification, p)?;
        let g: f64 = rng.sample(StandardNormal);
        let err = if rel_noise > 0.0 {
            rel_noise * s
        } else {
            1e-3 * s
        };
        points.push(ScanPoint {
            control: c,
            sigma: s * (1.0 + rel_noise * g),
            sigma_err: err,
        });
    }
    Ok(ScanDataset::new(kind, fixed, points))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureEstimate {
    pub temperature: f64,
    pub temperature_err: f64,
    pub nbar: f64,
    pub nbar_err: f64,
    pub sigma_ion: f64,
    pub sigma_ion_err: f64,
}

/// Ion temperature from an image width, with first-order errors from the
/// width, the PSF width and the magnification added in quadrature.
pub fn temperature_from_width(
    sigma: f64,
    sigma_err: f64,
    cfg: &ImagingConfig,
    p: &ExperimentParams,
) -> Result<TemperatureEstimate> {
    if !(sigma_err.is_finite() && sigma_err >= 0.0) {
        return Err(Error::invalid("width error must be >= 0"));
    }
    let sigma_ion = extract_ion_width(sigma, cfg)?;
    let state = ThermalState::from_sigma(sigma_ion, p)?;
    let m2 = cfg.magnification * cfg.magnification;
    let d_sigma = sigma / (m2 * sigma_ion) * sigma_err;
    let d_psf = cfg.sigma_psf / (m2 * sigma_ion) * cfg.sigma_psf_err;
    let d_mag = sigma_ion / cfg.magnification * cfg.magnification_err;
    let sigma_ion_err = (d_sigma * d_sigma + d_psf * d_psf + d_mag * d_mag).sqrt();
    let g = p.ground_state_width();
    let nbar_err = sigma_ion / (g * g) * sigma_ion_err;
    let temperature_err = nbar_err * p.quantum_energy() / K_B;
    Ok(TemperatureEstimate {
        temperature: state.temperature,
        temperature_err,
        nbar: state.nbar,
        nbar_err,
        sigma_ion,
        sigma_ion_err,
    })
}

/// δT/T at temperature `t` for an image-width error `sigma_err`.
pub fn relative_temperature_error(
    t: f64,
    sigma_err: f64,
    cfg: &ImagingConfig,
    p: &ExperimentParams,
) -> Result<f64> {
    let state = ThermalState::from_temperature(t, p)?;
    let sigma = composite_width(state.sigma_ion, cfg)?;
    let est = temperature_from_width(sigma, sigma_err, cfg, p)?;
    Ok(est.temperature_err / est.temperature)
}

/// Lowest temperature whose relative error stays at or below `max_rel`:
/// log-spaced scan downward from 1 K, then bisection on the bracketing step.
pub fn minimum_measurable_temperature(
    max_rel: f64,
    sigma_err: f64,
    cfg: &ImagingConfig,
    p: &ExperimentParams,
) -> Result<f64> {
    if !(max_rel > 0.0) {
        return Err(Error::invalid("relative error threshold must be > 0"));
    }
    let rel = |t: f64| relative_temperature_error(t, sigma_err, cfg, p);
    let mut hi = 1.0;
    if rel(hi)? > max_rel {
        return Err(Error::invalid("threshold not reached even at 1 K"));
    }
    let step = 10f64.powf(0.05);
    let mut lo = hi / step;
    while rel(lo)? <= max_rel {
        hi = lo;
        lo /= step;
        if lo < 1e-9 {
            return Ok(lo);
        }
    }
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if rel(mid)? <= max_rel {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 1e-12 {
            break;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{AMU, TWO_PI};

    fn yb() -> ExperimentParams {
        ExperimentParams {
            mass: 174.0 * AMU,
            gamma: TWO_PI * 19.6e6,
            wavelength: 370e-9,
            trap_omega: TWO_PI * 205e3,
            alpha: 71f64.to_radians(),
            xi: 1.0 / 3.0,
        }
    }

    #[test]
    fn zero_psf_zero_heating_is_magnified_spread() {
        let p = yb();
        let det = -TWO_PI * 13e6;
        let s = model_width(
            0.5 * p.gamma,
            ScanKind::RabiScan,
            det,
            HeatingRate::ZERO,
            0.0,
            113.0,
            &p,
        )
        .unwrap();
        let t = crate::physics::equilibrium_temperature(
            &LaserSetting::new(0.5 * p.gamma, det),
            &p,
            HeatingRate::ZERO,
        )
        .unwrap();
        let si = ThermalState::from_temperature(t, &p).unwrap().sigma_ion;
        assert_eq!(s, 113.0 * si);
    }

    #[test]
    fn three_points_rejected() {
        let p = yb();
        let ds = synthesize_scan(
            ScanKind::RabiScan,
            -TWO_PI * 13e6,
            &[0.1 * p.gamma, 0.5 * p.gamma, p.gamma],
            HeatingRate::per_ms(0.38).unwrap(),
            6.6e-6,
            113.0,
            &p,
            0.03,
            1,
        )
        .unwrap();
        assert!(matches!(
            fit_heating_rate(&ds, &p, 113.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn identical_sensitivity_is_under_determined() {
        let p = yb();
        // two controls only, each repeated with a tiny offset: the two
        // sensitivity columns become parallel only if all points agree
        let c = 0.3 * p.gamma;
        let controls: Vec<f64> = (0..5).map(|i| c * (1.0 + 1e-15 * i as f64)).collect();
        let ds = synthesize_scan(
            ScanKind::RabiScan,
            -TWO_PI * 13e6,
            &controls,
            HeatingRate::per_ms(0.38).unwrap(),
            6.6e-6,
            113.0,
            &p,
            0.0,
            1,
        )
        .unwrap();
        assert!(matches!(
            fit_heating_rate(&ds, &p, 113.0),
            Err(Error::UnderDetermined(_))
        ));
    }

    #[test]
    fn noiseless_round_trip_from_every_seed() {
        let p = yb();
        let controls: Vec<f64> = [0.012, 0.025, 0.23, 1.1, 2.4, 3.3]
            .iter()
            .map(|r| r * p.gamma)
            .collect();
        let ds = synthesize_scan(
            ScanKind::RabiScan,
            -TWO_PI * 13e6,
            &controls,
            HeatingRate::per_ms(0.38).unwrap(),
            6.6e-6,
            113.0,
            &p,
            0.0,
            1,
        )
        .unwrap();
        for start in seed_grid(&ds) {
            let f = fit_heating_rate_from(&ds, &p, 113.0, &HeatingFitOptions::default(), start)
                .unwrap();
            assert!(
                (f.zeta.quanta_per_ms() / 0.38 - 1.0).abs() < 1e-3,
                "{start:?}: {f:?}"
            );
            assert!(
                (f.sigma_psf / 6.6e-6 - 1.0).abs() < 1e-3,
                "{start:?}: {f:?}"
            );
        }
    }

    #[test]
    fn temperature_without_errors_has_zero_spread() {
        let p = yb();
        let cfg = ImagingConfig {
            magnification_err: 0.0,
            sigma_psf_err: 0.0,
            ..ImagingConfig::default()
        };
        let s = composite_width(0.166e-6, &cfg).unwrap();
        let est = temperature_from_width(s, 0.0, &cfg, &p).unwrap();
        assert_eq!(est.temperature_err, 0.0);
        assert!((est.nbar - 97.0).abs() < 1.5);
        assert!(temperature_from_width(cfg.sigma_psf, 0.1e-6, &cfg, &p).is_err());
    }
}
