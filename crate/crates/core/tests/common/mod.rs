#![allow(dead_code)]

use thermoscope::calibration::{synthesize_g2, G2Histogram, G2Params};
use thermoscope::constants::{AMU, TWO_PI};
use thermoscope::imaging::ImagingConfig;
use thermoscope::physics::{ExperimentParams, LaserSetting};

/// ¹⁷⁴Yb⁺ on the horizontal lateral axis.
pub fn yb174() -> ExperimentParams {
    ExperimentParams {
        mass: 174.0 * AMU,
        gamma: TWO_PI * 19.6e6,
        wavelength: 370e-9,
        trap_omega: TWO_PI * 205e3,
        alpha: 71f64.to_radians(),
        xi: 1.0 / 3.0,
    }
}

pub const DETUNING: f64 = -TWO_PI * 13e6;

pub fn reference_laser(p: &ExperimentParams) -> LaserSetting {
    LaserSetting::new(0.23 * p.gamma, DETUNING)
}

/// Rabi frequencies of the reference scan, rad/s.
pub fn rabi_series(p: &ExperimentParams) -> Vec<f64> {
    [0.012, 0.025, 0.23, 1.1, 2.4, 3.3]
        .iter()
        .map(|c| c * p.gamma)
        .collect()
}

/// Detunings of the detuning-scan round trip, rad/s.
pub fn scan_detunings() -> Vec<f64> {
    [-120.0, -80.0, -40.0, -20.0, -10.0, -5.0]
        .iter()
        .map(|d| d * TWO_PI * 1e6)
        .collect()
}

pub fn reference_imaging() -> ImagingConfig {
    ImagingConfig::default()
}

pub fn reference_g2() -> G2Params {
    G2Params {
        bg: 1.08,
        amplitude: 2.09,
        omega_prime: 0.439e9,
        t0: 30.4e-9,
        tau: 8.16e-9,
    }
}

/// 0–100 ns in 0.5 ns bins.
pub fn reference_g2_histogram(coincidences: Option<u64>, seed: u64) -> G2Histogram {
    synthesize_g2(&reference_g2(), 0.0, 0.5e-9, 200, coincidences, seed).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}
