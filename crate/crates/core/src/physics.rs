//! Steady-state Doppler cooling of one motional mode of a trapped ion.
//!
//! Every function here is a pure closed form. The model follows a two-level
//! ion driven by a single red-detuned beam: friction from the velocity
//! dependence of the scattering rate, recoil heating from absorption and
//! spontaneous emission, and an additive anomalous heating rate counted in
//! motional quanta per second.

use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, K_B, TWO_PI};
use crate::error::{Error, Result};

/// Ion, trap axis and cooling-beam geometry. SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    /// Ion mass, kg.
    pub mass: f64,
    /// Natural linewidth of the cooling transition, rad/s.
    pub gamma: f64,
    /// Cooling transition wavelength, m.
    pub wavelength: f64,
    /// Secular frequency of the analysed axis, rad/s.
    pub trap_omega: f64,
    /// Angle between cooling beam and analysed axis, rad.
    pub alpha: f64,
    /// Fraction of the emission recoil projected on the axis.
    pub xi: f64,
}

impl ExperimentParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("gamma", self.gamma),
            ("wavelength", self.wavelength),
            ("trap_omega", self.trap_omega),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.alpha >= 0.0 && self.alpha < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid(format!(
                "alpha must lie in [0, pi/2), got {} rad",
                self.alpha
            )));
        }
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return Err(Error::invalid(format!(
                "xi must lie in (0, 1], got {}",
                self.xi
            )));
        }
        Ok(())
    }

    /// |k| = 2π/λ.
    pub fn wavenumber(&self) -> f64 {
        TWO_PI / self.wavelength
    }

    /// Projection of the beam wave vector on the analysed axis.
    pub fn k_eff(&self) -> f64 {
        self.wavenumber() * self.alpha.cos()
    }

    /// Energy of one motional quantum, ħω.
    pub fn quantum_energy(&self) -> f64 {
        HBAR * self.trap_omega
    }

    /// Zero-point RMS spread √(ħ/(2mω)).
    pub fn ground_state_width(&self) -> f64 {
        (HBAR / (2.0 * self.mass * self.trap_omega)).sqrt()
    }
}

/// Drive of the cooling beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserSetting {
    /// On-resonance Rabi frequency Ω, rad/s.
    pub rabi: f64,
    /// Laser minus atomic frequency, rad/s; negative is red.
    pub detuning: f64,
}

impl LaserSetting {
    pub fn new(rabi: f64, detuning: f64) -> Self {
        Self { rabi, detuning }
    }

    fn check_cooling(&self) -> Result<()> {
        if !(self.rabi.is_finite() && self.rabi >= 0.0) {
            return Err(Error::invalid(format!(
                "rabi must be >= 0, got {}",
                self.rabi
            )));
        }
        if !(self.detuning.is_finite() && self.detuning < 0.0) {
            return Err(Error::invalid(format!(
                "cooling requires red detuning (< 0), got {} rad/s",
                self.detuning
            )));
        }
        Ok(())
    }

    /// 4Δ² + Γ² + 2Ω², the saturation-broadened denominator.
    fn denominator(&self, gamma: f64) -> f64 {
        4.0 * self.detuning * self.detuning + gamma * gamma + 2.0 * self.rabi * self.rabi
    }
}

/// Anomalous heating rate, stored in quanta per second.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HeatingRate(f64);

impl HeatingRate {
    pub const ZERO: HeatingRate = HeatingRate(0.0);

    pub fn per_second(zeta: f64) -> Result<Self> {
        if !(zeta.is_finite() && zeta >= 0.0) {
            return Err(Error::invalid(format!(
                "heating rate must be >= 0, got {zeta}"
            )));
        }
        Ok(Self(zeta))
    }

    pub fn per_ms(zeta: f64) -> Result<Self> {
        Self::per_second(zeta * 1e3)
    }

    pub fn quanta_per_second(self) -> f64 {
        self.0
    }

    pub fn quanta_per_ms(self) -> f64 {
        self.0 * 1e-3
    }
}

/// Mean phonon number, temperature and RMS spread of one axis. The three
/// fields describe the same state and are always constructed together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub nbar: f64,
    /// K.
    pub temperature: f64,
    /// m.
    pub sigma_ion: f64,
}

impl ThermalState {
    pub fn from_temperature(temperature: f64, p: &ExperimentParams) -> Result<Self> {
        if !(temperature.is_finite() && temperature >= 0.0) {
            return Err(Error::invalid(format!(
                "temperature must be >= 0, got {temperature}"
            )));
        }
        let nbar = K_B * temperature / p.quantum_energy();
        Ok(Self {
            nbar,
            temperature,
            sigma_ion: spread_from_nbar(nbar, p),
        })
    }

    pub fn from_nbar(nbar: f64, p: &ExperimentParams) -> Result<Self> {
        if !(nbar.is_finite() && nbar >= 0.0) {
            return Err(Error::invalid(format!("nbar must be >= 0, got {nbar}")));
        }
        Ok(Self {
            nbar,
            temperature: nbar * p.quantum_energy() / K_B,
            sigma_ion: spread_from_nbar(nbar, p),
        })
    }

    pub fn from_sigma(sigma_ion: f64, p: &ExperimentParams) -> Result<Self> {
        let ground = p.ground_state_width();
        if !(sigma_ion.is_finite() && sigma_ion >= ground) {
            return Err(Error::BelowGroundState {
                sigma: sigma_ion,
                ground,
            });
        }
        let ratio = sigma_ion / ground;
        let nbar = 0.5 * (ratio * ratio - 1.0);
        Ok(Self {
            nbar,
            temperature: nbar * p.quantum_energy() / K_B,
            sigma_ion,
        })
    }
}

fn spread_from_nbar(nbar: f64, p: &ExperimentParams) -> f64 {
    p.ground_state_width() * (2.0 * nbar + 1.0).sqrt()
}

/// Steady-state excited population ρ_ee = Ω²/(4Δ² + Γ² + 2Ω²).
pub fn excited_state_population(laser: &LaserSetting, gamma: f64) -> f64 {
    let r2 = laser.rabi * laser.rabi;
    r2 / laser.denominator(gamma)
}

/// Doppler friction power Ė_c for thermal energy k_B·T on the axis.
///
/// Written with ρ_ee²/Ω² = Ω²/(4Δ²+Γ²+2Ω²)² so that Ω = 0 gives 0.
/// Negative for red detuning.
pub fn cooling_power(temperature: f64, laser: &LaserSetting, p: &ExperimentParams) -> Result<f64> {
    laser.check_cooling()?;
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::invalid(format!(
            "temperature must be >= 0, got {temperature}"
        )));
    }
    let k_eff = p.k_eff();
    let s = laser.denominator(p.gamma);
    let rho2_over_rabi2 = laser.rabi * laser.rabi / (s * s);
    Ok(
        8.0 * HBAR * k_eff * k_eff * laser.detuning * p.gamma * rho2_over_rabi2 * K_B * temperature
            / p.mass,
    )
}

/// Recoil plus anomalous heating power Ė_h. The anomalous rate enters as
/// ζ·ħω, i.e. quanta of the analysed mode per second.
pub fn heating_power(laser: &LaserSetting, p: &ExperimentParams, h: HeatingRate) -> f64 {
    let rho = excited_state_population(laser, p.gamma);
    let k = p.wavenumber();
    let k_eff = p.k_eff();
    let recoil = HBAR * HBAR * (k_eff * k_eff + p.xi * k * k);
    rho * p.gamma / (2.0 * p.mass) * recoil + h.quanta_per_second() * p.quantum_energy()
}

/// Split of the equilibrium temperature into T = T_recoil + ζ·dT/dζ.
///
/// Returns `(T_recoil, dT/dζ)` with the slope in K per (quanta/s). The slope
/// diverges as Ω → 0; for Ω = 0 it is reported as +∞.
pub fn equilibrium_components(laser: &LaserSetting, p: &ExperimentParams) -> Result<(f64, f64)> {
    laser.check_cooling()?;
    let k_eff2 = p.k_eff().powi(2);
    let k2 = p.wavenumber().powi(2);
    let s = laser.denominator(p.gamma);
    let abs_det = laser.detuning.abs();
    let recoil = HBAR * s * (k_eff2 + p.xi * k2) / (16.0 * abs_det * k_eff2 * K_B);
    let rabi2 = laser.rabi * laser.rabi;
    let slope = if rabi2 > 0.0 {
        p.trap_omega * p.mass * s * s / (8.0 * k_eff2 * abs_det * p.gamma * rabi2 * K_B)
    } else {
        f64::INFINITY
    };
    Ok((recoil, slope))
}

/// Temperature at which Ė_c + Ė_h = 0.
pub fn equilibrium_temperature(
    laser: &LaserSetting,
    p: &ExperimentParams,
    h: HeatingRate,
) -> Result<f64> {
    let zeta = h.quanta_per_second();
    if laser.rabi == 0.0 && zeta > 0.0 {
        return Err(Error::invalid(
            "no scattering at zero Rabi frequency: anomalous heating cannot be balanced",
        ));
    }
    let (recoil, slope) = equilibrium_components(laser, p)?;
    if zeta == 0.0 {
        Ok(recoil)
    } else {
        Ok(recoil + zeta * slope)
    }
}

/// k_B·T_D = ħΓ/2.
pub fn doppler_limit(gamma: f64) -> f64 {
    HBAR * gamma / (2.0 * K_B)
}
