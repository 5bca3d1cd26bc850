//! Magnification from controlled displacements and Rabi frequency from
//! photon correlations.

mod g2;
mod magnification;

pub use g2::{fit_g2, g2_model, synthesize_g2, G2FitResult, G2Histogram, G2Params};
pub use magnification::{
    displacement_from_frames, magnification_from_pairs, Axis, AxisMagnification, DisplacementPair,
    MagnificationResult,
};

use crate::error::{Error, Result};

/// On-resonance Rabi frequency Ω = √(Ω′² − Δ²) from the generalized Rabi
/// frequency measured at detuning Δ.
pub fn on_resonance_rabi(omega_prime: f64, detuning: f64) -> Result<f64> {
    let (op, d) = (omega_prime.abs(), detuning.abs());
    if !(op.is_finite() && d.is_finite()) {
        return Err(Error::invalid("non-finite Rabi or detuning"));
    }
    if op < d {
        return Err(Error::ImaginaryRabi {
            omega_prime,
            detuning,
        });
    }
    Ok(((op - d) * (op + d)).sqrt())
}

/// First-order error of [`on_resonance_rabi`] for independent errors on Ω′
/// and Δ. Infinite at Ω′ = |Δ|.
pub fn on_resonance_rabi_err(
    omega_prime: f64,
    omega_prime_err: f64,
    detuning: f64,
    detuning_err: f64,
) -> Result<f64> {
    let rabi = on_resonance_rabi(omega_prime, detuning)?;
    let a = omega_prime.abs() * omega_prime_err;
    let b = detuning.abs() * detuning_err;
    Ok(a.hypot(b) / rabi)
}

/// Ω ∝ √P, anchored at a calibration point.
pub fn rabi_from_power(power: f64, power_cal: f64, omega_cal: f64) -> Result<f64> {
    if !(power.is_finite() && power >= 0.0) {
        return Err(Error::invalid(format!("power must be >= 0, got {power}")));
    }
    if !(power_cal.is_finite() && power_cal > 0.0) {
        return Err(Error::invalid(format!(
            "calibration power must be > 0, got {power_cal}"
        )));
    }
    Ok(omega_cal * (power / power_cal).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TWO_PI;
    use approx::assert_relative_eq;

    #[test]
    fn rabi_conversion_examples() {
        // Ω′ = 439 µs⁻¹ at Δ = −Γ/2 = −61.6 µs⁻¹
        let omega = on_resonance_rabi(439e6, -61.6e6).unwrap();
        assert!((omega / 1e6 - 435.0).abs() < 2.0, "{omega}");
        assert_eq!(on_resonance_rabi(61.6e6, -61.6e6).unwrap(), 0.0);
        assert_eq!(on_resonance_rabi(439e6, 0.0).unwrap(), 439e6);
        assert!(matches!(
            on_resonance_rabi(50e6, -61.6e6),
            Err(Error::ImaginaryRabi { .. })
        ));
    }

    #[test]
    fn rabi_error_propagation() {
        // δΩ = Ω′δΩ′/Ω
        let e = on_resonance_rabi_err(439e6, 2e6, -61.6e6, 0.0).unwrap();
        let omega = on_resonance_rabi(439e6, -61.6e6).unwrap();
        assert_relative_eq!(e, 439e6 * 2e6 / omega, max_relative = 1e-12);
    }

    #[test]
    fn power_scaling_examples() {
        assert_eq!(rabi_from_power(50e-6, 50e-6, 435e6).unwrap(), 435e6);
        assert_relative_eq!(
            rabi_from_power(12.5e-6, 50e-6, 435e6).unwrap(),
            217.5e6,
            max_relative = 1e-15
        );
        let gamma = TWO_PI * 19.6e6;
        let p = 50e-6 * (0.23 * gamma / 435e6).powi(2);
        assert_relative_eq!(
            rabi_from_power(p, 50e-6, 435e6).unwrap(),
            0.23 * gamma,
            max_relative = 1e-14
        );
        assert!(rabi_from_power(1e-6, 0.0, 1.0).is_err());
        assert!(rabi_from_power(-1e-6, 1e-6, 1.0).is_err());
    }
}
