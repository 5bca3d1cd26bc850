mod common;

use common::{reference_laser, yb174};
use proptest::prelude::*;
use thermoscope::constants::{AMU, HBAR, K_B, TWO_PI};
use thermoscope::physics::*;

fn params() -> impl Strategy<Value = ExperimentParams> {
    (
        1.0..300.0f64,
        1.0..50.0f64,
        200.0..1000.0f64,
        0.05..5.0f64,
        0.0..1.4f64,
        0.05..=1.0f64,
    )
        .prop_map(|(m, g, l, w, a, xi)| ExperimentParams {
            mass: m * AMU,
            gamma: TWO_PI * g * 1e6,
            wavelength: l * 1e-9,
            trap_omega: TWO_PI * w * 1e6,
            alpha: a,
            xi,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn excitation_bounded_monotone_symmetric(rabi in 0.0..1e3f64, det in -1e3..1e3f64, gamma in 0.01..100.0f64) {
        let rho = excited_state_population(&LaserSetting::new(rabi, det), gamma);
        prop_assert!((0.0..0.5).contains(&rho));
        let mirrored = excited_state_population(&LaserSetting::new(rabi, -det), gamma);
        prop_assert_eq!(rho, mirrored);
        if rabi > 0.0 {
            let more = excited_state_population(&LaserSetting::new(rabi * 1.01, det), gamma);
            prop_assert!(more > rho);
        }
    }

    #[test]
    fn equilibrium_increases_with_heating(p in params(), r in 0.001..5.0f64, d in 0.01..5.0f64, z in 0.0..1e5f64) {
        let laser = LaserSetting::new(r * p.gamma, -d * p.gamma);
        let lo = equilibrium_temperature(&laser, &p, HeatingRate::per_second(z).unwrap()).unwrap();
        let hi = equilibrium_temperature(&laser, &p, HeatingRate::per_second(z * 1.5 + 1.0).unwrap()).unwrap();
        prop_assert!(lo > 0.0 && hi > lo);
    }

    #[test]
    fn thermal_state_round_trip(t in 1e-6..1.0f64) {
        let p = yb174();
        let a = ThermalState::from_temperature(t, &p).unwrap();
        let b = ThermalState::from_nbar(a.nbar, &p).unwrap();
        let c = ThermalState::from_sigma(b.sigma_ion, &p).unwrap();
        let d = ThermalState::from_nbar(c.nbar, &p).unwrap();
        prop_assert!(((d.temperature - t) / t).abs() < 1e-9);
        prop_assert!(((c.nbar - a.nbar) / a.nbar).abs() < 1e-9);
    }
}

#[test]
fn balance_residual_over_random_configurations() {
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(1000));
    let strategy = (params(), 0.001..5.0f64, 0.01..5.0f64, 0.0..1e5f64);
    runner
        .run(&strategy, |(p, r, d, z)| {
            let laser = LaserSetting::new(r * p.gamma, -d * p.gamma);
            let h = HeatingRate::per_second(z).unwrap();
            let t = equilibrium_temperature(&laser, &p, h).unwrap();
            let heat = heating_power(&laser, &p, h);
            let cool = cooling_power(t, &laser, &p).unwrap();
            prop_assert!(
                (cool + heat).abs() < 1e-9 * heat.abs(),
                "cool {cool}, heat {heat}"
            );
            Ok(())
        })
        .unwrap();
}

#[test]
fn temperature_diverges_at_weak_drive() {
    let p = yb174();
    let h = HeatingRate::per_ms(0.38).unwrap();
    let det = reference_laser(&p).detuning;
    let weak = equilibrium_temperature(&LaserSetting::new(1e-3 * p.gamma, det), &p, h).unwrap();
    let good = equilibrium_temperature(&LaserSetting::new(0.2 * p.gamma, det), &p, h).unwrap();
    assert!(weak > 100.0 * good, "{weak} vs {good}");
}

#[test]
fn zero_heating_weak_drive_limit() {
    let p = yb174();
    let det = reference_laser(&p).detuning;
    let t = equilibrium_temperature(
        &LaserSetting::new(1e-6 * p.gamma, det),
        &p,
        HeatingRate::ZERO,
    )
    .unwrap();
    let cos2 = p.alpha.cos().powi(2);
    let analytic = HBAR * (4.0 * det * det + p.gamma * p.gamma) * (1.0 + p.xi / cos2)
        / (16.0 * det.abs() * K_B);
    assert!(
        ((t - analytic) / analytic).abs() < 1e-6,
        "{t} vs {analytic}"
    );
}
