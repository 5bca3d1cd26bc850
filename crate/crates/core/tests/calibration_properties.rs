mod common;

use common::{reference_g2, reference_g2_histogram, rel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermoscope::calibration::*;

fn pair() -> impl Strategy<Value = DisplacementPair> {
    (
        any::<bool>(),
        100.0..2000.0f64,
        1.0..10.0f64,
        80.0..150.0f64,
        0.005..0.05f64,
        any::<bool>(),
    )
        .prop_map(|(x, obj_nm, obj_err_nm, m, rel_err, flip)| {
            let sign = if flip { -1.0 } else { 1.0 };
            let object = sign * obj_nm * 1e-9;
            DisplacementPair {
                axis: if x { Axis::X } else { Axis::Y },
                object_shift: object,
                object_shift_err: obj_err_nm * 1e-9,
                image_shift: m * object,
                image_shift_err: rel_err * m * object.abs(),
            }
        })
}

fn pairs() -> impl Strategy<Value = Vec<DisplacementPair>> {
    (prop::collection::vec(pair(), 0..6), pair(), pair()).prop_map(|(mut v, mut a, mut b)| {
        a.axis = Axis::X;
        b.axis = Axis::Y;
        v.push(a);
        v.push(b);
        v
    })
}

proptest! {
    #[test]
    fn magnification_ignores_order(v in pairs(), seed in any::<u64>()) {
        let a = magnification_from_pairs(&v).unwrap();
        let mut shuffled = v.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let b = magnification_from_pairs(&shuffled).unwrap();
        prop_assert!(rel(b.combined, a.combined) < 1e-12);
        prop_assert!(rel(b.combined_err, a.combined_err) < 1e-12);
    }

    #[test]
    fn magnification_ignores_length_unit(v in pairs(), scale in 1e-3..1e3f64) {
        let a = magnification_from_pairs(&v).unwrap();
        let scaled: Vec<_> = v
            .iter()
            .map(|p| DisplacementPair {
                object_shift: p.object_shift * scale,
                object_shift_err: p.object_shift_err * scale,
                image_shift: p.image_shift * scale,
                image_shift_err: p.image_shift_err * scale,
                ..*p
            })
            .collect();
        let b = magnification_from_pairs(&scaled).unwrap();
        prop_assert!(rel(b.x.value, a.x.value) < 1e-12 && rel(b.y.value, a.y.value) < 1e-12);
        prop_assert!(rel(b.combined_err, a.combined_err) < 1e-12);
    }

    #[test]
    fn rabi_conversion_inverts_generalized_frequency(omega in 1e3..1e10f64, det in -1e10..1e10f64) {
        let generalized = omega.hypot(det);
        let back = on_resonance_rabi(generalized, det).unwrap();
        prop_assert!(rel(back, omega) < 1e-12 || (back - omega).abs() < 1e-12 * generalized,
            "{back} vs {omega}");
    }
}

#[test]
fn g2_noiseless_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for draw in 0..100 {
        let bg = rng.random_range(0.8..1.2);
        let truth = G2Params {
            bg,
            amplitude: bg * rng.random_range(0.5..2.0),
            omega_prime: rng.random_range(0.05..1.0) * 1e9,
            t0: rng.random_range(20.0..40.0) * 1e-9,
            tau: rng.random_range(2.0..50.0) * 1e-9,
        };
        let hist = synthesize_g2(&truth, 0.0, 0.25e-9, 1600, None, 0).unwrap();
        let fit = fit_g2(&hist, None).unwrap_or_else(|e| panic!("draw {draw} {truth:?}: {e}"));
        for (name, got, want) in [
            ("bg", fit.bg, truth.bg),
            ("amplitude", fit.amplitude, truth.amplitude),
            ("omega_prime", fit.omega_prime, truth.omega_prime),
            ("t0", fit.t0, truth.t0),
            ("tau", fit.tau, truth.tau),
        ] {
            assert!(
                rel(got, want) < 1e-3,
                "draw {draw}: {name} {got} vs {want} ({truth:?})"
            );
        }
    }
}

#[test]
fn g2_poisson_coverage() {
    let truth = reference_g2();
    let hits = (0..100)
        .filter(|&s| {
            let fit = fit_g2(&reference_g2_histogram(Some(10_000), s), None).unwrap();
            (fit.omega_prime - truth.omega_prime).abs() < 3.0 * fit.omega_prime_err
        })
        .count();
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn g2_reduced_chi2_distribution() {
    let inside = (0..200)
        .filter(|&s| {
            let chi2 = fit_g2(&reference_g2_histogram(Some(10_000), 500 + s), None)
                .unwrap()
                .reduced_chi2;
            (0.7..=1.3).contains(&chi2)
        })
        .count();
    assert!(inside >= 190, "{inside}/200");
}
