//! Acceptance criteria 1–10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{
    rabi_series, reference_g2, reference_g2_histogram, reference_imaging, rel, scan_detunings,
    yb174, DETUNING,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thermoscope::calibration::{
    fit_g2, magnification_from_pairs, on_resonance_rabi, Axis, DisplacementPair,
};
use thermoscope::constants::{AMU, TWO_PI};
use thermoscope::imaging::{
    composite_width, fit_gaussian_1d, measure_width, synthesize_spot, FrameLayout, ImageFrame,
};
use thermoscope::inference::{
    fit_heating_rate, minimum_measurable_temperature, model_width, ScanDataset, ScanKind, ScanPoint,
};
use thermoscope::physics::{
    cooling_power, doppler_limit, equilibrium_temperature, heating_power, ExperimentParams,
    HeatingRate, LaserSetting, ThermalState,
};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn doppler() -> Outcome {
    let t = doppler_limit(TWO_PI * 19.6e6);
    outcome(
        rel(t, 470e-6) < 0.01,
        format!("T_D = {:.1} uK (470 ± 1%)", t * 1e6),
    )
}

fn thermal_state() -> Outcome {
    let s = ThermalState::from_nbar(97.0, &yb174()).unwrap();
    outcome(
        rel(s.sigma_ion, 0.166e-6) < 0.01 && rel(s.temperature, 950e-6) < 0.01,
        format!(
            "sigma_i = {:.4} um, T = {:.1} uK (0.166 um, 950 uK, ± 1%)",
            s.sigma_ion * 1e6,
            s.temperature * 1e6
        ),
    )
}

fn magnification() -> Outcome {
    let pair = |axis, obj: f64, img: f64| DisplacementPair {
        axis,
        object_shift: obj * 1e-9,
        object_shift_err: 2e-9,
        image_shift: img * 1e-6,
        image_shift_err: 1.8e-6,
    };
    let r = magnification_from_pairs(&[pair(Axis::X, 635.0, 74.6), pair(Axis::Y, 665.0, 72.5)])
        .unwrap();
    outcome(
        (r.x.value - 118.0).abs() <= 3.0
            && (r.y.value - 109.0).abs() <= 3.0
            && (r.combined - 113.0).abs() <= 2.0,
        format!(
            "Mx = {:.2} ± {:.2}, My = {:.2} ± {:.2}, M = {:.2} ± {:.2} (118 ± 3, 109 ± 3, 113 ± 2)",
            r.x.value, r.x.err, r.y.value, r.y.err, r.combined, r.combined_err
        ),
    )
}

fn rabi_conversion() -> Outcome {
    let omega = on_resonance_rabi(439e6, -61.6e6).unwrap() / 1e6;
    outcome(
        (omega - 435.0).abs() <= 2.0,
        format!("Omega = {omega:.2} /us (435 ± 2)"),
    )
}

fn g2_oracle() -> Outcome {
    let truth = reference_g2();
    let fit = fit_g2(&reference_g2_histogram(None, 0), None).unwrap();
    let worst = [
        rel(fit.bg, truth.bg),
        rel(fit.amplitude, truth.amplitude),
        rel(fit.omega_prime, truth.omega_prime),
        rel(fit.t0, truth.t0),
        rel(fit.tau, truth.tau),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let hits = (0..100)
        .filter(
            |&s| match fit_g2(&reference_g2_histogram(Some(10_000), s), None) {
                Ok(f) => (f.omega_prime - truth.omega_prime).abs() < 3.0 * f.omega_prime_err,
                Err(_) => false,
            },
        )
        .count();
    outcome(
        worst < 1e-3 && hits >= 95,
        format!("noiseless worst rel. error {worst:.1e} (< 1e-3), Poisson coverage {hits}/100 within 3 SE (>= 95)"),
    )
}

fn equilibrium() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p = ExperimentParams {
            mass: rng.random_range(1.0..300.0) * AMU,
            gamma: TWO_PI * rng.random_range(1.0..50.0) * 1e6,
            wavelength: rng.random_range(200.0..1000.0) * 1e-9,
            trap_omega: TWO_PI * rng.random_range(0.05..5.0) * 1e6,
            alpha: rng.random_range(0.0..1.4),
            xi: rng.random_range(0.05..=1.0),
        };
        let laser = LaserSetting::new(
            rng.random_range(0.001..5.0) * p.gamma,
            -rng.random_range(0.01..5.0) * p.gamma,
        );
        let h = HeatingRate::per_second(rng.random_range(0.0..1e5)).unwrap();
        let t = equilibrium_temperature(&laser, &p, h).unwrap();
        let heat = heating_power(&laser, &p, h);
        let residual = (cooling_power(t, &laser, &p).unwrap() + heat).abs() / heat.abs();
        worst = worst.max(residual);
    }
    outcome(
        worst < 1e-9,
        format!("worst relative residual {worst:.1e} over 1000 draws (< 1e-9)"),
    )
}

/// The simulate → analyze → fit pipeline on in-memory PGM frames.
fn round_trip(kind: ScanKind, fixed: f64, controls: &[f64], zeta_ms: f64) -> (usize, f64) {
    let p = yb174();
    let cfg = reference_imaging();
    let zeta = HeatingRate::per_ms(zeta_ms).unwrap();
    let mut hits = 0;
    let mut pulls = Vec::new();
    for rep in 0..100u64 {
        let points = controls
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let t = equilibrium_temperature(&kind.laser(c, fixed), &p, zeta).unwrap();
                let state = ThermalState::from_temperature(t, &p).unwrap();
                let sigma = composite_width(state.sigma_ion, &cfg).unwrap();
                let seed = (20_151_118 + rep) ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                let frame =
                    synthesize_spot(sigma, &cfg, 100_000, seed, FrameLayout::default()).unwrap();
                let mut pgm = Vec::new();
                frame.encode_pgm(&mut pgm).unwrap();
                let frame = ImageFrame::decode_pgm(pgm.as_slice(), cfg.pixel_pitch).unwrap();
                let m = measure_width(&frame).unwrap();
                ScanPoint {
                    control: c,
                    sigma: m.sigma,
                    sigma_err: m.sigma_err,
                }
            })
            .collect();
        let ds = ScanDataset::new(kind, fixed, points);
        let fit = fit_heating_rate(&ds, &p, cfg.magnification).unwrap();
        let pull = (fit.zeta.quanta_per_second() - zeta.quanta_per_second()) / fit.zeta_err;
        pulls.push(pull);
        if pull.abs() < 2.0 {
            hits += 1;
        }
    }
    let mean = pulls.iter().sum::<f64>() / pulls.len() as f64;
    let sd =
        (pulls.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (pulls.len() as f64 - 1.0)).sqrt();
    (hits, sd)
}

fn end_to_end() -> Outcome {
    let p = yb174();
    let (rabi, rabi_sd) = round_trip(ScanKind::RabiScan, DETUNING, &rabi_series(&p), 0.38);
    let (det, det_sd) = round_trip(
        ScanKind::DetuningScan,
        0.2 * p.gamma,
        &scan_detunings(),
        0.22,
    );
    outcome(
        rabi >= 90 && det >= 90,
        format!(
            "zeta within 2 SE: Rabi scan {rabi}/100 (pull sd {rabi_sd:.2}), detuning scan {det}/100 (pull sd {det_sd:.2}) (>= 90 each)"
        ),
    )
}

fn model_shape() -> Outcome {
    let p = yb174();
    let zeta = HeatingRate::per_ms(0.38).unwrap();
    let width = |r: f64| {
        model_width(
            r * p.gamma,
            ScanKind::RabiScan,
            DETUNING,
            zeta,
            6.6e-6,
            113.0,
            &p,
        )
        .unwrap()
    };
    let grid: Vec<f64> = (0..=400)
        .map(|i| 0.001 * 3300f64.powf(i as f64 / 400.0))
        .collect();
    let values: Vec<f64> = grid.iter().map(|&r| width(r)).collect();
    let (imin, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let interior = imin > 0 && imin < grid.len() - 1;
    let ratio = width(0.001) / width(0.2);
    outcome(
        interior && ratio > 3.0,
        format!(
            "minimum at {:.3} Gamma, sigma(0.001 Gamma)/sigma(0.2 Gamma) = {ratio:.1} (> 3)",
            grid[imin]
        ),
    )
}

fn minimum_temperature() -> Outcome {
    let t = minimum_measurable_temperature(0.5, 0.0, &reference_imaging(), &yb174()).unwrap();
    let ratio = t / 200e-6;
    outcome(
        (1.0 / 1.5..=1.5).contains(&ratio),
        format!(
            "T(dT/T = 0.5) = {:.0} uK (200 uK within a factor 1.5)",
            t * 1e6
        ),
    )
}

fn fitter_chi2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 201;
    let gauss_inside = (0..200)
        .filter(|_| {
            let (a, c, s, b) = (
                rng.random_range(50.0..500.0),
                rng.random_range(80.0..120.0),
                rng.random_range(5.0..20.0),
                rng.random_range(0.0..20.0),
            );
            let profile: Vec<f64> = (0..n)
                .map(|i| {
                    let x = i as f64;
                    let noise: f64 = rng.sample(StandardNormal);
                    a * (-(x - c).powi(2) / (2.0 * s * s)).exp() + b + noise
                })
                .collect();
            fit_gaussian_1d(&profile, None).is_ok_and(|f| (0.7..=1.3).contains(&f.reduced_chi2))
        })
        .count();
    let g2_inside = (0..200)
        .filter(|&s| {
            fit_g2(&reference_g2_histogram(Some(10_000), 1000 + s), None)
                .is_ok_and(|f| (0.7..=1.3).contains(&f.reduced_chi2))
        })
        .count();
    outcome(
        gauss_inside >= 190 && g2_inside >= 190,
        format!("reduced chi2 in [0.7, 1.3]: Gaussian {gauss_inside}/200, g2 {g2_inside}/200 (>= 190 each)"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("Doppler limit", doppler),
        ("thermal state regression", thermal_state),
        ("magnification", magnification),
        ("Rabi conversion", rabi_conversion),
        ("g2 fit oracle", g2_oracle),
        ("equilibrium consistency", equilibrium),
        ("end-to-end round trip", end_to_end),
        ("model shape", model_shape),
        ("minimum measurable temperature", minimum_temperature),
        ("fitter chi-square coverage", fitter_chi2),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    } else {
        println!("all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    }
}
