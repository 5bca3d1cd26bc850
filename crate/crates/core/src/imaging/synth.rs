//! Synthetic camera frames of a thermal ion.
//!
//! Photon arrival positions are drawn from an isotropic Gaussian of the
//! composite image width and binned onto the pixel grid, so the per-pixel
//! photon number is Poisson-distributed by construction. Electron
//! multiplication is not simulated register by register; its excess noise
//! is folded in as extra Gaussian variance `(F² − 1)·n` with the configured
//! excess noise factor `F` (√2 for a high-gain EM-CCD).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};

use super::frame::ImageFrame;
use super::{composite_width, ImagingConfig};
use crate::error::{Error, Result};
use crate::physics::ThermalState;

/// Frame size and spot placement. `None` sizes the frame automatically.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameLayout {
    pub size: Option<(usize, usize)>,
    /// Spot offset from the geometric frame centre, in pixels.
    pub offset: (f64, f64),
}

/// Odd square frame holding ±6σ of the spot even after a 45° turn and
/// crop to the valid window.
pub fn auto_frame_size(sigma_camera: f64, pixel_pitch: f64) -> usize {
    let half = (6.0 * std::f64::consts::SQRT_2 * sigma_camera / pixel_pitch).ceil() as usize + 2;
    (2 * half + 1).max(33)
}

pub fn synthesize_ion_image(
    state: &ThermalState,
    cfg: &ImagingConfig,
    photons: u64,
    rng_seed: u64,
) -> Result<ImageFrame> {
    let sigma = composite_width(state.sigma_ion, cfg)?;
    synthesize_spot(sigma, cfg, photons, rng_seed, FrameLayout::default())
}

/// Frame of a Gaussian spot with RMS width `sigma_camera` (m, camera plane).
pub fn synthesize_spot(
    sigma_camera: f64,
    cfg: &ImagingConfig,
    photons: u64,
    rng_seed: u64,
    layout: FrameLayout,
) -> Result<ImageFrame> {
    cfg.validate()?;
    if !(sigma_camera.is_finite() && sigma_camera >= 0.0) {
        return Err(Error::invalid(format!(
            "spot width must be >= 0, got {sigma_camera}"
        )));
    }
    let pitch = cfg.pixel_pitch;
    let (w, h) = layout.size.unwrap_or_else(|| {
        let n = auto_frame_size(sigma_camera, pitch);
        (n, n)
    });
    if w == 0 || h == 0 {
        return Err(Error::invalid("frame must be nonempty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let mut electrons = vec![0.0f64; w * h];
    let cx = (w as f64 - 1.0) / 2.0 + layout.offset.0;
    let cy = (h as f64 - 1.0) / 2.0 + layout.offset.1;
    let sigma_px = sigma_camera / pitch;
    for _ in 0..photons {
        let gx: f64 = rng.sample(StandardNormal);
        let gy: f64 = rng.sample(StandardNormal);
        let x = (cx + sigma_px * gx).round();
        let y = (cy + sigma_px * gy).round();
        if x >= 0.0 && y >= 0.0 && x < w as f64 && y < h as f64 {
            electrons[y as usize * w + x as usize] += 1.0;
        }
    }

    let bg_photons = cfg.background / cfg.gain;
    let bg = if bg_photons > 0.0 {
        Some(Poisson::new(bg_photons).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };
    let excess_var = cfg.excess_noise_factor.powi(2) - 1.0;
    let read = Normal::new(0.0, cfg.read_noise).map_err(|e| Error::invalid(e.to_string()))?;

    let counts = electrons
        .into_iter()
        .map(|signal| {
            let mut n = signal;
            if let Some(bg) = &bg {
                n += bg.sample(&mut rng);
            }
            let mut e = n;
            if excess_var > 0.0 && n > 0.0 {
                let g: f64 = rng.sample(StandardNormal);
                e += (excess_var * n).sqrt() * g;
            }
            let mut c = cfg.gain * e;
            if cfg.read_noise > 0.0 {
                c += read.sample(&mut rng);
            }
            c.max(0.0)
        })
        .collect();
    ImageFrame::new(counts, w, h, pitch)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_cfg() -> ImagingConfig {
        ImagingConfig {
            background: 0.0,
            read_noise: 0.0,
            excess_noise_factor: 1.0,
            ..ImagingConfig::default()
        }
    }

    #[test]
    fn empty_exposure_is_black() {
        let state = ThermalState {
            nbar: 97.0,
            temperature: 950e-6,
            sigma_ion: 0.166e-6,
        };
        let frame = synthesize_ion_image(&state, &quiet_cfg(), 0, 1).unwrap();
        assert!(frame.counts().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn same_seed_same_frame() {
        let cfg = ImagingConfig::default();
        let a = synthesize_spot(20e-6, &cfg, 10_000, 42, FrameLayout::default()).unwrap();
        let b = synthesize_spot(20e-6, &cfg, 10_000, 42, FrameLayout::default()).unwrap();
        let c = synthesize_spot(20e-6, &cfg, 10_000, 43, FrameLayout::default()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn photon_number_is_kept_without_noise() {
        let frame = synthesize_spot(8e-6, &quiet_cfg(), 5_000, 3, FrameLayout::default()).unwrap();
        assert_eq!(frame.total(), 5_000.0);
    }

    #[test]
    fn large_exposure_matches_width() {
        let sigma = 19.9e-6;
        let frame =
            synthesize_spot(sigma, &quiet_cfg(), 1_000_000, 7, FrameLayout::default()).unwrap();
        let (w, h) = (frame.width(), frame.height());
        let total = frame.total();
        let (mut mx, mut my) = (0.0, 0.0);
        for y in 0..h {
            for x in 0..w {
                let c = frame.get(x, y);
                mx += c * x as f64;
                my += c * y as f64;
            }
        }
        mx /= total;
        my /= total;
        let mut var = 0.0;
        for y in 0..h {
            for x in 0..w {
                let c = frame.get(x, y);
                var += c * ((x as f64 - mx).powi(2) + (y as f64 - my).powi(2));
            }
        }
        let rms = (var / (2.0 * total)).sqrt() * frame.pixel_pitch();
        assert!((rms / sigma - 1.0).abs() < 0.01, "rms {rms}");
    }
}
