//! Camera side of the measurement: PSF broadening, frame synthesis and the
//! rotate → project → fit width pipeline.

mod frame;
mod gaussian;
mod rotate;
mod synth;

use serde::{Deserialize, Serialize};

pub use frame::ImageFrame;
pub use gaussian::{
    fit_gaussian_1d, fit_gaussian_1d_weighted, moment_seed, project_columns, project_rows,
    FitWeights, GaussianFit1D, GaussianGuess,
};
pub use rotate::{lattice_projection, rotate_45_nearest, rotate_nearest, Rotated};
pub use synth::{auto_frame_size, synthesize_ion_image, synthesize_spot, FrameLayout};

use crate::error::{Error, Result};

/// Imaging system and camera. Lengths in m at the camera plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagingConfig {
    pub magnification: f64,
    /// RMS width of the point-spread function at the camera.
    pub sigma_psf: f64,
    /// Counts per pixel.
    pub background: f64,
    /// Counts per detected photon.
    pub gain: f64,
    /// Counts RMS.
    pub read_noise: f64,
    /// Camera pixel size, m.
    pub pixel_pitch: f64,
    /// Multiplication excess noise factor; 1 disables it.
    pub excess_noise_factor: f64,
    /// Standard error of `magnification`.
    pub magnification_err: f64,
    /// Standard error of `sigma_psf`, m.
    pub sigma_psf_err: f64,
}

impl Default for ImagingConfig {
    fn default() -> Self {
        Self {
            magnification: 113.0,
            sigma_psf: 6.6e-6,
            background: 10.0,
            gain: 1.0,
            read_noise: 2.0,
            pixel_pitch: 4e-6,
            excess_noise_factor: std::f64::consts::SQRT_2,
            magnification_err: 2.0,
            sigma_psf_err: 2.7e-6,
        }
    }
}

impl ImagingConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("magnification", self.magnification > 0.0),
            ("sigma_psf", self.sigma_psf >= 0.0),
            ("background", self.background >= 0.0),
            ("gain", self.gain > 0.0),
            ("read_noise", self.read_noise >= 0.0),
            ("pixel_pitch", self.pixel_pitch > 0.0),
            ("excess_noise_factor", self.excess_noise_factor >= 1.0),
            ("magnification_err", self.magnification_err >= 0.0),
            ("sigma_psf_err", self.sigma_psf_err >= 0.0),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(Error::invalid(format!(
                    "imaging config: {name} out of range"
                )));
            }
        }
        let all = [
            self.magnification,
            self.sigma_psf,
            self.background,
            self.gain,
            self.read_noise,
            self.pixel_pitch,
            self.excess_noise_factor,
            self.magnification_err,
            self.sigma_psf_err,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("imaging config: non-finite value"));
        }
        Ok(())
    }
}

/// σ = √(σ_PSF² + M²σ_i²).
pub fn composite_width(sigma_ion: f64, cfg: &ImagingConfig) -> Result<f64> {
    if !(sigma_ion.is_finite() && sigma_ion >= 0.0) {
        return Err(Error::invalid(format!(
            "ion spread must be >= 0, got {sigma_ion}"
        )));
    }
    Ok(cfg.sigma_psf.hypot(cfg.magnification * sigma_ion))
}

/// σ_i = √(σ² − σ_PSF²)/M. Fails when the image is no wider than the PSF.
pub fn extract_ion_width(sigma_image: f64, cfg: &ImagingConfig) -> Result<f64> {
    if !(sigma_image.is_finite() && sigma_image > 0.0) {
        return Err(Error::invalid(format!(
            "image width must be > 0, got {sigma_image}"
        )));
    }
    if sigma_image <= cfg.sigma_psf {
        return Err(Error::Deconvolution {
            sigma_image,
            sigma_psf: cfg.sigma_psf,
        });
    }
    let excess = (sigma_image - cfg.sigma_psf) * (sigma_image + cfg.sigma_psf);
    Ok(excess.sqrt() / cfg.magnification)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthOptions {
    /// Rotation applied before projecting, rad.
    pub angle: f64,
    pub weights: FitWeights,
}

impl Default for WidthOptions {
    fn default() -> Self {
        Self {
            angle: std::f64::consts::FRAC_PI_4,
            weights: FitWeights::Uniform,
        }
    }
}

/// Width of the spot along the rotated horizontal axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthMeasurement {
    /// m at the camera plane.
    pub sigma: f64,
    pub sigma_err: f64,
    pub fit: GaussianFit1D,
}

pub fn measure_width(frame: &ImageFrame) -> Result<WidthMeasurement> {
    measure_width_with(frame, &WidthOptions::default())
}

/// Turn the frame, project onto columns and fit.
///
/// At multiples of 45° the turn is exact ([`lattice_projection`]). Other
/// angles go through nearest-neighbour resampling, cropped to the window
/// fully covered by source pixels so that a uniform background still
/// projects to a constant; resampling duplicates and drops pixels, which
/// correlates neighbouring columns and makes the reported error optimistic.
///
/// The measured width includes the pixel footprint: σ² + pitch²/12.
pub fn measure_width_with(frame: &ImageFrame, opts: &WidthOptions) -> Result<WidthMeasurement> {
    if frame.is_empty() {
        return Err(Error::invalid("empty frame"));
    }
    let (profile, spacing) = match lattice_projection(frame, opts.angle) {
        Some(found) => found,
        None => (
            project_columns(&rotate_nearest(frame, opts.angle)?.cropped_to_valid()?),
            1.0,
        ),
    };
    let fit = fit_gaussian_1d_weighted(&profile, None, opts.weights)?;
    let scale = spacing * frame.pixel_pitch();
    Ok(WidthMeasurement {
        sigma: fit.sigma * scale,
        sigma_err: fit.sigma_err * scale,
        fit,
    })
}

/// Spot centre from Gaussian fits to the column and row projections, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpotCenter {
    pub x: f64,
    pub x_err: f64,
    pub y: f64,
    pub y_err: f64,
}

pub fn spot_center(frame: &ImageFrame) -> Result<SpotCenter> {
    let fx = fit_gaussian_1d(&project_columns(frame), None)?;
    let fy = fit_gaussian_1d(&project_rows(frame), None)?;
    let p = frame.pixel_pitch();
    Ok(SpotCenter {
        x: fx.center * p,
        x_err: fx.center_err * p,
        y: fy.center * p,
        y_err: fy.center_err * p,
    })
}
