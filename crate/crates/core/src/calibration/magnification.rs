use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{spot_center, ImageFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// One controlled move of the ion and the resulting move of its image.
/// All lengths in m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementPair {
    pub axis: Axis,
    pub object_shift: f64,
    pub object_shift_err: f64,
    pub image_shift: f64,
    pub image_shift_err: f64,
}

impl DisplacementPair {
    fn ratio(&self) -> Result<(f64, f64)> {
        if self.object_shift == 0.0 || !self.object_shift.is_finite() {
            return Err(Error::invalid("object shift must be nonzero"));
        }
        if !(self.object_shift_err >= 0.0 && self.image_shift_err >= 0.0) {
            return Err(Error::invalid("shift uncertainties must be >= 0"));
        }
        let r = (self.image_shift / self.object_shift).abs();
        let rel = (self.image_shift_err / self.image_shift)
            .hypot(self.object_shift_err / self.object_shift);
        Ok((r, r * rel))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisMagnification {
    pub value: f64,
    pub err: f64,
    pub n_pairs: usize,
    /// Indices (into the input list) of pairs more than 5σ from the mean.
    pub outliers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnificationResult {
    pub x: AxisMagnification,
    pub y: AxisMagnification,
    /// √((M_x² + M_y²)/2).
    pub combined: f64,
    pub combined_err: f64,
}

impl MagnificationResult {
    pub fn consistent(&self) -> bool {
        self.x.outliers.is_empty() && self.y.outliers.is_empty()
    }
}

fn axis_mean(pairs: &[DisplacementPair], axis: Axis) -> Result<AxisMagnification> {
    let mut items = Vec::new();
    for (i, p) in pairs.iter().enumerate().filter(|(_, p)| p.axis == axis) {
        let (r, e) = p.ratio()?;
        items.push((i, r, e));
    }
    if items.is_empty() {
        return Err(Error::invalid(format!(
            "no displacement pair for axis {axis:?}"
        )));
    }
    let (value, err) = if items.iter().all(|&(_, _, e)| e > 0.0) {
        let wsum: f64 = items.iter().map(|&(_, _, e)| 1.0 / (e * e)).sum();
        let mean = items.iter().map(|&(_, r, e)| r / (e * e)).sum::<f64>() / wsum;
        (mean, wsum.sqrt().recip())
    } else {
        // exact pairs: plain mean, no error
        let mean = items.iter().map(|&(_, r, _)| r).sum::<f64>() / items.len() as f64;
        (mean, 0.0)
    };
    let outliers = items
        .iter()
        .filter(|&&(_, r, e)| items.len() > 1 && (r - value).abs() > 5.0 * e)
        .map(|&(i, _, _)| i)
        .collect();
    Ok(AxisMagnification {
        value,
        err,
        n_pairs: items.len(),
        outliers,
    })
}

/// Per-axis inverse-variance mean of |image shift / object shift| and their
/// quadrature mean, with first-order errors.
pub fn magnification_from_pairs(pairs: &[DisplacementPair]) -> Result<MagnificationResult> {
    let x = axis_mean(pairs, Axis::X)?;
    let y = axis_mean(pairs, Axis::Y)?;
    let combined = ((x.value * x.value + y.value * y.value) / 2.0).sqrt();
    let dx = x.value / (2.0 * combined) * x.err;
    let dy = y.value / (2.0 * combined) * y.err;
    Ok(MagnificationResult {
        combined_err: dx.hypot(dy),
        x,
        y,
        combined,
    })
}

/// Builds a pair from two frames of the ion before and after a stage move,
/// using Gaussian-fitted spot centres.
pub fn displacement_from_frames(
    before: &ImageFrame,
    after: &ImageFrame,
    axis: Axis,
    object_shift: f64,
    object_shift_err: f64,
) -> Result<DisplacementPair> {
    let a = spot_center(before)?;
    let b = spot_center(after)?;
    let (shift, err) = match axis {
        Axis::X => (b.x - a.x, a.x_err.hypot(b.x_err)),
        Axis::Y => (b.y - a.y, a.y_err.hypot(b.y_err)),
    };
    Ok(DisplacementPair {
        axis,
        object_shift,
        object_shift_err,
        image_shift: shift,
        image_shift_err: err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{synthesize_spot, FrameLayout, ImagingConfig};

    fn reference_pairs() -> Vec<DisplacementPair> {
        vec![
            DisplacementPair {
                axis: Axis::X,
                object_shift: 635e-9,
                object_shift_err: 2e-9,
                image_shift: 74.6e-6,
                image_shift_err: 1.8e-6,
            },
            DisplacementPair {
                axis: Axis::Y,
                object_shift: 665e-9,
                object_shift_err: 2e-9,
                image_shift: 72.5e-6,
                image_shift_err: 1.8e-6,
            },
        ]
    }

    #[test]
    fn published_shift_numbers() {
        let m = magnification_from_pairs(&reference_pairs()).unwrap();
        assert!((m.x.value - 117.5).abs() < 0.1, "{}", m.x.value);
        assert!((m.y.value - 109.0).abs() < 0.1, "{}", m.y.value);
        assert!((m.x.value - 118.0).abs() <= 3.0 && (m.x.err - 3.0).abs() < 0.5);
        assert!((m.y.value - 109.0).abs() <= 3.0 && (m.y.err - 3.0).abs() < 0.5);
        assert!((m.combined - 113.0).abs() <= 2.0 && (m.combined_err - 2.0).abs() < 0.3);
        assert!(m.consistent());
        let direct = ((118.0f64.powi(2) + 109.0f64.powi(2)) / 2.0).sqrt();
        assert!((direct - 113.6).abs() < 0.05);
    }

    #[test]
    fn zero_object_shift_and_missing_axis() {
        let mut pairs = reference_pairs();
        pairs[0].object_shift = 0.0;
        assert!(magnification_from_pairs(&pairs).is_err());
        assert!(magnification_from_pairs(&reference_pairs()[..1]).is_err());
    }

    #[test]
    fn order_and_unit_invariance() {
        let mut pairs = reference_pairs();
        pairs.push(DisplacementPair {
            axis: Axis::X,
            object_shift: -640e-9,
            object_shift_err: 3e-9,
            image_shift: -75.9e-6,
            image_shift_err: 2.2e-6,
        });
        let a = magnification_from_pairs(&pairs).unwrap();
        let mut rev = pairs.clone();
        rev.reverse();
        let b = magnification_from_pairs(&rev).unwrap();
        assert!((a.combined - b.combined).abs() < 1e-12 * a.combined);
        assert!((a.combined_err - b.combined_err).abs() < 1e-12 * a.combined_err);
        let scaled: Vec<_> = pairs
            .iter()
            .map(|p| DisplacementPair {
                object_shift: p.object_shift * 1e9,
                object_shift_err: p.object_shift_err * 1e9,
                image_shift: p.image_shift * 1e9,
                image_shift_err: p.image_shift_err * 1e9,
                ..*p
            })
            .collect();
        let c = magnification_from_pairs(&scaled).unwrap();
        assert!((a.combined - c.combined).abs() < 1e-12 * a.combined);
    }

    #[test]
    fn outlier_flagged() {
        let mut pairs = reference_pairs();
        pairs.push(DisplacementPair {
            axis: Axis::X,
            object_shift: 635e-9,
            object_shift_err: 1e-9,
            image_shift: 150e-6,
            image_shift_err: 0.5e-6,
        });
        let m = magnification_from_pairs(&pairs).unwrap();
        assert!(!m.consistent());
    }

    #[test]
    fn frames_give_displacement() {
        let cfg = ImagingConfig::default();
        let frame = |dx: f64, seed| {
            synthesize_spot(
                12e-6,
                &cfg,
                300_000,
                seed,
                FrameLayout {
                    size: Some((101, 101)),
                    offset: (dx, 0.0),
                },
            )
            .unwrap()
        };
        // 18.65 px = 74.6 µm at 4 µm pitch
        let pair =
            displacement_from_frames(&frame(-9.325, 1), &frame(9.325, 2), Axis::X, 635e-9, 2e-9)
                .unwrap();
        assert!((pair.image_shift - 74.6e-6).abs() < 5.0 * pair.image_shift_err + 0.2e-6);
        assert!(pair.image_shift_err < 0.5e-6);
    }
}
