//! Nearest-neighbour rotation about the geometric frame centre.

use super::frame::ImageFrame;
use crate::error::Result;

/// Rotated frame plus a mask of output pixels whose pre-image lies inside
/// the source frame.
#[derive(Debug, Clone)]
pub struct Rotated {
    pub frame: ImageFrame,
    pub valid: Vec<bool>,
}

/// Rotates content by `angle` radians, turning +x toward +y in array
/// coordinates (x = column, y = row).
///
/// The canvas is the ceiling of the rotated bounding box, widened by one
/// pixel where needed so that it has the parity of the source; the frame
/// centre then maps onto a pixel centre for odd-sized frames. Each output
/// pixel copies the source pixel nearest to its inverse-rotated position;
/// positions outside the source are filled with zero.
pub fn rotate_nearest(frame: &ImageFrame, angle: f64) -> Result<Rotated> {
    let (w, h) = (frame.width(), frame.height());
    let (sin, cos) = angle.sin_cos();
    let fit = |a: usize, b: usize, ca: f64, cb: f64| {
        let extent = (a as f64 * ca.abs() + b as f64 * cb.abs() - 1e-9).ceil() as usize;
        let extent = extent.max(1);
        if (extent + a) % 2 == 1 {
            extent + 1
        } else {
            extent
        }
    };
    let out_w = fit(w, h, cos, sin);
    let out_h = fit(h, w, cos, sin);

    let src_cx = (w as f64 - 1.0) / 2.0;
    let src_cy = (h as f64 - 1.0) / 2.0;
    let out_cx = (out_w as f64 - 1.0) / 2.0;
    let out_cy = (out_h as f64 - 1.0) / 2.0;

    let mut counts = vec![0.0; out_w * out_h];
    let mut valid = vec![false; out_w * out_h];
    for oy in 0..out_h {
        let dy = oy as f64 - out_cy;
        for ox in 0..out_w {
            let dx = ox as f64 - out_cx;
            // inverse rotation
            let sx = cos * dx + sin * dy + src_cx;
            let sy = -sin * dx + cos * dy + src_cy;
            let (rx, ry) = (sx.round(), sy.round());
            if rx >= 0.0 && ry >= 0.0 && rx < w as f64 && ry < h as f64 {
                let idx = oy * out_w + ox;
                counts[idx] = frame.get(rx as usize, ry as usize);
                valid[idx] = true;
            }
        }
    }
    Ok(Rotated {
        frame: ImageFrame::new(counts, out_w, out_h, frame.pixel_pitch())?,
        valid,
    })
}

pub fn rotate_45_nearest(frame: &ImageFrame) -> Result<ImageFrame> {
    Ok(rotate_nearest(frame, std::f64::consts::FRAC_PI_4)?.frame)
}

impl Rotated {
    /// Largest centred axis-aligned window containing only valid pixels.
    /// Returns `(x0, y0, w, h)`.
    pub fn valid_window(&self) -> (usize, usize, usize, usize) {
        let (w, h) = (self.frame.width(), self.frame.height());
        let ok = |x: usize, y: usize| self.valid[y * w + x];
        // central index span per axis: one pixel for odd size, two for even
        let (mut x0, mut x1) = ((w - 1) / 2, w / 2);
        let (mut y0, mut y1) = ((h - 1) / 2, h / 2);
        if !(x0..=x1).all(|x| (y0..=y1).all(|y| ok(x, y))) {
            return (x0, y0, 0, 0);
        }
        let cols_ok =
            |xa: usize, xb: usize, ya: usize, yb: usize| (ya..=yb).all(|y| ok(xa, y) && ok(xb, y));
        let rows_ok =
            |xa: usize, xb: usize, ya: usize, yb: usize| (xa..=xb).all(|x| ok(x, ya) && ok(x, yb));
        loop {
            let can_x = x0 > 0 && x1 + 1 < w;
            let can_y = y0 > 0 && y1 + 1 < h;
            // grow both axes together first so that diamonds give squares
            if can_x && can_y {
                let (nx0, nx1, ny0, ny1) = (x0 - 1, x1 + 1, y0 - 1, y1 + 1);
                if cols_ok(nx0, nx1, ny0, ny1) && rows_ok(nx0, nx1, ny0, ny1) {
                    (x0, x1, y0, y1) = (nx0, nx1, ny0, ny1);
                    continue;
                }
            }
            if can_x && cols_ok(x0 - 1, x1 + 1, y0, y1) {
                (x0, x1) = (x0 - 1, x1 + 1);
                continue;
            }
            if can_y && rows_ok(x0, x1, y0 - 1, y1 + 1) {
                (y0, y1) = (y0 - 1, y1 + 1);
                continue;
            }
            break;
        }
        (x0, y0, x1 - x0 + 1, y1 - y0 + 1)
    }

    pub fn cropped_to_valid(&self) -> Result<ImageFrame> {
        let (x0, y0, w, h) = self.valid_window();
        self.frame.crop(x0, y0, w, h)
    }
}

/// Column profile of the frame turned by a multiple of 45°, without
/// resampling. Pixel centres fall exactly on a lattice of spacing 1 (even
/// multiples) or 1/√2 (odd multiples) along the turned axis, so every pixel
/// lands in exactly one bin. Only the band in which each bin collects the
/// same number of pixels is summed, which keeps a uniform background flat.
///
/// Returns the profile and its sample spacing in pixels, or `None` when
/// `angle` is not a multiple of 45°.
pub fn lattice_projection(frame: &ImageFrame, angle: f64) -> Option<(Vec<f64>, f64)> {
    let q = std::f64::consts::FRAC_PI_4;
    let m = (angle / q).round();
    if (angle - m * q).abs() > 1e-9 || frame.is_empty() {
        return None;
    }
    let m = (m as i64).rem_euclid(8);
    // turned axis u ∝ a·x − b·y, across it v ∝ b·x + a·y
    let (a, b): (i64, i64) = [
        (1, 0),
        (1, 1),
        (0, 1),
        (-1, 1),
        (-1, 0),
        (-1, -1),
        (0, -1),
        (1, -1),
    ][m as usize];
    let odd = m % 2 == 1;
    let spacing = if odd {
        std::f64::consts::FRAC_1_SQRT_2
    } else {
        1.0
    };
    let (w, h) = (frame.width() as i64, frame.height() as i64);
    let k_of = |x: i64, y: i64| a * x - b * y;
    let j_of = |x: i64, y: i64| b * x + a * y;

    let corners = [(0, 0), (w - 1, 0), (0, h - 1), (w - 1, h - 1)];
    let k_lo = corners.iter().map(|&(x, y)| k_of(x, y)).min().unwrap();
    let k_hi = corners.iter().map(|&(x, y)| k_of(x, y)).max().unwrap();
    let nk = (k_hi - k_lo + 1) as usize;
    let mut j_min = vec![i64::MAX; nk];
    let mut j_max = vec![i64::MIN; nk];
    for y in 0..h {
        for x in 0..w {
            let i = (k_of(x, y) - k_lo) as usize;
            let j = j_of(x, y);
            j_min[i] = j_min[i].min(j);
            j_max[i] = j_max[i].max(j);
        }
    }

    let (cx, cy) = ((w - 1) as f64 / 2.0, (h - 1) as f64 / 2.0);
    let kc = (a as f64 * cx - b as f64 * cy).round() as i64;
    let mut best: Option<(usize, i64, i64, i64)> = None;
    for half in 0.. {
        if kc - half < k_lo || kc + half > k_hi {
            break;
        }
        let band = ((kc - half - k_lo) as usize)..=((kc + half - k_lo) as usize);
        let jl = band.clone().map(|i| j_min[i]).max().unwrap();
        let mut jh = band.map(|i| j_max[i]).min().unwrap();
        if odd && (jh - jl + 1) % 2 != 0 {
            jh -= 1;
        }
        if jh < jl {
            break;
        }
        let per_bin = if odd { (jh - jl + 1) / 2 } else { jh - jl + 1 };
        let area = (2 * half + 1) as usize * per_bin as usize;
        if best.is_none_or(|(best_area, ..)| area >= best_area) {
            best = Some((area, half, jl, jh));
        }
    }
    let (_, half, jl, jh) = best?;
    let mut profile = vec![0.0; (2 * half + 1) as usize];
    for y in 0..h {
        for x in 0..w {
            let (k, j) = (k_of(x, y), j_of(x, y));
            if (k - kc).abs() <= half && (jl..=jh).contains(&j) {
                profile[(k - kc + half) as usize] += frame.get(x as usize, y as usize);
            }
        }
    }
    Some((profile, spacing))
}
