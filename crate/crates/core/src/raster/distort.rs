use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::color::Rgb;
use crate::error::{HiqError, Result};
use crate::geometry::Homography;

use super::image::RasterImage;

/// Mixing weights (center, top, bottom, left, right) of cross-module
/// interference.
pub type CmiWeights = [f64; 5];

pub const NO_CMI: CmiWeights = [1.0, 0.0, 0.0, 0.0, 0.0];

pub fn check_cmi(alpha: &CmiWeights) -> Result<()> {
    let sum: f64 = alpha.iter().sum();
    if alpha.iter().any(|&a| !(a >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(HiqError::InvalidParameter(format!(
            "CMI weights {alpha:?} must be nonnegative and sum to 1"
        )));
    }
    Ok(())
}

/// Symmetric weights: `center` on the module, the rest split over its
/// four neighbors.
pub fn cmi_symmetric(center: f64) -> CmiWeights {
    let side = (1.0 - center) / 4.0;
    [center, side, side, side, side]
}

/// Mixes every module color with its four neighbors; neighbors outside the
/// grid contribute the module's own color.
pub fn apply_cmi(colors: &[Rgb], dim: usize, alpha: &CmiWeights) -> Result<Vec<Rgb>> {
    check_cmi(alpha)?;
    let at = |r: isize, c: isize, own: Rgb| {
        if r < 0 || c < 0 || r >= dim as isize || c >= dim as isize {
            own
        } else {
            colors[r as usize * dim + c as usize]
        }
    };
    Ok((0..dim * dim)
        .map(|i| {
            let (r, c) = ((i / dim) as isize, (i % dim) as isize);
            let own = colors[i];
            let rows = [own, at(r - 1, c, own), at(r + 1, c, own), at(r, c - 1, own), at(r, c + 1, own)];
            let mut out = [0.0; 3];
            for (row, &a) in rows.iter().zip(alpha) {
                for k in 0..3 {
                    out[k] += a * row[k];
                }
            }
            out
        })
        .collect())
}

/// Cross-channel interference `p' = clamp(M·p + offset)`.
pub fn apply_cci(img: &RasterImage, m: &[[f64; 3]; 3], offset: Rgb) -> Result<RasterImage> {
    let h = Homography::new([
        m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
    ]);
    if h.det().abs() < 1e-12 {
        return Err(HiqError::InvalidParameter("channel-mixing matrix is singular".into()));
    }
    Ok(img.map_pixels(|_, _, p| {
        let mut out = offset;
        for (r, row) in m.iter().enumerate() {
            out[r] += row[0] * p[0] + row[1] * p[1] + row[2] * p[2];
        }
        out
    }))
}

/// Per-channel gains and a linear spatial gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Illumination {
    pub gains: Rgb,
    /// Relative intensity change per image width/height, measured from the
    /// image center.
    pub gradient: [f64; 2],
}

impl Illumination {
    pub const NEUTRAL: Illumination = Illumination { gains: [1.0; 3], gradient: [0.0; 2] };

    pub fn preset(name: &str) -> Result<Self> {
        let (gains, gradient) = match name {
            "neutral" => ([1.0, 1.0, 1.0], [0.0, 0.0]),
            "incandescent" => ([1.0, 0.85, 0.6], [0.0, 0.0]),
            "fluorescent" => ([0.92, 1.0, 0.9], [0.0, 0.0]),
            "outdoor" => ([0.9, 0.95, 1.0], [0.0, 0.0]),
            "shadowed" => ([0.7, 0.7, 0.75], [0.3, 0.2]),
            other => {
                return Err(HiqError::InvalidParameter(format!("unknown lighting preset {other:?}")))
            }
        };
        Ok(Self { gains, gradient })
    }

    pub const PRESETS: [&'static str; 5] = ["neutral", "incandescent", "fluorescent", "outdoor", "shadowed"];
}

pub fn apply_illumination(img: &RasterImage, light: &Illumination) -> Result<RasterImage> {
    if light.gains.iter().any(|&g| !(g > 0.0)) {
        return Err(HiqError::InvalidParameter(format!("gains {:?} must be positive", light.gains)));
    }
    let (w, h) = (img.width as f64, img.height as f64);
    Ok(img.map_pixels(|x, y, p| {
        let pos = [(x as f64 + 0.5) / w - 0.5, (y as f64 + 0.5) / h - 0.5];
        let f = 1.0 + light.gradient[0] * pos[0] + light.gradient[1] * pos[1];
        [light.gains[0] * f * p[0], light.gains[1] * f * p[1], light.gains[2] * f * p[2]]
    }))
}

/// Warps `img` by `h` (source → destination) with inverse-mapped bilinear
/// sampling. Destination pixels that map outside the source get `fill`.
pub fn apply_warp(img: &RasterImage, h: &Homography, fill: Rgb) -> Result<RasterImage> {
    let inv = h.inverse()?;
    Ok(img.map_pixels(|x, y, _| {
        let (sx, sy) = inv.apply(x as f64 + 0.5, y as f64 + 0.5);
        img.sample(sx, sy).unwrap_or(fill)
    }))
}

/// Paints the `w×w` module window with top-left module `origin = (row, col)`
/// in `colors` (row-major, `w²` entries). `grid_to_image` maps grid
/// coordinates to pixels, so warped renders are covered exactly.
pub fn occlude_window(
    img: &RasterImage,
    grid_to_image: &Homography,
    origin: (usize, usize),
    w: usize,
    colors: &[Rgb],
) -> Result<RasterImage> {
    if colors.len() != w * w {
        return Err(HiqError::InvalidParameter(format!("{} colors for a {w}×{w} window", colors.len())));
    }
    let (r0, c0) = (origin.0 as f64, origin.1 as f64);
    let corners = [(c0, r0), (c0 + w as f64, r0), (c0, r0 + w as f64), (c0 + w as f64, r0 + w as f64)]
        .map(|(x, y)| grid_to_image.apply(x, y));
    let lo = |f: fn(&(f64, f64)) -> f64, n: usize| corners.iter().map(f).fold(f64::INFINITY, f64::min).max(0.0).min(n as f64) as usize;
    let hi = |f: fn(&(f64, f64)) -> f64, n: usize| corners.iter().map(f).fold(0.0, f64::max).ceil().min(n as f64) as usize;
    let (x0, x1) = (lo(|p| p.0, img.width), hi(|p| p.0, img.width));
    let (y0, y1) = (lo(|p| p.1, img.height), hi(|p| p.1, img.height));
    let inv = grid_to_image.inverse()?;
    let mut out = img.clone();
    for y in y0..y1 {
        for x in x0..x1 {
            let (gx, gy) = inv.apply(x as f64 + 0.5, y as f64 + 0.5);
            let (dc, dr) = (gx - c0, gy - r0);
            if dc >= 0.0 && dr >= 0.0 && dc < w as f64 && dr < w as f64 {
                out.set(x, y, colors[dr as usize * w + dc as usize]);
            }
        }
    }
    Ok(out)
}

/// Adds i.i.d. Gaussian noise with per-channel σ, clamping to [0,1].
pub fn add_noise(img: &RasterImage, sigma: Rgb, rng: &mut impl Rng) -> Result<RasterImage> {
    if sigma.iter().any(|&s| !(s >= 0.0)) {
        return Err(HiqError::InvalidParameter(format!("noise sigma {sigma:?} must be >= 0")));
    }
    if sigma == [0.0; 3] {
        return Ok(img.clone());
    }
    let dists: Vec<Normal<f64>> = sigma.iter().map(|&s| Normal::new(0.0, s).expect("valid sigma")).collect();
    let mut out = img.clone();
    for (i, v) in out.raw_mut().iter_mut().enumerate() {
        *v = (*v as f64 + dists[i % 3].sample(rng)).clamp(0.0, 1.0) as f32;
    }
    Ok(out)
}

/// Isotropic Gaussian blur, separable, edges clamped.
pub fn add_blur(img: &RasterImage, sigma: f64) -> Result<RasterImage> {
    if !(sigma >= 0.0) {
        return Err(HiqError::InvalidParameter(format!("blur sigma {sigma} must be >= 0")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.iter().map(|k| k / total).collect();
    let (w, h) = (img.width as isize, img.height as isize);
    let pass = |src: &RasterImage, horizontal: bool| {
        src.map_pixels(|x, y, _| {
            let mut acc = [0.0; 3];
            for (j, &k) in kernel.iter().enumerate() {
                let d = j as isize - radius;
                let (sx, sy) = if horizontal {
                    ((x as isize + d).clamp(0, w - 1), y as isize)
                } else {
                    (x as isize, (y as isize + d).clamp(0, h - 1))
                };
                let p = src.get(sx as usize, sy as usize);
                for c in 0..3 {
                    acc[c] += k * p[c];
                }
            }
            acc
        })
    };
    Ok(pass(&pass(img, true), false))
}
