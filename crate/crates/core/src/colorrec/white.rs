use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::color::Rgb;
use crate::error::{HiqError, Result};
use crate::geometry::{FeatureBlock, Homography};
use crate::raster::RasterImage;
use crate::symbology::Layout;

/// Smallest usable white channel.
pub const WHITE_EPSILON: f64 = 1e-6;
/// Samples darker than this in every channel are not counted as white.
const MIN_WHITE_LEVEL: f64 = 0.1;
const MIN_VALID_SAMPLES: usize = 8;

/// `x_j = I_j / W_j`, clamped to [0, 2].
pub fn normalize_white(i: Rgb, w: Rgb) -> Result<Rgb> {
    if w.iter().any(|&c| !(c > WHITE_EPSILON)) {
        return Err(HiqError::InvalidWhite(format!("white {w:?} has a non-positive channel")));
    }
    Ok([0, 1, 2].map(|k| (i[k] / w[k]).clamp(0.0, 2.0)))
}

/// Grid points expected to be white: a ring two modules outside the
/// symbol, the finder gap rings and separators, and the alignment gaps.
pub fn white_reference_points(layout: &Layout) -> Vec<(f64, f64)> {
    let d = layout.dim as f64;
    let mut pts = Vec::new();
    for i in -2..(layout.dim as isize + 2) {
        let t = i as f64 + 0.5;
        pts.extend([(t, -1.5), (t, d + 1.5), (-1.5, t), (d + 1.5, t)]);
    }
    for r in 0..layout.dim {
        for c in 0..layout.dim {
            let gap = match layout.finder_ring(r, c) {
                Some((_, 2)) => true,
                Some(_) => false,
                None => layout.pattern_bit(r, c) == Some(0),
            };
            if gap {
                pts.push((c as f64 + 0.5, r as f64 + 0.5));
            }
        }
    }
    pts
}

/// Estimates the white point: the mean of the brighter half of the valid
/// white-reference samples.
pub fn estimate_white(img: &RasterImage, image_to_grid: &Homography, layout: &Layout) -> Result<Rgb> {
    let g2i = image_to_grid.inverse()?;
    let mut samples: Vec<Rgb> = white_reference_points(layout)
        .into_iter()
        .filter_map(|(gx, gy)| {
            let (x, y) = g2i.apply(gx, gy);
            img.sample(x, y)
        })
        .filter(|s| s.iter().cloned().fold(0.0, f64::max) > MIN_WHITE_LEVEL)
        .collect();
    if samples.len() < MIN_VALID_SAMPLES {
        return Err(HiqError::WhiteEstimationFailure { valid: samples.len() });
    }
    samples.sort_by(|a, b| (b[0] + b[1] + b[2]).total_cmp(&(a[0] + a[1] + a[2])));
    let keep = &samples[..samples.len().div_ceil(2)];
    let mut w = [0.0; 3];
    for s in keep {
        for k in 0..3 {
            w[k] += s[k] / keep.len() as f64;
        }
    }
    Ok(w)
}

/// The original block plus `count` copies renormalized by a perturbed white
/// `W + ν`, `ν ~ N(0, σ_w² diag(W²))`.
pub fn augment_noisy_white(
    block: &FeatureBlock,
    count: usize,
    sigma_w: f64,
    rng: &mut impl Rng,
) -> Result<Vec<FeatureBlock>> {
    if !(sigma_w > 0.0) {
        return Err(HiqError::InvalidParameter(format!("sigma_w {sigma_w} must be positive")));
    }
    let noise = Normal::new(0.0, sigma_w).expect("positive sigma");
    let mut out = Vec::with_capacity(count + 1);
    out.push(*block);
    for _ in 0..count {
        // Relative to the unit white of a normalized block, W + ν = 1 + ε.
        let scale: [f64; 3] = [(); 3].map(|_| 1.0 / (1.0 + noise.sample(rng)).max(WHITE_EPSILON));
        let mut copy = *block;
        for row in copy.x.iter_mut() {
            for k in 0..3 {
                row[k] = (row[k] * scale[k]).clamp(0.0, 2.0);
            }
        }
        out.push(copy);
    }
    Ok(out)
}
