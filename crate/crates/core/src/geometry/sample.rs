use serde::{Deserialize, Serialize};

use crate::color::Rgb;
use crate::colorrec::normalize_white;
use crate::error::{HiqError, Result};
use crate::raster::RasterImage;

use super::homography::Homography;

/// Row order of a feature block.
pub const CENTER: usize = 0;
pub const TOP: usize = 1;
pub const BOTTOM: usize = 2;
pub const LEFT: usize = 3;
pub const RIGHT: usize = 4;

/// Normalized colors of a module and its four neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureBlock {
    /// Rows: center, top, bottom, left, right.
    pub x: [Rgb; 5],
    pub row: usize,
    pub col: usize,
}

impl FeatureBlock {
    pub fn center(&self) -> Rgb {
        self.x[CENTER]
    }

    /// `Xᵀθ`: the θ-weighted combination of the five rows.
    pub fn mix(&self, theta: &[f64; 5]) -> Rgb {
        let mut out = [0.0; 3];
        for (row, &t) in self.x.iter().zip(theta) {
            for k in 0..3 {
                out[k] += t * row[k];
            }
        }
        out
    }
}

/// Grid coordinates of the center of module `(row, col)`.
pub fn module_center(row: usize, col: usize) -> (f64, f64) {
    (col as f64 + 0.5, row as f64 + 0.5)
}

/// Samples every module center (row-major) through `image_to_grid⁻¹` and
/// white-normalizes it.
pub fn sample_centers(
    img: &RasterImage,
    image_to_grid: &Homography,
    dim: usize,
    white: Rgb,
) -> Result<Vec<Rgb>> {
    let g2i = image_to_grid.inverse()?;
    let mut out = Vec::with_capacity(dim * dim);
    for r in 0..dim {
        for c in 0..dim {
            let (gx, gy) = module_center(r, c);
            let (x, y) = g2i.apply(gx, gy);
            let px = img.sample(x, y).ok_or_else(|| {
                HiqError::FrameRejected(format!("module ({r},{c}) projects outside the image"))
            })?;
            out.push(normalize_white(px, white)?);
        }
    }
    Ok(out)
}

/// Assembles feature blocks from a row-major grid of module colors.
/// Neighbors outside the grid replicate the center.
pub fn feature_blocks(centers: &[Rgb], dim: usize) -> Vec<FeatureBlock> {
    let at = |r: isize, c: isize, own: Rgb| {
        if r < 0 || c < 0 || r >= dim as isize || c >= dim as isize {
            own
        } else {
            centers[r as usize * dim + c as usize]
        }
    };
    (0..dim * dim)
        .map(|i| {
            let (r, c) = ((i / dim) as isize, (i % dim) as isize);
            let own = centers[i];
            FeatureBlock {
                x: [own, at(r - 1, c, own), at(r + 1, c, own), at(r, c - 1, own), at(r, c + 1, own)],
                row: r as usize,
                col: c as usize,
            }
        })
        .collect()
}

/// One feature block per module, row-major.
pub fn sample_modules(
    img: &RasterImage,
    image_to_grid: &Homography,
    dim: usize,
    white: Rgb,
) -> Result<Vec<FeatureBlock>> {
    Ok(feature_blocks(&sample_centers(img, image_to_grid, dim, white)?, dim))
}
