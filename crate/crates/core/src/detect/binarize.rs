use std::fmt::Write as _;
use std::path::Path;

use crate::error::{HiqError, Result};
use crate::raster::RasterImage;

/// Number of blocks along each image axis.
pub const GRID: usize = 8;

/// One bit per pixel; 1 = black.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitImage {
    pub width: usize,
    pub height: usize,
    bits: Vec<u8>,
}

impl BitImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![0; width * height] }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, b: u8) {
        self.bits[y * self.width + x] = b;
    }

    pub fn is_black(&self, x: usize, y: usize) -> bool {
        self.get(x, y) == 1
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Plain (`P1`) PBM text.
    pub fn to_pbm(&self) -> String {
        let mut s = String::with_capacity(self.bits.len() * 2 + 32);
        writeln!(s, "P1\n{} {}", self.width, self.height).unwrap();
        for row in self.bits.chunks(self.width) {
            let line: Vec<&str> = row.iter().map(|&b| if b == 1 { "1" } else { "0" }).collect();
            writeln!(s, "{}", line.join(" ")).unwrap();
        }
        s
    }

    pub fn save_pbm(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_pbm())?)
    }
}

/// Pixel bounds `[lo, hi)` of block `i` along an axis of `len` pixels.
pub fn block_bounds(i: usize, len: usize) -> (usize, usize) {
    (i * len / GRID, (i + 1) * len / GRID)
}

/// Per-block, per-channel thresholds `T = (max + min) / 2`, row-major over
/// the 8×8 block grid.
pub fn block_thresholds(img: &RasterImage) -> Result<Vec<[f64; 3]>> {
    if img.width < GRID || img.height < GRID {
        return Err(HiqError::InvalidParameter(format!(
            "image {}×{} is smaller than the {GRID}×{GRID} block grid",
            img.width, img.height
        )));
    }
    let mut out = Vec::with_capacity(GRID * GRID);
    for by in 0..GRID {
        let (y0, y1) = block_bounds(by, img.height);
        for bx in 0..GRID {
            let (x0, x1) = block_bounds(bx, img.width);
            let mut lo = [f64::INFINITY; 3];
            let mut hi = [f64::NEG_INFINITY; 3];
            for y in y0..y1 {
                for x in x0..x1 {
                    let p = img.get(x, y);
                    for k in 0..3 {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
            }
            out.push([0, 1, 2].map(|k| (hi[k] + lo[k]) / 2.0));
        }
    }
    Ok(out)
}

/// Local-threshold binarization: a pixel is black iff any channel is below
/// its block's threshold. A flat block has `T` equal to its value, so all of
/// its pixels come out white.
pub fn binarize(img: &RasterImage) -> Result<BitImage> {
    let t = block_thresholds(img)?;
    let mut out = BitImage::new(img.width, img.height);
    for by in 0..GRID {
        let (y0, y1) = block_bounds(by, img.height);
        for bx in 0..GRID {
            let (x0, x1) = block_bounds(bx, img.width);
            let th = t[by * GRID + bx];
            for y in y0..y1 {
                for x in x0..x1 {
                    let p = img.get(x, y);
                    if (0..3).any(|k| p[k] < th[k]) {
                        out.set(x, y, 1);
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_is_midrange() {
        let mut img = RasterImage::filled(16, 16, [0.8; 3]);
        img.set(0, 0, [0.4; 3]);
        let t = block_thresholds(&img).unwrap();
        assert!((t[0][0] - 0.6).abs() < 1e-6);
        assert!((t[1][2] - 0.8).abs() < 1e-6);
    }

    #[test]
    fn yellow_is_black_against_mid_threshold() {
        let mut img = RasterImage::filled(16, 16, [1.0; 3]);
        img.set(0, 0, [0.0; 3]);
        img.set(1, 0, [1.0, 1.0, 0.0]);
        let b = binarize(&img).unwrap();
        assert!(b.is_black(1, 0));
        assert!(!b.is_black(0, 1));
    }

    #[test]
    fn single_pixel_blocks_are_flat() {
        let mut img = RasterImage::filled(8, 8, [0.0; 3]);
        img.set(0, 0, [1.0; 3]);
        assert!(binarize(&img).unwrap().bits().iter().all(|&v| v == 0));
    }

    #[test]
    fn white_image_is_all_white() {
        let b = binarize(&RasterImage::filled(50, 30, [1.0; 3])).unwrap();
        assert!(b.bits().iter().all(|&v| v == 0));
    }

    #[test]
    fn tiny_image_is_rejected() {
        assert!(binarize(&RasterImage::filled(7, 20, [1.0; 3])).is_err());
    }

    #[test]
    fn pbm_header_and_rows() {
        let mut b = BitImage::new(3, 2);
        b.set(1, 0, 1);
        assert_eq!(b.to_pbm(), "P1\n3 2\n0 1 0\n0 0 0\n");
    }
}
