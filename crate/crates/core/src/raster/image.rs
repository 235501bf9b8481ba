use std::path::Path;

use crate::color::Rgb;
use crate::error::{HiqError, Result};

/// H×W×3 color raster with channel values in [0,1].
///
/// Pixel `(x, y)` covers the square `[x, x+1) × [y, y+1)` in continuous
/// image coordinates, so its center is `(x + 0.5, y + 0.5)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    data: Vec<f32>,
}

impl RasterImage {
    pub fn filled(width: usize, height: usize, c: Rgb) -> Self {
        let px = [c[0] as f32, c[1] as f32, c[2] as f32];
        Self {
            width,
            height,
            data: px.iter().copied().cycle().take(width * height * 3).collect(),
        }
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let i = 3 * (y * self.width + x);
        [self.data[i] as f64, self.data[i + 1] as f64, self.data[i + 2] as f64]
    }

    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        let i = 3 * (y * self.width + x);
        for k in 0..3 {
            self.data[i + k] = c[k].clamp(0.0, 1.0) as f32;
        }
    }

    pub fn raw(&self) -> &[f32] {
        &self.data
    }

    pub fn raw_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// Applies `f` to every pixel, clamping the result.
    pub fn map_pixels(&self, mut f: impl FnMut(usize, usize, Rgb) -> Rgb) -> Self {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                out.set(x, y, f(x, y, self.get(x, y)));
            }
        }
        out
    }

    /// Bilinear sample at continuous coordinates; `None` outside the image.
    pub fn sample(&self, x: f64, y: f64) -> Option<Rgb> {
        if !(x >= 0.0 && y >= 0.0 && x <= self.width as f64 && y <= self.height as f64) {
            return None;
        }
        let fx = (x - 0.5).clamp(0.0, (self.width - 1) as f64);
        let fy = (y - 0.5).clamp(0.0, (self.height - 1) as f64);
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
        let (a, b, c, d) = (self.get(x0, y0), self.get(x1, y0), self.get(x0, y1), self.get(x1, y1));
        let mut out = [0.0; 3];
        for k in 0..3 {
            let top = a[k] + (b[k] - a[k]) * tx;
            let bottom = c[k] + (d[k] - c[k]) * tx;
            out[k] = top + (bottom - top) * ty;
        }
        Some(out)
    }

    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect()
    }

    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width * height * 3 {
            return Err(HiqError::InvalidParameter(format!(
                "{} bytes for a {width}x{height} RGB image",
                bytes.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data: bytes.iter().map(|&b| b as f32 / 255.0).collect(),
        })
    }

    /// Writes an 8-bit image; the format follows the extension (`.png`, `.ppm`).
    pub fn save(&self, path: &Path) -> Result<()> {
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, self.to_rgb8())
            .expect("buffer size matches dimensions");
        buf.save(path)
            .map_err(|e| HiqError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|e| HiqError::Io(format!("{}: {e}", path.display())))?
            .to_rgb8();
        let (w, h) = img.dimensions();
        Self::from_rgb8(w as usize, h as usize, img.as_raw())
    }

    /// Mean squared error and PSNR (dB, peak 1) over the pixels selected by `mask`.
    pub fn psnr_masked(&self, other: &Self, mask: impl Fn(usize, usize) -> bool) -> f64 {
        let mut se = 0.0;
        let mut n = 0usize;
        for y in 0..self.height {
            for x in 0..self.width {
                if mask(x, y) {
                    let (a, b) = (self.get(x, y), other.get(x, y));
                    se += (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>();
                    n += 3;
                }
            }
        }
        if se == 0.0 {
            return f64::INFINITY;
        }
        10.0 * (1.0 / (se / n as f64)).log10()
    }

    pub fn psnr(&self, other: &Self) -> f64 {
        self.psnr_masked(other, |_, _| true)
    }
}
