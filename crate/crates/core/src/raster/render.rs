use crate::color::{Rgb, WHITE};
use crate::error::{HiqError, Result};
use crate::geometry::Homography;
use crate::symbology::HiqSymbol;

use super::image::RasterImage;

/// A rasterized module grid and the grid→image transform that produced it.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub image: RasterImage,
    pub grid_to_image: Homography,
}

/// Draws each module as a `module_px` square inside a white quiet zone.
pub fn render_grid(colors: &[Rgb], dim: usize, module_px: usize, quiet: usize) -> Result<Rendered> {
    if module_px < 2 {
        return Err(HiqError::InvalidParameter(format!(
            "module size {module_px} px, need at least 2"
        )));
    }
    if colors.len() != dim * dim {
        return Err(HiqError::InvalidParameter(format!(
            "{} colors for a {dim}x{dim} grid",
            colors.len()
        )));
    }
    let side = (dim + 2 * quiet) * module_px;
    let mut image = RasterImage::filled(side, side, WHITE);
    for r in 0..dim {
        for c in 0..dim {
            let color = colors[r * dim + c];
            let (y0, x0) = ((r + quiet) * module_px, (c + quiet) * module_px);
            for y in y0..y0 + module_px {
                for x in x0..x0 + module_px {
                    image.set(x, y, color);
                }
            }
        }
    }
    let s = module_px as f64;
    Ok(Rendered {
        image,
        grid_to_image: Homography::scale_translate(s, s * quiet as f64, s * quiet as f64),
    })
}

pub fn render(symbol: &HiqSymbol, module_px: usize, quiet: usize) -> Result<Rendered> {
    render_grid(&symbol.colors(), symbol.dim(), module_px, quiet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecc::EcLevel;
    use crate::symbology::{encode, EncodeOptions};

    #[test]
    fn size_and_center_pixels() {
        let opts = EncodeOptions {
            version: 22,
            ec_levels: vec![EcLevel::L; 3],
            randomize: true,
            seed: 1,
        };
        let sym = encode(b"render", &opts).unwrap();
        let out = render(&sym, 4, 4).unwrap();
        assert_eq!((out.image.width, out.image.height), (452, 452));
        for r in 0..sym.dim() {
            for c in 0..sym.dim() {
                let (x, y) = out.grid_to_image.apply(c as f64 + 0.5, r as f64 + 0.5);
                assert_eq!(out.image.get(x as usize, y as usize), sym.module_color(r, c));
            }
        }
    }

    #[test]
    fn all_white_grid_is_uniform() {
        let out = render_grid(&vec![WHITE; 21 * 21], 21, 3, 2).unwrap();
        assert!(out.image.raw().iter().all(|&v| v == 1.0));
        assert!(render_grid(&vec![WHITE; 4], 2, 1, 0).is_err());
    }
}
