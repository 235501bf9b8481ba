//! RGB triples in [0,1]^3 and a few helpers shared across modules.

pub type Rgb = [f64; 3];

pub const WHITE: Rgb = [1.0, 1.0, 1.0];
pub const BLACK: Rgb = [0.0, 0.0, 0.0];
pub const RED: Rgb = [1.0, 0.0, 0.0];
pub const GREEN: Rgb = [0.0, 1.0, 0.0];
pub const BLUE: Rgb = [0.0, 0.0, 1.0];
pub const CYAN: Rgb = [0.0, 1.0, 1.0];
pub const MAGENTA: Rgb = [1.0, 0.0, 1.0];
pub const YELLOW: Rgb = [1.0, 1.0, 0.0];

/// The eight corners of the RGB cube.
pub const CUBE_CORNERS: [Rgb; 8] = [WHITE, BLACK, RED, GREEN, BLUE, CYAN, MAGENTA, YELLOW];

pub fn dist2(a: Rgb, b: Rgb) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum()
}

/// Index of the palette entry closest to `c`.
pub fn nearest(c: Rgb, palette: &[Rgb]) -> usize {
    palette
        .iter()
        .enumerate()
        .min_by(|a, b| dist2(c, *a.1).total_cmp(&dist2(c, *b.1)))
        .map(|(i, _)| i)
        .expect("empty palette")
}

pub fn clamp01(c: Rgb) -> Rgb {
    [c[0].clamp(0.0, 1.0), c[1].clamp(0.0, 1.0), c[2].clamp(0.0, 1.0)]
}

pub fn luminance(c: Rgb) -> f64 {
    0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]
}
