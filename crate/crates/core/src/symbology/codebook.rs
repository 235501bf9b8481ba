use crate::color::Rgb;
use crate::error::{HiqError, Result};

pub const MAX_LAYERS: usize = 4;

/// Bijection between n-bit module tuples and 2^n display colors.
///
/// Tuples are indexed by `k = Σ b_j · 2^(n-1-j)`, so layer 1 is the most
/// significant bit and `"110"` is class 6.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorCodebook {
    n_layers: usize,
    entries: Vec<Rgb>,
}

/// Subtractive codebook: a set bit in layer i removes primary channel i.
///
/// * n = 1: 0 → white, 1 → black.
/// * n = 2: (1-b1, 1-b2, 1-b1·b2), so 11 is black.
/// * n = 3: (1-b1, 1-b2, 1-b3).
/// * n = 4: layer 4 darkens the whole color; channel levels are
///   {1, 1/3} when b4 = 0 and {2/3, 0} when b4 = 1.
pub fn build_codebook(n_layers: usize) -> Result<ColorCodebook> {
    if !(1..=MAX_LAYERS).contains(&n_layers) {
        return Err(HiqError::InvalidParameter(format!(
            "layer count {n_layers} outside 1..={MAX_LAYERS}"
        )));
    }
    let k_count = 1usize << n_layers;
    let entries = (0..k_count)
        .map(|k| {
            let bits = tuple_bits(k, n_layers);
            let b = |j: usize| bits[j] as f64;
            match n_layers {
                1 => [1.0 - b(0); 3],
                2 => [1.0 - b(0), 1.0 - b(1), 1.0 - b(0) * b(1)],
                3 => [1.0 - b(0), 1.0 - b(1), 1.0 - b(2)],
                _ => {
                    let level = |bit: u8| match (bits[3], bit) {
                        (0, 0) => 1.0,
                        (0, _) => 1.0 / 3.0,
                        (_, 0) => 2.0 / 3.0,
                        _ => 0.0,
                    };
                    [level(bits[0]), level(bits[1]), level(bits[2])]
                }
            }
        })
        .collect();
    Ok(ColorCodebook { n_layers, entries })
}

/// Bits of tuple `k`, layer 1 first.
pub fn tuple_bits(k: usize, n_layers: usize) -> Vec<u8> {
    (0..n_layers).map(|j| ((k >> (n_layers - 1 - j)) & 1) as u8).collect()
}

pub fn tuple_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize)
}

impl ColorCodebook {
    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Rgb] {
        &self.entries
    }

    pub fn color(&self, k: usize) -> Rgb {
        self.entries[k]
    }

    pub fn map(&self, bits: &[u8]) -> Rgb {
        self.entries[tuple_index(bits)]
    }

    /// Exact inverse of [`map`](Self::map); `None` for colors not in the book.
    pub fn unmap(&self, color: Rgb) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| (0..3).all(|i| (e[i] - color[i]).abs() < 1e-9))
    }

    /// Class of the nearest entry in RGB.
    pub fn nearest(&self, color: Rgb) -> usize {
        crate::color::nearest(color, &self.entries)
    }
}
