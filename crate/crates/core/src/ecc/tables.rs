//! Block-count and parity tables borrowed from the monochrome QR versions.
//!
//! Per version and level the symbol uses QR's number of RS blocks and
//! parity codewords per block. Data codeword totals are then derived from
//! the layer's own module budget (see [`super::BlockPlan`]).

/// Parity codewords per block, indexed `[version-1][L, M, Q]`.
pub(crate) const PARITY_PER_BLOCK: [[u8; 3]; 40] = [
    [7, 10, 13],
    [10, 16, 22],
    [15, 26, 18],
    [20, 18, 26],
    [26, 24, 18],
    [18, 16, 24],
    [20, 18, 18],
    [24, 22, 22],
    [30, 22, 20],
    [18, 26, 24],
    [20, 30, 28],
    [24, 22, 26],
    [26, 22, 24],
    [30, 24, 20],
    [22, 24, 30],
    [24, 28, 24],
    [28, 28, 28],
    [30, 26, 28],
    [28, 26, 26],
    [28, 26, 30],
    [28, 26, 28],
    [28, 28, 30],
    [30, 28, 30],
    [30, 28, 30],
    [26, 28, 30],
    [28, 28, 28],
    [30, 28, 30],
    [30, 28, 30],
    [30, 28, 30],
    [30, 28, 30],
    [30, 28, 30],
    [30, 28, 30],
    [30, 28, 30],
    [30, 28, 30],
    [30, 28, 30],
    [30, 28, 30],
    [30, 28, 30],
    [30, 28, 30],
    [30, 28, 30],
    [30, 28, 30],
];

/// Number of RS blocks, indexed `[version-1][L, M, Q]`.
pub(crate) const BLOCK_COUNT: [[u8; 3]; 40] = [
    [1, 1, 1],
    [1, 1, 1],
    [1, 1, 2],
    [1, 2, 2],
    [1, 2, 4],
    [2, 4, 4],
    [2, 4, 6],
    [2, 4, 6],
    [2, 5, 8],
    [4, 5, 8],
    [4, 5, 8],
    [4, 8, 10],
    [4, 9, 12],
    [4, 9, 16],
    [6, 10, 12],
    [6, 10, 17],
    [6, 11, 16],
    [6, 13, 18],
    [7, 14, 21],
    [8, 16, 20],
    [8, 17, 23],
    [9, 17, 23],
    [9, 18, 25],
    [10, 20, 27],
    [12, 21, 29],
    [12, 23, 34],
    [12, 25, 34],
    [13, 26, 35],
    [14, 28, 38],
    [15, 29, 40],
    [16, 31, 43],
    [17, 33, 45],
    [18, 35, 48],
    [19, 37, 51],
    [19, 38, 53],
    [20, 40, 56],
    [21, 43, 59],
    [22, 45, 62],
    [24, 47, 65],
    [25, 49, 68],
];

/// Total codewords of a monochrome QR symbol of this version.
pub(crate) fn qr_total_codewords(version: u8) -> usize {
    let v = version as usize;
    let mut modules = (16 * v + 128) * v + 64;
    if v >= 2 {
        let align = v / 7 + 2;
        modules -= (25 * align - 10) * align - 55;
        if v >= 7 {
            modules -= 36;
        }
    }
    modules / 8
}

/// Data codewords of a monochrome QR symbol at this version and level.
#[cfg(test)]
fn qr_data_codewords(version: u8, level_index: usize) -> usize {
    let i = version as usize - 1;
    qr_total_codewords(version)
        - BLOCK_COUNT[i][level_index] as usize * PARITY_PER_BLOCK[i][level_index] as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_qr_data_codeword_counts() {
        assert_eq!(qr_total_codewords(1), 26);
        assert_eq!(qr_total_codewords(40), 3706);
        assert_eq!(qr_data_codewords(1, 0), 19);
        assert_eq!(qr_data_codewords(1, 1), 16);
        assert_eq!(qr_data_codewords(1, 2), 13);
        assert_eq!(qr_data_codewords(10, 0), 274);
        assert_eq!(qr_data_codewords(40, 0), 2956);
        assert_eq!(qr_data_codewords(40, 1), 2334);
        assert_eq!(qr_data_codewords(40, 2), 1666);
    }
}
