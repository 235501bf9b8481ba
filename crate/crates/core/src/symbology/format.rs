//! The format field: layer count, per-layer EC levels, randomization flag
//! and placement seed, protected by a (11,7) Reed-Solomon code over GF(16)
//! and stored twice in layer 1.

use serde::{Deserialize, Serialize};

use crate::ecc::{EcLevel, GaloisField, ReedSolomon};
use crate::error::{HiqError, Result};

use super::codebook::MAX_LAYERS;
use super::layout::FORMAT_COPY_LEN;

const DATA_NIBBLES: usize = 7;
const PARITY_NIBBLES: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatInfo {
    pub n_layers: usize,
    pub ec_levels: Vec<EcLevel>,
    pub randomized: bool,
    pub seed: u16,
}

impl FormatInfo {
    pub fn new(ec_levels: Vec<EcLevel>, randomized: bool, seed: u16) -> Result<Self> {
        if ec_levels.is_empty() || ec_levels.len() > MAX_LAYERS {
            return Err(HiqError::InvalidParameter(format!(
                "{} EC levels given, expected 1..={MAX_LAYERS}",
                ec_levels.len()
            )));
        }
        Ok(Self {
            n_layers: ec_levels.len(),
            ec_levels,
            randomized,
            seed,
        })
    }

    /// 28-bit field: `n-1 (2) | EC level per layer (4×2) | randomized (1) |
    /// reserved (1) | seed (16)`.
    pub fn to_field(&self) -> u32 {
        let mut v = (self.n_layers as u32 - 1) & 3;
        for i in 0..MAX_LAYERS {
            let code = self.ec_levels.get(i).map_or(0, |l| l.index() as u32);
            v = (v << 2) | code;
        }
        v = (v << 1) | self.randomized as u32;
        v <<= 1;
        (v << 16) | self.seed as u32
    }

    pub fn from_field(field: u32) -> Result<Self> {
        let n_layers = ((field >> 26) & 3) as usize + 1;
        let ec_levels = (0..n_layers)
            .map(|i| {
                let code = ((field >> (24 - 2 * i)) & 3) as usize;
                EcLevel::from_index(code)
                    .ok_or_else(|| HiqError::FormatUnreadable(format!("invalid EC code {code}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_layers,
            ec_levels,
            randomized: (field >> 17) & 1 == 1,
            seed: (field & 0xffff) as u16,
        })
    }

    /// One 44-bit protected copy, most significant bit first.
    pub fn encode_bits(&self) -> Vec<u8> {
        let field = self.to_field();
        let data: Vec<u8> = (0..DATA_NIBBLES)
            .map(|i| ((field >> (4 * (DATA_NIBBLES - 1 - i))) & 0xf) as u8)
            .collect();
        let parity = rs16().encode(&data);
        data.iter()
            .chain(&parity)
            .flat_map(|&n| (0..4).rev().map(move |b| (n >> b) & 1))
            .collect()
    }

    /// Decodes one copy, returning the info and the number of corrected
    /// nibbles.
    pub fn decode_bits(bits: &[u8]) -> Result<(Self, usize)> {
        if bits.len() != FORMAT_COPY_LEN {
            return Err(HiqError::FormatUnreadable(format!(
                "expected {FORMAT_COPY_LEN} bits, got {}",
                bits.len()
            )));
        }
        let mut nibbles: Vec<u8> = bits
            .chunks(4)
            .map(|c| c.iter().fold(0u8, |a, &b| (a << 1) | (b & 1)))
            .collect();
        let corrected = rs16()
            .decode(&mut nibbles)
            .map_err(|_| HiqError::FormatUnreadable("format copy uncorrectable".into()))?;
        let field = nibbles[..DATA_NIBBLES]
            .iter()
            .fold(0u32, |a, &n| (a << 4) | n as u32);
        Ok((Self::from_field(field)?, corrected))
    }

    /// Decodes both copies and keeps the one needing fewer corrections.
    pub fn decode_copies(a: &[u8], b: &[u8]) -> Result<Self> {
        match (Self::decode_bits(a), Self::decode_bits(b)) {
            (Ok((fa, ca)), Ok((fb, cb))) => Ok(if cb < ca { fb } else { fa }),
            (Ok((f, _)), Err(_)) | (Err(_), Ok((f, _))) => Ok(f),
            (Err(e), Err(_)) => Err(e),
        }
    }
}

fn rs16() -> ReedSolomon {
    ReedSolomon::new(GaloisField::gf16(), PARITY_NIBBLES)
}

/// Majority vote over the layer counts read from the three finders.
pub fn vote_layer_count(reads: [Option<usize>; 3]) -> Result<usize> {
    for i in 0..3 {
        for j in i + 1..3 {
            if let (Some(a), Some(b)) = (reads[i], reads[j]) {
                if a == b {
                    return Ok(a);
                }
            }
        }
    }
    Err(HiqError::FormatUnreadable(format!(
        "finders disagree on layer count: {reads:?}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use EcLevel::*;

    fn sample() -> FormatInfo {
        FormatInfo::new(vec![L, M, Q], true, 0xbeef).unwrap()
    }

    #[test]
    fn field_round_trip() {
        let f = sample();
        assert_eq!(FormatInfo::from_field(f.to_field()).unwrap(), f);
        let one = FormatInfo::new(vec![Q], false, 0).unwrap();
        assert_eq!(FormatInfo::from_field(one.to_field()).unwrap(), one);
    }

    #[test]
    fn copy_survives_two_nibble_errors() {
        let f = sample();
        let mut bits = f.encode_bits();
        assert_eq!(bits.len(), FORMAT_COPY_LEN);
        bits[0] ^= 1;
        bits[3] ^= 1;
        bits[41] ^= 1;
        let (g, corrected) = FormatInfo::decode_bits(&bits).unwrap();
        assert_eq!(g, f);
        assert_eq!(corrected, 2);
    }

    #[test]
    fn second_copy_rescues_first() {
        let f = sample();
        let good = f.encode_bits();
        let mut bad = good.clone();
        for i in (0..FORMAT_COPY_LEN).step_by(4).take(5) {
            bad[i] ^= 1;
        }
        assert_eq!(FormatInfo::decode_copies(&bad, &good).unwrap(), f);
        assert!(FormatInfo::decode_copies(&bad, &bad).is_err() || FormatInfo::decode_copies(&bad, &bad).unwrap() != f);
    }

    #[test]
    fn two_of_three_vote() {
        assert_eq!(vote_layer_count([Some(3), Some(3), Some(2)]).unwrap(), 3);
        assert_eq!(vote_layer_count([Some(1), Some(3), Some(3)]).unwrap(), 3);
        assert_eq!(vote_layer_count([None, Some(4), Some(4)]).unwrap(), 4);
        assert!(matches!(
            vote_layer_count([Some(1), Some(2), Some(3)]),
            Err(HiqError::FormatUnreadable(_))
        ));
        assert!(vote_layer_count([Some(2), None, None]).is_err());
    }
}
