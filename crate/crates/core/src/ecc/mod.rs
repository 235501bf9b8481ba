//! Reed-Solomon protection of each layer's byte stream.
//!
//! A layer's data codewords carry one byte-mode segment:
//! `[0100][count: 8 or 16 bits][payload][crc32][0000 terminator][pad]`.
//! Data and parity codewords are split into RS blocks whose count and
//! parity size follow the QR tables for the version and level; the blocks
//! are emitted back to back (no interleaving) and spatial spreading is left
//! to the symbol's placement permutation.

pub mod gf;
pub mod rs;
mod tables;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HiqError, Result};
pub use gf::GaloisField;
pub use rs::{ReedSolomon, RsFailure};

const MODE_BYTE: u32 = 0b0100;
const CHECKSUM_BYTES: usize = 4;
const PAD_BYTES: [u8; 2] = [0xec, 0x11];

/// Error-correction level of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EcLevel {
    L,
    M,
    Q,
}

impl EcLevel {
    pub const ALL: [EcLevel; 3] = [EcLevel::L, EcLevel::M, EcLevel::Q];

    /// Fraction of codewords the level is meant to correct.
    pub fn fraction(self) -> f64 {
        match self {
            EcLevel::L => 0.07,
            EcLevel::M => 0.15,
            EcLevel::Q => 0.25,
        }
    }

    pub fn index(self) -> usize {
        match self {
            EcLevel::L => 0,
            EcLevel::M => 1,
            EcLevel::Q => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for EcLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            EcLevel::L => "L",
            EcLevel::M => "M",
            EcLevel::Q => "Q",
        };
        f.write_str(c)
    }
}

impl FromStr for EcLevel {
    type Err = HiqError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "L" | "l" => Ok(EcLevel::L),
            "M" | "m" => Ok(EcLevel::M),
            "Q" | "q" => Ok(EcLevel::Q),
            other => Err(HiqError::Parse(format!("unknown error-correction level {other:?}"))),
        }
    }
}

/// Sizes of one RS block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSpec {
    pub data_len: usize,
    pub ecc_len: usize,
}

/// The block structure of one layer at a version and level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPlan {
    pub version: u8,
    pub level: EcLevel,
    pub blocks: Vec<BlockSpec>,
}

impl BlockPlan {
    /// Plans the blocks of a layer whose data area holds `budget` codewords.
    ///
    /// Block count and parity per block come from the QR tables. The data
    /// codeword total is QR's plus room for the payload checksum, reduced
    /// when the layer's budget cannot hold it.
    pub fn new(version: u8, level: EcLevel, budget: usize) -> Result<Self> {
        if !(1..=40).contains(&version) {
            return Err(HiqError::InvalidParameter(format!("version {version} outside 1..=40")));
        }
        let li = level.index();
        let vi = version as usize - 1;
        let n_blocks = tables::BLOCK_COUNT[vi][li] as usize;
        // QR's odd parity counts (1-L, 1-Q, 3-L) are rounded up so t = ecc/2 exactly.
        let raw = tables::PARITY_PER_BLOCK[vi][li] as usize;
        let wanted = tables::qr_total_codewords(version) - n_blocks * raw + CHECKSUM_BYTES;
        let mut ecc_len = raw + raw % 2;
        let mut data_total;
        loop {
            data_total = wanted.min(budget.saturating_sub(n_blocks * ecc_len));
            // Parity must cover twice the level's fraction of the longest block.
            let longest = data_total.div_ceil(n_blocks) + ecc_len;
            if ecc_len as f64 >= 2.0 * level.fraction() * longest as f64 {
                break;
            }
            ecc_len += 2;
        }
        if data_total < n_blocks {
            return Err(HiqError::Capacity(format!(
                "version {version}-{level}: budget of {budget} codewords cannot hold {n_blocks} blocks"
            )));
        }
        let short_len = data_total / n_blocks;
        let n_long = data_total % n_blocks;
        let blocks = (0..n_blocks)
            .map(|i| BlockSpec {
                data_len: if i < n_blocks - n_long { short_len } else { short_len + 1 },
                ecc_len,
            })
            .collect();
        Ok(Self { version, level, blocks })
    }

    pub fn data_codewords(&self) -> usize {
        self.blocks.iter().map(|b| b.data_len).sum()
    }

    pub fn total_codewords(&self) -> usize {
        self.blocks.iter().map(|b| b.data_len + b.ecc_len).sum()
    }

    /// Width of the character-count field.
    pub fn count_bits(&self) -> usize {
        if self.version <= 9 {
            8
        } else {
            16
        }
    }

    /// Largest payload, in bytes, the layer can carry.
    pub fn payload_capacity(&self) -> usize {
        let bits = 8 * self.data_codewords();
        let overhead = 4 + self.count_bits() + 8 * CHECKSUM_BYTES;
        let by_bits = bits.saturating_sub(overhead) / 8;
        by_bits.min((1usize << self.count_bits()) - 1)
    }
}

/// One Reed-Solomon block of a layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsBlock {
    pub data_codewords: Vec<u8>,
    pub ecc_codewords: Vec<u8>,
    pub block_id: usize,
    pub layer_id: usize,
}

impl RsBlock {
    /// Correction capacity in codewords.
    pub fn t(&self) -> usize {
        self.ecc_codewords.len() / 2
    }

    pub fn codeword(&self) -> Vec<u8> {
        let mut cw = self.data_codewords.clone();
        cw.extend_from_slice(&self.ecc_codewords);
        cw
    }
}

/// Frames `payload` as a byte-mode segment filling the plan's data codewords.
pub fn frame_payload(payload: &[u8], plan: &BlockPlan) -> Result<Vec<u8>> {
    let max = plan.payload_capacity();
    if payload.len() > max {
        return Err(HiqError::CapacityExceeded { requested: payload.len(), max });
    }
    let total = plan.data_codewords();
    let mut bits = BitWriter::default();
    bits.push(MODE_BYTE, 4);
    bits.push(payload.len() as u32, plan.count_bits());
    for &b in payload {
        bits.push(b as u32, 8);
    }
    bits.push(crc32fast::hash(payload), 32);
    let remaining = 8 * total - bits.len();
    bits.push(0, remaining.min(4));
    let mut bytes = bits.into_bytes();
    let mut pad = PAD_BYTES.iter().cycle();
    while bytes.len() < total {
        bytes.push(*pad.next().unwrap());
    }
    Ok(bytes)
}

/// Inverse of [`frame_payload`]; verifies the checksum.
pub fn unframe_payload(data: &[u8], plan: &BlockPlan) -> Result<Vec<u8>> {
    let mut r = BitReader::new(data);
    let bad = |m: &str| HiqError::Parse(format!("layer stream: {m}"));
    let mode = r.read(4).ok_or_else(|| bad("truncated header"))?;
    if mode != MODE_BYTE {
        return Err(bad("unsupported segment mode"));
    }
    let len = r.read(plan.count_bits()).ok_or_else(|| bad("truncated count"))? as usize;
    let mut payload = Vec::with_capacity(len);
    for _ in 0..len {
        payload.push(r.read(8).ok_or_else(|| bad("truncated payload"))? as u8);
    }
    let crc = r.read(32).ok_or_else(|| bad("missing checksum"))?;
    if crc != crc32fast::hash(&payload) {
        return Err(bad("checksum mismatch"));
    }
    Ok(payload)
}

/// Splits framed data codewords into blocks and computes their parity.
pub fn rs_encode(payload: &[u8], plan: &BlockPlan, layer_id: usize) -> Result<Vec<RsBlock>> {
    let data = frame_payload(payload, plan)?;
    let mut offset = 0;
    let mut out = Vec::with_capacity(plan.blocks.len());
    for (block_id, spec) in plan.blocks.iter().enumerate() {
        let chunk = data[offset..offset + spec.data_len].to_vec();
        offset += spec.data_len;
        let ecc = ReedSolomon::new(GaloisField::gf256(), spec.ecc_len).encode(&chunk);
        out.push(RsBlock { data_codewords: chunk, ecc_codewords: ecc, block_id, layer_id });
    }
    Ok(out)
}

/// Outcome of decoding one block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDecode {
    pub data: Vec<u8>,
    pub corrected: usize,
}

/// Decodes one block. Failures are local to the block.
pub fn rs_decode_block(block: &RsBlock) -> Result<BlockDecode> {
    let mut cw = block.codeword();
    let rs = ReedSolomon::new(GaloisField::gf256(), block.ecc_codewords.len());
    match rs.decode(&mut cw) {
        Ok(corrected) => {
            cw.truncate(block.data_codewords.len());
            Ok(BlockDecode { data: cw, corrected })
        }
        Err(RsFailure::TooManyErrors) => Err(HiqError::BlockDecodeFailure {
            layer_id: block.layer_id,
            block_id: block.block_id,
        }),
    }
}

/// Concatenates blocks into the layer's codeword stream.
pub fn blocks_to_stream(blocks: &[RsBlock]) -> Vec<u8> {
    blocks.iter().flat_map(|b| b.codeword()).collect()
}

/// Cuts a received codeword stream back into blocks.
pub fn stream_to_blocks(stream: &[u8], plan: &BlockPlan, layer_id: usize) -> Result<Vec<RsBlock>> {
    if stream.len() < plan.total_codewords() {
        return Err(HiqError::Capacity(format!(
            "stream of {} codewords shorter than plan's {}",
            stream.len(),
            plan.total_codewords()
        )));
    }
    let mut offset = 0;
    Ok(plan
        .blocks
        .iter()
        .enumerate()
        .map(|(block_id, spec)| {
            let d = stream[offset..offset + spec.data_len].to_vec();
            let e = stream[offset + spec.data_len..offset + spec.data_len + spec.ecc_len].to_vec();
            offset += spec.data_len + spec.ecc_len;
            RsBlock { data_codewords: d, ecc_codewords: e, block_id, layer_id }
        })
        .collect())
}

#[derive(Default)]
struct BitWriter {
    bytes: Vec<u8>,
    nbits: usize,
}

impl BitWriter {
    fn push(&mut self, value: u32, width: usize) {
        for i in (0..width).rev() {
            if self.nbits % 8 == 0 {
                self.bytes.push(0);
            }
            if (value >> i) & 1 == 1 {
                let last = self.bytes.last_mut().unwrap();
                *last |= 0x80 >> (self.nbits % 8);
            }
            self.nbits += 1;
        }
    }

    fn len(&self) -> usize {
        self.nbits
    }

    fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    fn read(&mut self, width: usize) -> Option<u32> {
        if self.pos + width > 8 * self.data.len() {
            return None;
        }
        let mut v = 0u32;
        for _ in 0..width {
            let bit = (self.data[self.pos / 8] >> (7 - self.pos % 8)) & 1;
            v = (v << 1) | bit as u32;
            self.pos += 1;
        }
        Some(v)
    }
}
