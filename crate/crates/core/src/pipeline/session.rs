//! Block accumulation across frames of one symbol.

use log::warn;

use crate::ecc::{unframe_payload, BlockPlan};
use crate::error::{HiqError, Result};
use crate::symbology::{layer_plans, FormatInfo};

use super::frame::FrameResult;

/// What makes two frames the same symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolIdentity {
    pub version: u8,
    pub format: FormatInfo,
}

/// Recovered blocks of one symbol, merged first-wins across frames.
#[derive(Debug, Clone, Default)]
pub struct ScanSession {
    identity: Option<SymbolIdentity>,
    plans: Vec<BlockPlan>,
    blocks: Vec<Vec<Option<Vec<u8>>>>,
    layers: Vec<Option<Vec<u8>>>,
    frames: usize,
    conflicts: usize,
    resets: usize,
}

impl ScanSession {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn identity(&self) -> Option<&SymbolIdentity> {
        self.identity.as_ref()
    }

    /// Frames accumulated so far, including those that failed to localize.
    pub fn frames(&self) -> usize {
        self.frames
    }

    /// Blocks seen with contents different from the first recovery.
    pub fn conflicts(&self) -> usize {
        self.conflicts
    }

    /// Layers whose blocks were all recovered but failed the checksum and
    /// were cleared.
    pub fn resets(&self) -> usize {
        self.resets
    }

    pub fn block_count(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn recovered_count(&self) -> usize {
        self.blocks.iter().flatten().filter(|b| b.is_some()).count()
    }

    pub fn is_recovered(&self, layer: usize, block: usize) -> bool {
        self.blocks.get(layer).and_then(|l| l.get(block)).is_some_and(Option::is_some)
    }

    /// Per-layer completion; empty before the first readable frame.
    pub fn completed_layers(&self) -> Vec<bool> {
        self.layers.iter().map(Option::is_some).collect()
    }

    pub fn is_complete(&self) -> bool {
        !self.layers.is_empty() && self.layers.iter().all(Option::is_some)
    }

    /// The verified payload once every layer is complete.
    pub fn payload(&self) -> Option<Vec<u8>> {
        if !self.is_complete() {
            return None;
        }
        Some(self.layers.iter().flatten().flatten().copied().collect())
    }

    /// Merges the recovered blocks of `frame`. A complete session is left
    /// untouched. Frames of a different symbol are rejected.
    pub fn accumulate(&mut self, frame: &FrameResult) -> Result<()> {
        if self.is_complete() {
            return Ok(());
        }
        let (Some(version), Some(format)) = (frame.version, frame.format.as_ref()) else {
            self.frames += 1;
            return Ok(());
        };
        let id = SymbolIdentity { version, format: format.clone() };
        match &self.identity {
            Some(known) if *known != id => {
                return Err(HiqError::InvalidParameter(format!(
                    "frame of version {version} with format {format:?} does not match the session's symbol"
                )));
            }
            Some(_) => {}
            None => {
                self.plans = layer_plans(version, &format.ec_levels)?;
                self.blocks = self.plans.iter().map(|p| vec![None; p.blocks.len()]).collect();
                self.layers = vec![None; self.plans.len()];
                self.identity = Some(id);
            }
        }
        if frame.blocks.len() != self.plans.len()
            || frame.blocks.iter().zip(&self.plans).any(|(b, p)| b.len() != p.blocks.len())
        {
            return Err(HiqError::InvalidParameter("frame block outcomes do not match the session's plan".into()));
        }
        self.frames += 1;
        for (j, outcomes) in frame.blocks.iter().enumerate() {
            if self.layers[j].is_some() {
                continue;
            }
            for (b, o) in outcomes.iter().enumerate() {
                let Some(data) = o.data() else { continue };
                match &self.blocks[j][b] {
                    None => self.blocks[j][b] = Some(data.to_vec()),
                    Some(prev) if prev != data => {
                        self.conflicts += 1;
                        warn!("layer {} block {b}: contents differ from the first recovery; keeping the first", j + 1);
                    }
                    Some(_) => {}
                }
            }
            if self.blocks[j].iter().all(Option::is_some) {
                let data: Vec<u8> = self.blocks[j].iter().flatten().flatten().copied().collect();
                match unframe_payload(&data, &self.plans[j]) {
                    Ok(p) => self.layers[j] = Some(p),
                    Err(e) => {
                        warn!("layer {} failed verification ({e}); discarding its blocks", j + 1);
                        self.resets += 1;
                        self.blocks[j].iter_mut().for_each(|b| *b = None);
                    }
                }
            }
        }
        Ok(())
    }
}
