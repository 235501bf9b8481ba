//! Decoding one captured frame.

use std::fmt;

use crate::colorrec::{estimate_white, ColorModel};
use crate::detect::{binarize, find_alignments, find_patterns, grid_point, Alignment, Finder};
use crate::ecc::{rs_decode_block, stream_to_blocks, unframe_payload, BlockPlan};
use crate::error::{HiqError, Result};
use crate::geometry::{
    affine_3pt, estimate_rgt, homography_4pt, sample_modules, Correspondence, Homography, ALIGNMENT_WEIGHT,
    FINDER_WEIGHT,
};
use crate::raster::RasterImage;
use crate::symbology::layout::{MAX_VERSION, MIN_VERSION};
use crate::symbology::{
    bits_to_bytes, finder_layer_reads, format_copies_from_grid, layer_plans, vote_layer_count, FormatInfo, HiqSymbol,
    Layout, Placement,
};

use super::session::ScanSession;

/// How the image→grid homography is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryMode {
    /// Weighted fit over the finders and every detected alignment pattern.
    Rgt,
    /// Exact fit through the three finders and the bottom-right-most
    /// alignment pattern (affine from the finders alone when none is found).
    FourPoint,
}

/// How far from the finder-spacing estimate the version search reaches.
pub const VERSION_SEARCH_RADIUS: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeOptions {
    pub geometry: GeometryMode,
    /// Retry versions near the estimate when the estimate fails.
    pub version_search: bool,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self { geometry: GeometryMode::Rgt, version_search: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameStatus {
    /// Every block that was processed corrected successfully.
    Decoded,
    /// Format read, at least one block failed.
    Partial,
    /// Localized, but the format field could not be read.
    FormatUnreadable,
    /// No usable geometry: finders missing or the grid leaves the image.
    LocalizationFailed,
}

impl FrameStatus {
    pub fn localized(self) -> bool {
        self != FrameStatus::LocalizationFailed
    }
}

impl fmt::Display for FrameStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameStatus::Decoded => "decoded",
            FrameStatus::Partial => "partial",
            FrameStatus::FormatUnreadable => "format-unreadable",
            FrameStatus::LocalizationFailed => "localization-failed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockOutcome {
    Recovered { data: Vec<u8>, corrected: usize },
    Failed,
    /// The layer was already complete in the session.
    Skipped,
}

impl BlockOutcome {
    pub fn data(&self) -> Option<&[u8]> {
        match self {
            BlockOutcome::Recovered { data, .. } => Some(data),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub status: FrameStatus,
    pub message: Option<String>,
    pub version: Option<u8>,
    pub format: Option<FormatInfo>,
    /// Both format copies decoded to the same field (or the session supplied
    /// it).
    pub format_agreed: bool,
    /// Layers the classifier did not evaluate.
    pub skipped: Vec<bool>,
    /// Per-layer predicted module bits, row-major.
    pub grids: Vec<Vec<u8>>,
    /// Per-layer stream-order bits before correction; `None` for skipped
    /// layers or when the format is unknown.
    pub streams: Vec<Option<Vec<u8>>>,
    /// Per-layer, per-block outcomes in block order.
    pub blocks: Vec<Vec<BlockOutcome>>,
    /// Discriminant evaluations spent on this frame.
    pub evaluations: usize,
    /// Payload verified from this frame alone.
    pub payload: Option<Vec<u8>>,
}

impl FrameResult {
    fn unlocalized(message: String) -> Self {
        Self {
            status: FrameStatus::LocalizationFailed,
            message: Some(message),
            version: None,
            format: None,
            format_agreed: false,
            skipped: Vec::new(),
            grids: Vec::new(),
            streams: Vec::new(),
            blocks: Vec::new(),
            evaluations: 0,
            payload: None,
        }
    }

    pub fn recovered_blocks(&self) -> usize {
        self.blocks.iter().flatten().filter(|b| b.data().is_some()).count()
    }

    /// Blocks that were attempted (skipped ones excluded).
    pub fn attempted_blocks(&self) -> usize {
        self.blocks.iter().flatten().filter(|b| **b != BlockOutcome::Skipped).count()
    }

    /// Ties keep the earlier candidate, so the estimated version wins when
    /// nothing else separates the candidates.
    fn rank(&self) -> (u8, usize, bool) {
        let s = match self.status {
            FrameStatus::Decoded => 3,
            FrameStatus::Partial => 2,
            FrameStatus::FormatUnreadable => 1,
            FrameStatus::LocalizationFailed => 0,
        };
        (s, self.recovered_blocks(), self.format_agreed)
    }

    /// Wrong and total pre-correction bits per layer against `truth`.
    ///
    /// A frame localized at the wrong version counts every bit of the true
    /// streams as wrong. Skipped layers count nothing. `None` when the frame
    /// was not localized.
    pub fn bit_errors(&self, truth: &GroundTruth) -> Option<Vec<(usize, usize)>> {
        if !self.status.localized() {
            return None;
        }
        Some(
            truth
                .streams
                .iter()
                .enumerate()
                .map(|(j, want)| {
                    if self.version != Some(truth.version) || j >= self.grids.len() {
                        return (want.len(), want.len());
                    }
                    if self.skipped[j] {
                        return (0, 0);
                    }
                    let got = truth.placement.gather(truth.layout(), &self.grids[j]);
                    let wrong = got.iter().zip(want).filter(|(a, b)| a != b).count();
                    (wrong, want.len())
                })
                .collect(),
        )
    }
}

/// Encoder-side streams of a symbol, for scoring decoded frames.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub version: u8,
    pub placement: Placement,
    /// Per-layer stream-order bits, before randomization.
    pub streams: Vec<Vec<u8>>,
}

impl GroundTruth {
    pub fn from_symbol(symbol: &HiqSymbol) -> Self {
        let placement = symbol.placement();
        let layout = symbol.layout();
        let streams = symbol.layers.iter().map(|l| placement.gather(layout, &l.bits)).collect();
        Self { version: symbol.version, placement, streams }
    }

    fn layout(&self) -> &'static Layout {
        Layout::get(self.version).expect("ground truth from a valid symbol")
    }
}

fn correspondences(finders: &[Finder; 3], alignments: &[Alignment], layout: &Layout) -> Vec<Correspondence> {
    let mut out: Vec<Correspondence> = finders
        .iter()
        .zip(layout.finder_centers())
        .map(|(f, (r, c))| Correspondence::new(f.center, grid_point(r, c), FINDER_WEIGHT))
        .collect();
    out.extend(
        alignments
            .iter()
            .map(|a| Correspondence::new(a.center, grid_point(a.grid.0, a.grid.1), ALIGNMENT_WEIGHT)),
    );
    out
}

fn four_point(finders: &[Finder; 3], alignments: &[Alignment], layout: &Layout) -> Result<Homography> {
    let mut corrs = correspondences(finders, &[], layout);
    match alignments.iter().max_by_key(|a| (a.grid.0 + a.grid.1, a.grid.0)) {
        Some(a) => {
            corrs.push(Correspondence::new(a.center, grid_point(a.grid.0, a.grid.1), ALIGNMENT_WEIGHT));
            homography_4pt(&corrs)
        }
        None => affine_3pt(&corrs),
    }
}

/// Image→grid homography from the detected patterns. With no alignment
/// pattern both modes reduce to the affine map through the finders.
pub fn fit_geometry(
    finders: &[Finder; 3],
    alignments: &[Alignment],
    layout: &Layout,
    mode: GeometryMode,
) -> Result<Homography> {
    match mode {
        GeometryMode::Rgt if !alignments.is_empty() => estimate_rgt(&correspondences(finders, alignments, layout)),
        GeometryMode::Rgt => affine_3pt(&correspondences(finders, &[], layout)),
        GeometryMode::FourPoint => four_point(finders, alignments, layout),
    }
}

/// Layer count voted from the finder rings, without classifying modules.
pub fn detect_layer_count(img: &RasterImage) -> Result<usize> {
    let patterns = find_patterns(&binarize(img)?, img)?;
    vote_layer_count(finder_layer_reads(patterns.finders.map(|f| Some(f.ring))))
}

/// Decodes one frame: binarize, locate patterns, fit the geometry,
/// normalize by the estimated white, classify every module, read the format,
/// undo the placement and correct each block.
///
/// Recoverable failures are reported in the status; the only error is a
/// model whose layer count differs from the symbol's.
pub fn decode_frame(
    img: &RasterImage,
    model: &ColorModel,
    session: Option<&ScanSession>,
    opts: &DecodeOptions,
) -> Result<FrameResult> {
    let bits = match binarize(img) {
        Ok(b) => b,
        Err(e) => return Ok(FrameResult::unlocalized(e.to_string())),
    };
    let patterns = match find_patterns(&bits, img) {
        Ok(p) => p,
        Err(e) => return Ok(FrameResult::unlocalized(e.to_string())),
    };
    let known = session.and_then(|s| s.identity());
    let n = match (known, vote_layer_count(finder_layer_reads(patterns.finders.map(|f| Some(f.ring))))) {
        (Some(id), _) => id.format.n_layers,
        (None, Ok(n)) => n,
        (None, Err(e)) => {
            let mut r = FrameResult::unlocalized(e.to_string());
            r.status = FrameStatus::FormatUnreadable;
            return Ok(r);
        }
    };
    if n != model.n_layers() {
        return Err(HiqError::LayerMismatch(format!(
            "symbol has {n} layers, model expects {}",
            model.n_layers()
        )));
    }
    let mut candidates = vec![known.map_or(patterns.version, |id| id.version)];
    if known.is_none() && opts.version_search {
        let v = patterns.version as i32;
        candidates.extend(
            (1..=VERSION_SEARCH_RADIUS)
                .flat_map(|d| [v - d, v + d])
                .filter(|v| (MIN_VERSION as i32..=MAX_VERSION as i32).contains(v))
                .map(|v| v as u8),
        );
    }
    let mut best: Option<FrameResult> = None;
    for v in candidates {
        let alignments = if v == patterns.version {
            patterns.alignments.clone()
        } else {
            match find_alignments(&bits, img, &patterns.finders, v) {
                Ok(a) => a,
                Err(_) => continue,
            }
        };
        let r = decode_at(img, model, session, opts, &patterns.finders, &alignments, v, n);
        if r.status == FrameStatus::Decoded {
            return Ok(r);
        }
        if best.as_ref().is_none_or(|b| r.rank() > b.rank()) {
            best = Some(r);
        }
    }
    Ok(best.unwrap_or_else(|| FrameResult::unlocalized("no usable version".into())))
}

#[allow(clippy::too_many_arguments)]
fn decode_at(
    img: &RasterImage,
    model: &ColorModel,
    session: Option<&ScanSession>,
    opts: &DecodeOptions,
    finders: &[Finder; 3],
    alignments: &[Alignment],
    version: u8,
    n: usize,
) -> FrameResult {
    let layout = match Layout::get(version) {
        Ok(l) => l,
        Err(e) => return FrameResult::unlocalized(e.to_string()),
    };
    let sampled = fit_geometry(finders, alignments, layout, opts.geometry).and_then(|h| {
        let white = estimate_white(img, &h, layout)?;
        sample_modules(img, &h, layout.dim, white)
    });
    let blocks = match sampled {
        Ok(b) => b,
        Err(e) => return FrameResult::unlocalized(e.to_string()),
    };

    let skipped = match session.map(|s| s.completed_layers()) {
        Some(done) if done.len() == n => done,
        _ => vec![false; n],
    };
    let mut grids = vec![vec![0u8; blocks.len()]; n];
    let mut evaluations = 0;
    for (i, fb) in blocks.iter().enumerate() {
        let p = model.predict(fb, &skipped);
        evaluations += p.evaluations;
        for (grid, &b) in grids.iter_mut().zip(&p.bits) {
            grid[i] = b;
        }
    }

    let mut result = FrameResult {
        status: FrameStatus::FormatUnreadable,
        message: None,
        version: Some(version),
        format: None,
        format_agreed: false,
        skipped: skipped.clone(),
        grids,
        streams: vec![None; n],
        blocks: Vec::new(),
        evaluations,
        payload: None,
    };
    let format = match session.and_then(|s| s.identity()) {
        Some(id) => {
            result.format_agreed = true;
            id.format.clone()
        }
        None => {
            let [a, b] = format_copies_from_grid(layout, &result.grids[0]);
            result.format_agreed = matches!(
                (FormatInfo::decode_bits(&a), FormatInfo::decode_bits(&b)),
                (Ok((fa, _)), Ok((fb, _))) if fa == fb
            );
            match FormatInfo::decode_copies(&a, &b) {
                Ok(f) if f.n_layers == n => f,
                Ok(f) => {
                    result.message = Some(format!("finders report {n} layers, format field {}", f.n_layers));
                    return result;
                }
                Err(e) => {
                    result.message = Some(e.to_string());
                    return result;
                }
            }
        }
    };
    let plans = match layer_plans(version, &format.ec_levels) {
        Ok(p) => p,
        Err(e) => {
            result.message = Some(e.to_string());
            return result;
        }
    };
    let placement = Placement::build(layout, format.randomized, format.seed);
    result.format = Some(format);

    for (j, plan) in plans.iter().enumerate() {
        if skipped[j] {
            result.blocks.push(vec![BlockOutcome::Skipped; plan.blocks.len()]);
            continue;
        }
        let stream = placement.gather(layout, &result.grids[j]);
        result.blocks.push(decode_blocks(&stream, plan, j));
        result.streams[j] = Some(stream);
    }
    let all_ok = result.blocks.iter().flatten().all(|b| *b != BlockOutcome::Failed);
    result.status = if all_ok { FrameStatus::Decoded } else { FrameStatus::Partial };
    if all_ok && !skipped.iter().any(|&s| s) {
        match assemble_payload(&result.blocks, &plans) {
            Ok(p) => result.payload = Some(p),
            Err(e) => {
                result.status = FrameStatus::Partial;
                result.message = Some(e.to_string());
            }
        }
    }
    result
}

fn decode_blocks(stream: &[u8], plan: &BlockPlan, layer_id: usize) -> Vec<BlockOutcome> {
    match stream_to_blocks(&bits_to_bytes(stream), plan, layer_id) {
        Ok(blocks) => blocks
            .iter()
            .map(|b| match rs_decode_block(b) {
                Ok(d) => BlockOutcome::Recovered { data: d.data, corrected: d.corrected },
                Err(_) => BlockOutcome::Failed,
            })
            .collect(),
        Err(_) => vec![BlockOutcome::Failed; plan.blocks.len()],
    }
}

/// Concatenates each layer's block data and strips the framing, checking
/// every layer's checksum.
pub fn assemble_payload(blocks: &[Vec<BlockOutcome>], plans: &[BlockPlan]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for (j, (layer, plan)) in blocks.iter().zip(plans).enumerate() {
        let mut data = Vec::with_capacity(plan.data_codewords());
        for (b, o) in layer.iter().enumerate() {
            data.extend(o.data().ok_or(HiqError::BlockDecodeFailure { layer_id: j, block_id: b })?);
        }
        out.extend(unframe_payload(&data, plan)?);
    }
    Ok(out)
}
