//! Benchmark harness: per-classifier, per-preset BER/DFR with geometry,
//! randomization and accumulation toggles.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::color::Rgb;
use crate::colorrec::ColorModel;
use crate::error::{HiqError, Result};
use crate::raster::{distort_symbol, occlude_window, CorpusItem, RasterImage, Rendered};
use crate::symbology::{encode, EncodeOptions, HiqSymbol, Layout, ModuleRole};

use super::frame::{decode_frame, DecodeOptions, FrameResult, GroundTruth};
use super::metrics::{compute_metrics, Metrics};
use super::session::ScanSession;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchModes {
    pub decode: DecodeOptions,
    /// Merge blocks across the frames of a session; otherwise a session
    /// succeeds only when a single frame decodes on its own.
    pub accumulate: bool,
    /// Frames per session. The first is the corpus image (or a fresh render
    /// of the re-encoded symbol), later ones are re-shot with new noise.
    pub max_frames: usize,
    /// Re-encode every symbol with spatial randomization forced on or off.
    pub randomize: Option<bool>,
    /// Side of a module window painted with random codebook colors in every
    /// frame, placed clear of the finders and format field.
    pub occlusion: Option<usize>,
    pub seed: u64,
}

impl Default for BenchModes {
    fn default() -> Self {
        Self { decode: DecodeOptions::default(), accumulate: true, max_frames: 1, randomize: None, occlusion: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub classifier: String,
    pub preset: String,
    /// First-frame metrics plus the frames-to-success of each session.
    pub metrics: Metrics,
    pub sessions: usize,
    pub sessions_failed: usize,
}

/// Top-left corner of a random `w×w` window holding only data and
/// alignment modules.
pub fn random_window(layout: &Layout, w: usize, rng: &mut impl Rng) -> Result<(usize, usize)> {
    if w == 0 || w > layout.dim {
        return Err(HiqError::InvalidParameter(format!("window {w} for dimension {}", layout.dim)));
    }
    let clear = |r0: usize, c0: usize| {
        (r0..r0 + w).all(|r| {
            (c0..c0 + w).all(|c| matches!(layout.role(r, c), ModuleRole::Data | ModuleRole::Alignment))
        })
    };
    for _ in 0..10_000 {
        let (r, c) = (rng.random_range(0..=layout.dim - w), rng.random_range(0..=layout.dim - w));
        if clear(r, c) {
            return Ok((r, c));
        }
    }
    Err(HiqError::InvalidParameter(format!("no clear {w}×{w} window at dimension {}", layout.dim)))
}

/// Paints a random window of random codebook colors over a rendered frame.
pub fn occlude_random(
    image: &RasterImage,
    rendered_g2i: &crate::geometry::Homography,
    symbol: &HiqSymbol,
    w: usize,
    rng: &mut impl Rng,
) -> Result<RasterImage> {
    let origin = random_window(symbol.layout(), w, rng)?;
    let cb = symbol.codebook();
    let colors: Vec<Rgb> = (0..w * w).map(|_| cb.color(rng.random_range(0..cb.len()))).collect();
    occlude_window(image, rendered_g2i, origin, w, &colors)
}

fn frame_image(item: &CorpusItem, symbol: &HiqSymbol, fresh: bool, frame: usize, modes: &BenchModes) -> Result<RasterImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(modes.seed);
    rng.set_stream(((item.index as u64) << 20) | frame as u64);
    let Rendered { image, grid_to_image } = if frame == 0 && !fresh {
        Rendered { image: item.image.clone(), grid_to_image: item.grid_to_image }
    } else {
        distort_symbol(symbol, &item.profile, item.module_px, item.quiet, &mut rng)?
    };
    match modes.occlusion {
        Some(w) => occlude_random(&image, &grid_to_image, symbol, w, &mut rng),
        None => Ok(image),
    }
}

/// One session over an item: the first frame's result, the ground truth it
/// is scored against, and the frames needed to recover the payload.
pub fn run_session(
    item: &CorpusItem,
    model: &ColorModel,
    modes: &BenchModes,
) -> Result<(FrameResult, GroundTruth, Option<usize>)> {
    let (symbol, fresh) = match modes.randomize {
        Some(r) if r != item.symbol.format.randomized => {
            let opts = EncodeOptions {
                version: item.symbol.version,
                ec_levels: item.symbol.format.ec_levels.clone(),
                randomize: r,
                seed: item.symbol.format.seed,
            };
            (encode(&item.payload, &opts)?, true)
        }
        _ => (item.symbol.clone(), false),
    };
    let truth = GroundTruth::from_symbol(&symbol);
    let mut session = ScanSession::new();
    let mut first = None;
    let mut success = None;
    for f in 0..modes.max_frames.max(1) {
        let img = frame_image(item, &symbol, fresh, f, modes)?;
        let r = decode_frame(&img, model, modes.accumulate.then_some(&session), &modes.decode)?;
        let payload = if modes.accumulate {
            if let Err(e) = session.accumulate(&r) {
                warn!("item {}: frame {} skipped: {e}", item.index, f + 1);
            }
            session.payload()
        } else {
            r.payload.clone()
        };
        first.get_or_insert(r);
        if let Some(p) = payload {
            if p == item.payload {
                success = Some(f + 1);
            } else {
                warn!("item {}: verified payload differs from the encoded one", item.index);
            }
            break;
        }
    }
    Ok((first.expect("at least one frame"), truth, success))
}

/// Runs every model over the corpus. Rows come per model, one per lighting
/// preset in name order followed by an `all` row.
pub fn run_benchmark(corpus: &[CorpusItem], models: &[(String, ColorModel)], modes: &BenchModes) -> Result<Vec<BenchRow>> {
    if corpus.is_empty() {
        return Err(HiqError::UndefinedMetrics("empty corpus".into()));
    }
    for (name, model) in models {
        if let Some(item) = corpus.iter().find(|i| i.symbol.n_layers() != model.n_layers()) {
            return Err(HiqError::LayerMismatch(format!(
                "model {name} has {} layers, corpus item {} has {}",
                model.n_layers(),
                item.index,
                item.symbol.n_layers()
            )));
        }
    }
    let mut rows = Vec::new();
    for (name, model) in models {
        let runs: Vec<(FrameResult, GroundTruth, Option<usize>)> =
            corpus.par_iter().map(|item| run_session(item, model, modes)).collect::<Result<_>>()?;
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, item) in corpus.iter().enumerate() {
            groups.entry(item.profile.lighting.as_str()).or_default().push(i);
        }
        let all: Vec<usize> = (0..corpus.len()).collect();
        for (preset, idx) in groups.iter().map(|(p, v)| (*p, v)).chain([("all", &all)]) {
            let results: Vec<FrameResult> = idx.iter().map(|&i| runs[i].0.clone()).collect();
            let truth: Vec<GroundTruth> = idx.iter().map(|&i| runs[i].1.clone()).collect();
            let mut metrics = compute_metrics(&results, &truth)?;
            metrics.frames_to_success = idx.iter().filter_map(|&i| runs[i].2).collect();
            rows.push(BenchRow {
                classifier: name.clone(),
                preset: preset.to_string(),
                sessions: idx.len(),
                sessions_failed: idx.len() - metrics.frames_to_success.len(),
                metrics,
            });
        }
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

pub const CSV_HEADER: &str = "classifier,preset,BER,DFR,frames_mean,ppf,frames,localized,decoded,sessions_failed";

pub fn report_csv(rows: &[BenchRow]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in rows {
        let m = &r.metrics;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.classifier,
            r.preset,
            opt(m.ber),
            opt(m.dfr),
            opt(m.frames_mean()),
            m.predictions_per_frame.map_or_else(String::new, |p| format!("{p:.0}")),
            m.frames,
            m.localized,
            m.decoded,
            r.sessions_failed
        )
        .unwrap();
    }
    s
}

/// Aligned text table. DFR is per image (first frame of each session);
/// frames-to-success is per session.
pub fn report_summary(rows: &[BenchRow]) -> String {
    let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{:.3}%", 100.0 * x));
    let mut s = format!(
        "{:<10} {:<14} {:>9} {:>15} {:>18} {:>10}\n",
        "classifier", "preset", "BER", "DFR (per image)", "frames (session)", "ppf"
    );
    for r in rows {
        let m = &r.metrics;
        let frames = match m.frames_mean() {
            Some(f) if r.sessions_failed == 0 => format!("{f:.2}"),
            Some(f) => format!("{f:.2} ({} failed)", r.sessions_failed),
            None => format!("- ({} failed)", r.sessions_failed),
        };
        writeln!(
            s,
            "{:<10} {:<14} {:>9} {:>15} {:>18} {:>10}",
            r.classifier,
            r.preset,
            pct(m.ber),
            pct(m.dfr),
            frames,
            m.predictions_per_frame.map_or_else(|| "-".into(), |p| format!("{p:.0}"))
        )
        .unwrap();
    }
    s
}
