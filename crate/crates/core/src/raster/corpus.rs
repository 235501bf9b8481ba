//! Deterministic synthetic corpora of distorted symbol renders with
//! per-module ground truth.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::{Rgb, WHITE};
use crate::ecc::EcLevel;
use crate::error::{HiqError, Result};
use crate::geometry::{homography_4pt, Correspondence, Homography};
use crate::symbology::{self, container, HiqSymbol, Layout, ModuleRole};

use super::distort::{
    add_blur, add_noise, apply_cci, apply_cmi, apply_illumination, apply_warp, cmi_symmetric, CmiWeights,
    Illumination, NO_CMI,
};
use super::image::RasterImage;
use super::render::{render_grid, Rendered};

/// Concrete distortion parameters of one corpus item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionProfile {
    pub lighting: String,
    pub cmi: CmiWeights,
    pub cci: [[f64; 3]; 3],
    pub cci_offset: Rgb,
    pub illumination: Illumination,
    /// Warp of the rendered image (source → destination pixels).
    pub warp: Homography,
    pub noise_sigma: Rgb,
    pub blur_sigma: f64,
}

impl DistortionProfile {
    pub fn clean() -> Self {
        Self {
            lighting: "neutral".into(),
            cmi: NO_CMI,
            cci: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            cci_offset: [0.0; 3],
            illumination: Illumination::NEUTRAL,
            warp: Homography::IDENTITY,
            noise_sigma: [0.0; 3],
            blur_sigma: 0.0,
        }
    }
}

/// Ranges from which item profiles are drawn. All ranges are `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub version: u8,
    pub ec_levels: Vec<EcLevel>,
    pub randomize: bool,
    pub module_px: usize,
    pub quiet: usize,
    /// Fixed CMI weights; overrides `cmi_center` when set.
    pub cmi_fixed: Option<CmiWeights>,
    /// Center weight of symmetric CMI.
    pub cmi_center: [f64; 2],
    /// Total off-diagonal leakage per row of the channel-mixing matrix.
    pub cci_strength: [f64; 2],
    pub cci_offset: [f64; 2],
    pub lighting: Vec<String>,
    /// Extra gradient magnitude in a random direction.
    pub gradient: [f64; 2],
    /// Largest corner displacement as a fraction of the image side.
    pub warp_inset: [f64; 2],
    pub noise_sigma: [f64; 2],
    pub blur_sigma: [f64; 2],
}

impl CorpusSpec {
    /// Undistorted renders.
    pub fn clean(version: u8, ec_levels: Vec<EcLevel>) -> Self {
        Self {
            version,
            ec_levels,
            randomize: true,
            module_px: 4,
            quiet: 4,
            cmi_fixed: Some(NO_CMI),
            cmi_center: [1.0, 1.0],
            cci_strength: [0.0, 0.0],
            cci_offset: [0.0, 0.0],
            lighting: vec!["neutral".into()],
            gradient: [0.0, 0.0],
            warp_inset: [0.0, 0.0],
            noise_sigma: [0.0, 0.0],
            blur_sigma: [0.0, 0.0],
        }
    }

    /// Training corpus: 3 layers at dim 177 under mixed lighting.
    pub fn training() -> Self {
        Self {
            cmi_fixed: None,
            cmi_center: [0.75, 1.0],
            cci_strength: [0.0, 0.12],
            cci_offset: [0.0, 0.02],
            lighting: Illumination::PRESETS.iter().map(|s| s.to_string()).collect(),
            gradient: [0.0, 0.1],
            warp_inset: [0.0, 0.04],
            noise_sigma: [0.005, 0.02],
            blur_sigma: [0.0, 0.6],
            ..Self::clean(40, vec![EcLevel::L; 3])
        }
    }

    /// Strong cross-module interference with mild other distortions.
    pub fn cmi_heavy(version: u8, n_layers: usize) -> Self {
        Self {
            cmi_fixed: None,
            cmi_center: [0.6, 0.7],
            cci_strength: [0.0, 0.05],
            cci_offset: [0.0, 0.01],
            lighting: vec!["neutral".into(), "incandescent".into(), "outdoor".into()],
            gradient: [0.0, 0.05],
            warp_inset: [0.0, 0.02],
            noise_sigma: [0.06, 0.1],
            blur_sigma: [0.0, 0.3],
            ..Self::clean(version, vec![EcLevel::L; n_layers])
        }
    }

    pub fn n_layers(&self) -> usize {
        self.ec_levels.len()
    }
}

/// One labeled corpus item.
#[derive(Debug, Clone)]
pub struct CorpusItem {
    pub index: usize,
    pub image: RasterImage,
    pub symbol: HiqSymbol,
    pub payload: Vec<u8>,
    pub profile: DistortionProfile,
    pub grid_to_image: Homography,
    pub module_px: usize,
    pub quiet: usize,
}

impl CorpusItem {
    /// Ground-truth class of every module (row-major); `None` on function
    /// patterns, whose colors are not codebook entries.
    pub fn labels(&self) -> Vec<Option<usize>> {
        symbol_labels(&self.symbol)
    }
}

pub fn symbol_labels(symbol: &HiqSymbol) -> Vec<Option<usize>> {
    let layout = symbol.layout();
    let d = layout.dim;
    (0..d * d)
        .map(|i| {
            let (r, c) = (i / d, i % d);
            matches!(layout.role(r, c), ModuleRole::Data | ModuleRole::Format).then(|| symbol.module_class(r, c))
        })
        .collect()
}

fn draw(rng: &mut impl Rng, range: [f64; 2]) -> f64 {
    if range[1] > range[0] {
        rng.random_range(range[0]..=range[1])
    } else {
        range[0]
    }
}

/// Renders `symbol` through every stage of `profile`.
///
/// Order: module-grid CMI, rasterization, blur, warp, channel mixing,
/// illumination, sensor noise.
pub fn distort_symbol(
    symbol: &HiqSymbol,
    profile: &DistortionProfile,
    module_px: usize,
    quiet: usize,
    rng: &mut impl Rng,
) -> Result<Rendered> {
    let colors = apply_cmi(&symbol.colors(), symbol.dim(), &profile.cmi)?;
    let Rendered { image, grid_to_image } = render_grid(&colors, symbol.dim(), module_px, quiet)?;
    let image = add_blur(&image, profile.blur_sigma)?;
    let image = if profile.warp == Homography::IDENTITY {
        image
    } else {
        apply_warp(&image, &profile.warp, WHITE)?
    };
    let image = apply_cci(&image, &profile.cci, profile.cci_offset)?;
    let image = apply_illumination(&image, &profile.illumination)?;
    let image = add_noise(&image, profile.noise_sigma, rng)?;
    Ok(Rendered { image, grid_to_image: profile.warp.compose(&grid_to_image) })
}

/// Draws one distortion profile from the ranges of `spec` for a rendered
/// image `side` pixels wide.
pub fn draw_profile(spec: &CorpusSpec, side: f64, rng: &mut impl Rng) -> Result<DistortionProfile> {
    let cmi = spec.cmi_fixed.unwrap_or_else(|| cmi_symmetric(draw(rng, spec.cmi_center)));
    let strength = draw(rng, spec.cci_strength);
    let mut cci = [[0.0; 3]; 3];
    for (r, row) in cci.iter_mut().enumerate() {
        let u: [f64; 2] = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let total = u[0] + u[1];
        let mut j = 0;
        for (c, v) in row.iter_mut().enumerate() {
            if c == r {
                *v = 1.0 - strength;
            } else {
                *v = if total > 0.0 { strength * u[j] / total } else { strength / 2.0 };
                j += 1;
            }
        }
    }
    let cci_offset = [(); 3].map(|_| draw(rng, spec.cci_offset));
    let lighting = spec.lighting[rng.random_range(0..spec.lighting.len())].clone();
    let mut illumination = Illumination::preset(&lighting)?;
    let g = draw(rng, spec.gradient);
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    illumination.gradient[0] += g * phi.cos();
    illumination.gradient[1] += g * phi.sin();

    let inset = draw(rng, spec.warp_inset);
    let warp = if inset > 0.0 {
        let src = [(0.0, 0.0), (side, 0.0), (side, side), (0.0, side)];
        let dir = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];
        let corrs: Vec<Correspondence> = src
            .iter()
            .zip(dir)
            .map(|(&(x, y), (dx, dy))| {
                let ox = dx * inset * side * rng.random_range(0.0..1.0);
                let oy = dy * inset * side * rng.random_range(0.0..1.0);
                Correspondence::new((x, y), (x + ox, y + oy), 1.0)
            })
            .collect();
        homography_4pt(&corrs)?
    } else {
        Homography::IDENTITY
    };
    let sigma = draw(rng, spec.noise_sigma);
    Ok(DistortionProfile {
        lighting,
        cmi,
        cci,
        cci_offset,
        illumination,
        warp,
        noise_sigma: [sigma; 3],
        blur_sigma: draw(rng, spec.blur_sigma),
    })
}

/// Generates item `index` of the corpus defined by `(spec, seed)`.
pub fn synth_item(spec: &CorpusSpec, index: usize, seed: u64) -> Result<CorpusItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let cap = symbology::capacity(spec.version, &spec.ec_levels)?;
    let mut payload = vec![0u8; cap];
    rng.fill_bytes(&mut payload);
    let opts = symbology::EncodeOptions {
        version: spec.version,
        ec_levels: spec.ec_levels.clone(),
        randomize: spec.randomize,
        seed: rng.random(),
    };
    let symbol = symbology::encode(&payload, &opts)?;
    let side = ((symbol.dim() + 2 * spec.quiet) * spec.module_px) as f64;
    let profile = draw_profile(spec, side, &mut rng)?;
    let Rendered { image, grid_to_image } = distort_symbol(&symbol, &profile, spec.module_px, spec.quiet, &mut rng)?;
    Ok(CorpusItem {
        index,
        image,
        symbol,
        payload,
        profile,
        grid_to_image,
        module_px: spec.module_px,
        quiet: spec.quiet,
    })
}

/// Generates `count` items in parallel; output order follows the index.
pub fn synth_corpus(spec: &CorpusSpec, count: usize, seed: u64) -> Result<Vec<CorpusItem>> {
    if spec.lighting.is_empty() || spec.ec_levels.is_empty() {
        return Err(HiqError::InvalidParameter("corpus spec needs lighting presets and EC levels".into()));
    }
    Layout::get(spec.version)?;
    (0..count).into_par_iter().map(|i| synth_item(spec, i, seed)).collect()
}

/// One line of `manifest.jsonl`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub image: String,
    pub symbol: String,
    pub labels: String,
    pub profile: DistortionProfile,
    pub grid_to_image: Homography,
    pub module_px: usize,
    pub quiet: usize,
}

fn labels_to_text(labels: &[Option<usize>], dim: usize) -> String {
    let mut s = String::new();
    for row in labels.chunks(dim) {
        s.extend(row.iter().map(|l| match l {
            Some(k) => char::from_digit(*k as u32, 16).expect("class below 16"),
            None => '.',
        }));
        s.push('\n');
    }
    s
}

/// Writes images (PNG), symbols, label grids and `manifest.jsonl`.
pub fn write_corpus(dir: &Path, items: &[CorpusItem]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = fs::File::create(dir.join("manifest.jsonl"))?;
    for item in items {
        let stem = format!("item_{:05}", item.index);
        let rec = ManifestRecord {
            image: format!("{stem}.png"),
            symbol: format!("{stem}.hiq"),
            labels: format!("{stem}.labels"),
            profile: item.profile.clone(),
            grid_to_image: item.grid_to_image,
            module_px: item.module_px,
            quiet: item.quiet,
        };
        item.image.save(&dir.join(&rec.image))?;
        container::save(&item.symbol, &dir.join(&rec.symbol))?;
        fs::write(dir.join(&rec.labels), labels_to_text(&item.labels(), item.symbol.dim()))?;
        let line = serde_json::to_string(&rec).map_err(|e| HiqError::Parse(e.to_string()))?;
        writeln!(manifest, "{line}")?;
    }
    Ok(())
}

/// Reads a corpus written by [`write_corpus`]. Payloads are recovered from
/// the stored symbols.
pub fn load_corpus(dir: &Path) -> Result<Vec<CorpusItem>> {
    let file = fs::File::open(dir.join("manifest.jsonl"))
        .map_err(|e| HiqError::Io(format!("{}: {e}", dir.join("manifest.jsonl").display())))?;
    let mut items = Vec::new();
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ManifestRecord = serde_json::from_str(&line)
            .map_err(|e| HiqError::Parse(format!("manifest line {}: {e}", index + 1)))?;
        let symbol = container::load(&dir.join(&rec.symbol))?;
        let payload = symbol.payload()?;
        items.push(CorpusItem {
            index,
            image: RasterImage::load(&dir.join(&rec.image))?,
            symbol,
            payload,
            profile: rec.profile,
            grid_to_image: rec.grid_to_image,
            module_px: rec.module_px,
            quiet: rec.quiet,
        });
    }
    Ok(items)
}
