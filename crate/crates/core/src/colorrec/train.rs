//! Building labeled training sets from corpus items.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::{sample_modules, Homography};
use crate::raster::{CorpusItem, RasterImage};
use crate::symbology::Layout;

use super::white::{augment_noisy_white, estimate_white};
use super::{ColorSample, TrainConfig};

/// Labeled samples of one frame, given its image→grid map and per-module
/// labels (`None` modules are skipped).
pub fn samples_from_frame(
    img: &RasterImage,
    image_to_grid: &Homography,
    layout: &Layout,
    labels: &[Option<usize>],
) -> Result<Vec<ColorSample>> {
    let white = estimate_white(img, image_to_grid, layout)?;
    let blocks = sample_modules(img, image_to_grid, layout.dim, white)?;
    Ok(blocks
        .into_iter()
        .zip(labels)
        .filter_map(|(x, l)| l.map(|class| ColorSample { x, class }))
        .collect())
}

/// Samples of a corpus item using its ground-truth geometry and an
/// estimated white point.
pub fn samples_from_item(item: &CorpusItem) -> Result<Vec<ColorSample>> {
    let image_to_grid = item.grid_to_image.inverse()?;
    samples_from_frame(&item.image, &image_to_grid, item.symbol.layout(), &item.labels())
}

/// All samples of `items`, each followed by `cfg.augment` noisy-white copies.
pub fn training_set(items: &[CorpusItem], cfg: &TrainConfig) -> Result<Vec<ColorSample>> {
    let per_item: Vec<Vec<ColorSample>> = items
        .par_iter()
        .map(|item| {
            let base = samples_from_item(item)?;
            if cfg.augment == 0 {
                return Ok(base);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(item.index as u64 + 1);
            let mut out = Vec::with_capacity(base.len() * (cfg.augment + 1));
            for s in base {
                for x in augment_noisy_white(&s.x, cfg.augment, cfg.sigma_w, &mut rng)? {
                    out.push(ColorSample { x, class: s.class });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_item.into_iter().flatten().collect())
}

/// A seeded uniform subset of at most `max` samples, in original order.
pub fn subsample(samples: &[ColorSample], max: usize, seed: u64) -> Vec<ColorSample> {
    if samples.len() <= max {
        return samples.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, samples.len(), max).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| samples[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecc::EcLevel;
    use crate::raster::{synth_item, CorpusSpec};

    #[test]
    fn clean_item_samples_match_codebook_colors() {
        let spec = CorpusSpec::clean(2, vec![EcLevel::L; 3]);
        let item = synth_item(&spec, 0, 4).unwrap();
        let samples = samples_from_item(&item).unwrap();
        let labeled = item.labels().iter().filter(|l| l.is_some()).count();
        assert_eq!(samples.len(), labeled);
        let cb = item.symbol.codebook();
        for s in &samples {
            let c = s.x.center();
            let want = cb.color(s.class);
            for k in 0..3 {
                assert!((c[k] - want[k]).abs() < 0.05, "{c:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn augmentation_multiplies_the_set() {
        let spec = CorpusSpec::clean(1, vec![EcLevel::L; 2]);
        let items = vec![synth_item(&spec, 0, 1).unwrap()];
        let cfg = TrainConfig { augment: 3, ..Default::default() };
        let base = samples_from_item(&items[0]).unwrap().len();
        assert_eq!(training_set(&items, &cfg).unwrap().len(), base * 4);
    }

    #[test]
    fn subsample_is_seeded_and_bounded() {
        let s: Vec<ColorSample> = (0..100)
            .map(|i| ColorSample {
                x: crate::geometry::FeatureBlock { x: [[i as f64; 3]; 5], row: 0, col: 0 },
                class: i % 2,
            })
            .collect();
        let a = subsample(&s, 10, 7);
        assert_eq!(a.len(), 10);
        assert_eq!(a, subsample(&s, 10, 7));
        assert_eq!(subsample(&s, 200, 7).len(), 100);
    }
}
