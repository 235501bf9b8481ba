use proptest::prelude::*;

use hiq::colorrec::{estimate_white, normalize_white, ColorModel};
use hiq::detect::binarize;
use hiq::ecc::{frame_payload, unframe_payload, BlockPlan, EcLevel, GaloisField, ReedSolomon};
use hiq::geometry::{estimate_rgt, Correspondence, Homography};
use hiq::pipeline::{decode_frame, occlude_random, DecodeOptions, ScanSession};
use hiq::raster::{render, RasterImage};
use hiq::symbology::{encode, EncodeOptions, Layout, Placement};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn image_strategy() -> impl Strategy<Value = RasterImage> {
    (8usize..96, 8usize..96).prop_flat_map(|(w, h)| {
        prop::collection::vec(0.0f32..=1.0, w * h * 3).prop_map(move |px| {
            let mut img = RasterImage::filled(w, h, [0.0; 3]);
            img.raw_mut().copy_from_slice(&px);
            img
        })
    })
}

/// Index of the 8×8 block holding pixel `p` along an axis of `len` pixels,
/// found by scanning block starts rather than dividing.
fn block_of(p: usize, len: usize) -> usize {
    (0..8).rev().find(|&b| b * len / 8 <= p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn binarization_matches_block_midrange(img in image_strategy()) {
        let bits = binarize(&img).unwrap();
        let mut lo = vec![[f64::INFINITY; 3]; 64];
        let mut hi = vec![[f64::NEG_INFINITY; 3]; 64];
        for y in 0..img.height {
            for x in 0..img.width {
                let b = block_of(y, img.height) * 8 + block_of(x, img.width);
                let p = img.get(x, y);
                for k in 0..3 {
                    lo[b][k] = lo[b][k].min(p[k]);
                    hi[b][k] = hi[b][k].max(p[k]);
                }
            }
        }
        for y in 0..img.height {
            for x in 0..img.width {
                let b = block_of(y, img.height) * 8 + block_of(x, img.width);
                let p = img.get(x, y);
                let black = (0..3).any(|k| p[k] < (lo[b][k] + hi[b][k]) / 2.0);
                prop_assert_eq!(bits.is_black(x, y), black, "pixel ({}, {})", x, y);
            }
        }
    }

    #[test]
    fn rs_corrects_up_to_half_the_parity(
        data in prop::collection::vec(any::<u8>(), 1..120),
        parity in (1usize..=10).prop_map(|h| 2 * h),
        seed in any::<u64>(),
    ) {
        let rs = ReedSolomon::new(GaloisField::gf256(), parity);
        let mut clean = data.clone();
        clean.extend(rs.encode(&data));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_err = rand::Rng::random_range(&mut rng, 0..=parity / 2);
        let mut word = clean.clone();
        for i in rand::seq::index::sample(&mut rng, word.len(), n_err) {
            word[i] ^= rand::Rng::random_range(&mut rng, 1..=255u8);
        }
        prop_assert_eq!(rs.decode(&mut word), Ok(n_err));
        prop_assert_eq!(word, clean);
    }

    #[test]
    fn framing_round_trips(version in 1u8..=12, level in 0usize..3, len in 0usize..200) {
        let level = EcLevel::from_index(level).unwrap();
        let plan = BlockPlan::new(version, level, Layout::get(version).unwrap().codeword_budget()).unwrap();
        let payload: Vec<u8> = (0..len.min(plan.payload_capacity())).map(|i| (i * 37) as u8).collect();
        let framed = frame_payload(&payload, &plan).unwrap();
        prop_assert_eq!(framed.len(), plan.data_codewords());
        prop_assert_eq!(unframe_payload(&framed, &plan).unwrap(), payload);
    }

    #[test]
    fn randomized_placement_is_a_permutation(version in 1u8..=40, seed in any::<u16>()) {
        let layout = Layout::get(version).unwrap();
        let p = Placement::build(layout, true, seed);
        let mut order = p.order().to_vec();
        order.sort_unstable();
        let natural = Placement::natural(layout);
        let mut expected = natural.order().to_vec();
        expected.sort_unstable();
        prop_assert_eq!(order, expected);
        let stream: Vec<u8> = (0..p.len()).map(|i| (i % 2) as u8).collect();
        let mut grid = vec![0u8; layout.dim * layout.dim];
        p.scatter(layout, &stream, &mut grid);
        prop_assert_eq!(p.gather(layout, &grid), stream);
    }

    #[test]
    fn exact_correspondences_recover_the_projection(
        h in prop::array::uniform8(-0.3f64..0.3),
        scale in 2.0f64..8.0,
        shift in (0.0f64..50.0, 0.0f64..50.0),
    ) {
        let truth = Homography::new([
            scale * (1.0 + h[0]), scale * h[1], shift.0,
            scale * h[2], scale * (1.0 + h[3]), shift.1,
            h[4] * 1e-3, h[5] * 1e-3, 1.0,
        ]);
        let grid = [(3.5, 3.5), (50.5, 3.5), (3.5, 50.5), (47.5, 47.5), (25.5, 30.5), (10.5, 40.5)];
        let corrs: Vec<Correspondence> = grid
            .iter()
            .enumerate()
            .map(|(i, &g)| Correspondence::new(truth.apply(g.0, g.1), g, 1.0 + i as f64))
            .collect();
        let i2g = estimate_rgt(&corrs).unwrap();
        for &g in &grid {
            let back = i2g.apply(truth.apply(g.0, g.1).0, truth.apply(g.0, g.1).1);
            prop_assert!((back.0 - g.0).abs() < 1e-6 && (back.1 - g.1).abs() < 1e-6, "{:?} → {:?}", g, back);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn white_estimate_follows_illumination_scale(s in 0.5f64..=1.0, layers in 1usize..=3) {
        let sym = encode(&[7u8; 20], &EncodeOptions {
            version: 3,
            ec_levels: vec![EcLevel::M; layers],
            randomize: true,
            seed: 5,
        })
        .unwrap();
        let r = render(&sym, 4, 4).unwrap();
        let dim = r.image.map_pixels(|_, _, p| p.map(|c| c * s));
        let layout = Layout::get(3).unwrap();
        let i2g = r.grid_to_image.inverse().unwrap();
        let w = estimate_white(&r.image, &i2g, layout).unwrap();
        let wd = estimate_white(&dim, &i2g, layout).unwrap();
        for k in 0..3 {
            prop_assert!((wd[k] - s * w[k]).abs() < 1e-5, "{:?} vs {:?}", wd, w);
        }
        let probe = [0.3, 0.6, 0.2];
        let a = normalize_white(probe, w).unwrap();
        let b = normalize_white(probe.map(|c| c * s), wd).unwrap();
        for k in 0..3 {
            prop_assert!((a[k] - b[k]).abs() < 1e-5);
        }
    }

    #[test]
    fn sessions_never_lose_recovered_blocks(seed in any::<u64>()) {
        let sym = encode(&[0x5au8; 150], &EncodeOptions {
            version: 6,
            ec_levels: vec![EcLevel::L; 2],
            randomize: true,
            seed: 77,
        })
        .unwrap();
        let r = render(&sym, 4, 4).unwrap();
        let model = ColorModel::ideal(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut session = ScanSession::new();
        let mut before = 0;
        for _ in 0..4 {
            let img = occlude_random(&r.image, &r.grid_to_image, &sym, 12, &mut rng).unwrap();
            let frame = decode_frame(&img, &model, Some(&session), &DecodeOptions::default()).unwrap();
            session.accumulate(&frame).unwrap();
            let now = session.recovered_count();
            prop_assert!(now >= before || session.is_complete());
            before = now;
        }
    }
}
