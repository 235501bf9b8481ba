use super::*;
use crate::colorrec::{Algo, ColorModel};
use crate::ecc::EcLevel;
use crate::raster::{render, RasterImage};
use crate::symbology::{capacity, encode, EncodeOptions, HiqSymbol};

fn symbol(version: u8, levels: &[EcLevel], randomize: bool) -> (HiqSymbol, Vec<u8>) {
    let cap = capacity(version, levels).unwrap();
    let payload: Vec<u8> = (0..cap).map(|i| (i * 37 + 11) as u8).collect();
    let opts = EncodeOptions { version, ec_levels: levels.to_vec(), randomize, seed: 321 };
    (encode(&payload, &opts).unwrap(), payload)
}

fn decode_clean(sym: &HiqSymbol) -> FrameResult {
    let img = render(sym, 4, 4).unwrap().image;
    let model = ColorModel::ideal(sym.n_layers()).unwrap();
    decode_frame(&img, &model, None, &DecodeOptions::default()).unwrap()
}

#[test]
fn clean_render_decodes_with_zero_ber() {
    for (v, levels) in [(1, vec![EcLevel::L]), (4, vec![EcLevel::M, EcLevel::Q]), (7, vec![EcLevel::Q; 3])] {
        let (sym, payload) = symbol(v, &levels, true);
        let r = decode_clean(&sym);
        assert_eq!(r.status, FrameStatus::Decoded, "v{v}: {:?}", r.message);
        assert_eq!(r.payload.as_deref(), Some(&payload[..]));
        let m = compute_metrics(&[r], &[GroundTruth::from_symbol(&sym)]).unwrap();
        assert_eq!(m.ber, Some(0.0));
        assert_eq!(m.dfr, Some(0.0));
    }
}

#[test]
fn streams_match_the_encoder_bitstream() {
    let (sym, _) = symbol(3, &[EcLevel::L, EcLevel::M], true);
    let r = decode_clean(&sym);
    let truth = GroundTruth::from_symbol(&sym);
    for (got, want) in r.streams.iter().zip(&truth.streams) {
        assert_eq!(got.as_ref(), Some(want));
    }
}

#[test]
fn blank_image_fails_localization() {
    let model = ColorModel::ideal(2).unwrap();
    let r = decode_frame(&RasterImage::filled(200, 200, [1.0; 3]), &model, None, &DecodeOptions::default()).unwrap();
    assert_eq!(r.status, FrameStatus::LocalizationFailed);
    assert!(r.blocks.is_empty());
}

#[test]
fn model_layer_mismatch_is_an_error() {
    let (sym, _) = symbol(2, &[EcLevel::L; 2], true);
    let img = render(&sym, 4, 4).unwrap().image;
    let model = ColorModel::ideal(3).unwrap();
    assert!(decode_frame(&img, &model, None, &DecodeOptions::default()).is_err());
}

#[test]
fn four_point_geometry_decodes_clean_renders() {
    let (sym, payload) = symbol(6, &[EcLevel::L; 2], true);
    let img = render(&sym, 4, 4).unwrap().image;
    let model = ColorModel::ideal(2).unwrap();
    let opts = DecodeOptions { geometry: GeometryMode::FourPoint, ..Default::default() };
    let r = decode_frame(&img, &model, None, &opts).unwrap();
    assert_eq!(r.payload, Some(payload));
}

/// A full decode of a multi-block symbol with some blocks marked failed.
fn with_failures(base: &FrameResult, failed: &[(usize, usize)]) -> FrameResult {
    let mut r = base.clone();
    for &(j, b) in failed {
        r.blocks[j][b] = BlockOutcome::Failed;
    }
    r.status = FrameStatus::Partial;
    r.payload = None;
    r
}

fn multi_block() -> (HiqSymbol, Vec<u8>, FrameResult) {
    let (sym, payload) = symbol(8, &[EcLevel::Q; 2], false);
    let r = decode_clean(&sym);
    assert!(r.blocks[0].len() >= 3, "need several blocks, got {}", r.blocks[0].len());
    (sym, payload, r)
}

#[test]
fn union_of_blocks_completes_the_session() {
    let (_, payload, full) = multi_block();
    let nb = full.blocks[0].len();
    let mut rest: Vec<(usize, usize)> = (0..nb).map(|b| (0, b)).collect();
    rest.extend((0..full.blocks[1].len()).map(|b| (1, b)));
    // Frame A recovers layer-0 blocks {0, 1}; frame B recovers {1, ..} and all of layer 1.
    let a_fail: Vec<(usize, usize)> = rest.iter().copied().filter(|&(j, b)| j == 1 || b >= 2).collect();
    let b_fail = vec![(0, 0)];
    let mut s = ScanSession::new();
    s.accumulate(&with_failures(&full, &a_fail)).unwrap();
    assert!(!s.is_complete());
    assert_eq!(s.recovered_count(), 2);
    s.accumulate(&with_failures(&full, &b_fail)).unwrap();
    assert!(s.is_complete());
    assert_eq!(s.payload(), Some(payload));
    assert_eq!(s.frames(), 2);

    let before = (s.frames(), s.recovered_count(), s.payload());
    s.accumulate(&with_failures(&full, &rest)).unwrap();
    assert_eq!((s.frames(), s.recovered_count(), s.payload()), before);
}

#[test]
fn disjoint_single_block_failures_complete_in_two_frames() {
    let (_, payload, full) = multi_block();
    let a = with_failures(&full, &[(0, 1)]);
    let b = with_failures(&full, &[(1, 0)]);
    assert!(a.payload.is_none() && b.payload.is_none());
    let mut s = ScanSession::new();
    s.accumulate(&a).unwrap();
    assert!(!s.is_complete());
    assert_eq!(s.completed_layers(), vec![false, true]);
    s.accumulate(&b).unwrap();
    assert_eq!(s.payload(), Some(payload));
}

#[test]
fn conflicting_blocks_keep_the_first() {
    let (_, payload, full) = multi_block();
    let mut bad = with_failures(&full, &[(0, 1)]);
    if let BlockOutcome::Recovered { data, .. } = &mut bad.blocks[0][0] {
        data[0] ^= 0xff;
    }
    let mut s = ScanSession::new();
    s.accumulate(&with_failures(&full, &[(0, 1)])).unwrap();
    s.accumulate(&bad).unwrap();
    assert_eq!(s.conflicts(), 1);
    s.accumulate(&full).unwrap();
    assert_eq!(s.payload(), Some(payload));
}

#[test]
fn session_rejects_other_symbols() {
    let (_, _, full) = multi_block();
    let (other, _) = symbol(9, &[EcLevel::Q; 2], false);
    let mut s = ScanSession::new();
    s.accumulate(&with_failures(&full, &[(0, 0)])).unwrap();
    assert!(s.accumulate(&decode_clean(&other)).is_err());
}

#[test]
fn decoding_with_a_session_skips_completed_layers() {
    let (sym, payload) = symbol(5, &[EcLevel::L; 3], true);
    let img = render(&sym, 4, 4).unwrap().image;
    let full = decode_clean(&sym);
    let mut s = ScanSession::new();
    s.accumulate(&with_failures(&full, &[(2, 0)])).unwrap();
    assert_eq!(s.completed_layers(), vec![true, true, false]);
    let model = ColorModel::ideal(3).unwrap();
    let r = decode_frame(&img, &model, Some(&s), &DecodeOptions::default()).unwrap();
    assert!(r.blocks[0].iter().all(|b| *b == BlockOutcome::Skipped));
    assert!(r.streams[0].is_none() && r.streams[2].is_some());
    s.accumulate(&r).unwrap();
    assert_eq!(s.payload(), Some(payload));
}

#[test]
fn dfr_excludes_unlocalized_frames() {
    let (sym, _) = symbol(2, &[EcLevel::L], true);
    let ok = decode_clean(&sym);
    let mut failed = ok.clone();
    failed.status = FrameStatus::Partial;
    let model = ColorModel::ideal(1).unwrap();
    let lost = decode_frame(&RasterImage::filled(64, 64, [1.0; 3]), &model, None, &DecodeOptions::default()).unwrap();
    let truth = GroundTruth::from_symbol(&sym);
    let m = compute_metrics(&[ok.clone(), ok, failed, lost], &vec![truth; 4]).unwrap();
    assert_eq!(m.localized, 3);
    assert!((m.dfr.unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(m.ber, Some(0.0));
}

#[test]
fn empty_results_have_undefined_metrics() {
    assert!(compute_metrics(&[], &[]).is_err());
}

#[test]
fn prediction_accounting() {
    assert_eq!(expected_predictions_per_frame(Algo::Qda, 125, 3), 125_000);
    assert_eq!(expected_predictions_per_frame(Algo::QdaCmi, 125, 2), 62_500);
    assert_eq!(expected_predictions_per_frame(Algo::Lsvm, 125, 3), 46_875);
    let (sym, _) = symbol(3, &[EcLevel::L; 2], true);
    let r = decode_clean(&sym);
    assert_eq!(r.evaluations, expected_predictions_per_frame(Algo::Qda, sym.dim(), 2));
}

#[test]
fn random_window_avoids_finders_and_format() {
    use crate::symbology::{Layout, ModuleRole};
    use rand::SeedableRng;
    let layout = Layout::get(5).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let (r0, c0) = random_window(layout, 8, &mut rng).unwrap();
        for r in r0..r0 + 8 {
            for c in c0..c0 + 8 {
                assert!(matches!(layout.role(r, c), ModuleRole::Data | ModuleRole::Alignment));
            }
        }
    }
    assert!(random_window(Layout::get(1).unwrap(), 30, &mut rng).is_err());
}
