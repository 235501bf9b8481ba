use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hiq::colorrec::{load_model, model_to_text};
use hiq::symbology::container;
use tempfile::TempDir;

fn hiq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hiq")).args(args).output().expect("run hiq")
}

fn ok(args: &[&str]) -> Output {
    let out = hiq(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn payload(len: usize) -> Vec<u8> {
    (0..len).map(|i| (i * 131 + 7) as u8).collect()
}

#[test]
fn encode_render_decode_round_trip() {
    let dir = TempDir::new().unwrap();
    let (input, sym, img) = (p(&dir, "in.bin"), p(&dir, "s.hiq"), p(&dir, "s.png"));
    let data = payload(1500);
    fs::write(&input, &data).unwrap();
    ok(&["encode", "--input", s(&input), "--output", s(&sym), "--layers", "3", "--ec", "L,M,Q", "--seed", "9"]);
    ok(&["render", "--symbol", s(&sym), "--output", s(&img)]);
    let out = ok(&["decode", "--image", s(&img)]);
    assert_eq!(out.stdout, data);
}

#[test]
fn single_layer_symbols_are_monochrome() {
    let dir = TempDir::new().unwrap();
    let (input, sym, img) = (p(&dir, "in.bin"), p(&dir, "s.hiq"), p(&dir, "s.png"));
    fs::write(&input, payload(100)).unwrap();
    ok(&["encode", "--input", s(&input), "--output", s(&sym), "--layers", "1"]);
    let symbol = container::load(&sym).unwrap();
    assert_eq!(symbol.n_layers(), 1);
    ok(&["render", "--symbol", s(&sym), "--output", s(&img)]);
    let out = ok(&["decode", "--image", s(&img)]);
    assert_eq!(out.stdout, payload(100));
}

#[test]
fn capacity_boundary_at_dim_177() {
    let dir = TempDir::new().unwrap();
    let (input, sym) = (p(&dir, "in.bin"), p(&dir, "s.hiq"));
    fs::write(&input, payload(8859)).unwrap();
    ok(&["encode", "--input", s(&input), "--output", s(&sym), "--version", "40", "--layers", "3", "--ec", "L"]);
    assert_eq!(container::load(&sym).unwrap().dim(), 177);

    fs::write(&input, payload(8860)).unwrap();
    let out = hiq(&["encode", "--input", s(&input), "--output", s(&sym), "--version", "40", "--layers", "3", "--ec", "L"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("L: 8859 bytes") && err.contains("M:") && err.contains("Q:"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let input = p(&dir, "in.bin");
    fs::write(&input, payload(10)).unwrap();
    let out = hiq(&["encode", "--input", s(&input), "--output", s(&p(&dir, "o")), "--layers", "3", "--ec", "L,M"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(hiq(&["decode"]).status.code(), Some(2));
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = TempDir::new().unwrap();
    let (input, sym, cfg) = (p(&dir, "in.bin"), p(&dir, "s.hiq"), p(&dir, "hiq.conf"));
    fs::write(&input, payload(50)).unwrap();
    fs::write(&cfg, "layers = 2\nec = M\n").unwrap();
    ok(&["--config", s(&cfg), "encode", "--input", s(&input), "--output", s(&sym)]);
    let symbol = container::load(&sym).unwrap();
    assert_eq!(symbol.n_layers(), 2);
    assert_eq!(symbol.format.ec_levels.iter().map(|l| l.to_string()).collect::<String>(), "MM");
    ok(&["--config", s(&cfg), "encode", "--input", s(&input), "--output", s(&sym), "--layers", "1"]);
    assert_eq!(container::load(&sym).unwrap().n_layers(), 1);
}

#[test]
fn undecodable_image_exits_4() {
    let dir = TempDir::new().unwrap();
    let img = p(&dir, "blank.png");
    hiq::raster::RasterImage::filled(120, 120, [1.0; 3]).save(&img).unwrap();
    let out = hiq(&["decode", "--image", s(&img), "--model", s(&p(&dir, "none"))]);
    assert_eq!(out.status.code(), Some(3), "missing model is a data error");
    let out = hiq(&["session", s(&img)]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn corpus_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a"), p(&dir, "b"));
    for out in [&a, &b] {
        ok(&["corpus", "--output", s(out), "--count", "100", "--seed", "7", "--version", "2", "--layers", "2"]);
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 301);
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?} differs");
    }
}

#[test]
fn distort_and_session_recover_the_payload() {
    let dir = TempDir::new().unwrap();
    let (input, sym) = (p(&dir, "in.bin"), p(&dir, "s.hiq"));
    let data = payload(200);
    fs::write(&input, &data).unwrap();
    ok(&["encode", "--input", s(&input), "--output", s(&sym), "--version", "6", "--layers", "2"]);
    let mut frames = Vec::new();
    for seed in ["1", "2"] {
        let f = p(&dir, &format!("f{seed}.png"));
        ok(&["distort", "--symbol", s(&sym), "--output", s(&f), "--noise", "0.02", "--blur", "0.4", "--warp", "0.02", "--seed", seed]);
        frames.push(f);
    }
    let out_file = p(&dir, "out.bin");
    ok(&["session", s(&frames[0]), s(&frames[1]), "--output", s(&out_file)]);
    assert_eq!(fs::read(out_file).unwrap(), data);
}

#[test]
fn train_bench_and_assert() {
    let dir = TempDir::new().unwrap();
    let corpus = p(&dir, "corpus");
    ok(&["corpus", "--output", s(&corpus), "--count", "6", "--preset", "cmi-heavy", "--version", "4", "--layers", "2", "--seed", "3"]);
    let mut args = vec!["bench".to_string(), "--corpus".into(), s(&corpus).into()];
    for algo in ["qda", "qda-cmi", "lsvm", "lsvm-cmi"] {
        let model = p(&dir, &format!("{algo}.model"));
        ok(&["train", "--corpus", s(&corpus), "--algo", algo, "--output", s(&model), "--max-samples", "3000", "--max-iters", "5"]);
        let text = fs::read_to_string(&model).unwrap();
        assert_eq!(model_to_text(&load_model(&model).unwrap()), text, "{algo} model reloads value-exact");
        args.extend(["--model".into(), s(&model).to_string()]);
    }

    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let csv = String::from_utf8(ok(&refs).stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(hiq::pipeline::CSV_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let presets: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[1]).collect();
    assert!(presets.contains("all"));
    for preset in &presets {
        let per: Vec<&str> = rows.iter().filter(|r| r[1] == *preset).map(|r| r[0]).collect();
        assert_eq!(per, ["qda", "qda-cmi", "lsvm", "lsvm-cmi"], "preset {preset}");
    }

    let pass = p(&dir, "pass.assert");
    fs::write(&pass, "dfr qda <= 1\nber lsvm-cmi <= 1\nratio ppf lsvm qda <= 1\n").unwrap();
    let mut with_assert = refs.clone();
    with_assert.extend(["--assert", s(&pass)]);
    ok(&with_assert);

    let fail = p(&dir, "fail.assert");
    fs::write(&fail, "ppf qda < 1\n").unwrap();
    let mut failing = refs.clone();
    failing.extend(["--assert", s(&fail)]);
    assert_eq!(hiq(&failing).status.code(), Some(4));

    let ablated = hiq(&[&refs[..], &["--ablate", "rgt,accum"]].concat());
    let csv = String::from_utf8(ablated.stdout).unwrap();
    assert!(csv.contains("\nqda-no-rgt,all,") && csv.contains("\nlsvm-cmi-no-accum,all,"));
}

#[test]
fn missing_model_is_named() {
    let dir = TempDir::new().unwrap();
    let corpus = p(&dir, "corpus");
    ok(&["corpus", "--output", s(&corpus), "--count", "2", "--version", "2", "--layers", "2"]);
    let missing = p(&dir, "no-such.model");
    let out = hiq(&["bench", "--corpus", s(&corpus), "--model", s(&missing)]);
    assert_ne!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains(s(&missing)));
}

#[test]
fn bench_rejects_layer_mismatch() {
    let dir = TempDir::new().unwrap();
    let (c2, c3) = (p(&dir, "c2"), p(&dir, "c3"));
    ok(&["corpus", "--output", s(&c2), "--count", "2", "--version", "2", "--layers", "2"]);
    ok(&["corpus", "--output", s(&c3), "--count", "2", "--version", "2", "--layers", "3"]);
    let model = p(&dir, "m");
    ok(&["train", "--corpus", s(&c3), "--algo", "qda", "--output", s(&model)]);
    let out = hiq(&["bench", "--corpus", s(&c2), "--model", s(&model)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("layer"));
}
