use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use hiq::colorrec::{load_model, save_model, subsample, train_model, training_set, Algo, ColorModel, TrainConfig};
use hiq::detect::binarize;
use hiq::ecc::EcLevel;
use hiq::pipeline::{
    decode_frame, detect_layer_count, report_csv, report_summary, run_benchmark, BenchModes, BenchRow, DecodeOptions,
    FrameStatus, GeometryMode, ScanSession,
};
use hiq::raster::{distort_symbol, draw_profile, load_corpus, render, synth_corpus, write_corpus, CorpusSpec, RasterImage};
use hiq::symbology::{capacity, container, encode, EncodeOptions, HiqSymbol};
use hiq::HiqError;
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assert::Assertions;
use crate::{
    BenchArgs, CliError, CorpusArgs, DecodeArgs, DistortArgs, EncodeArgs, Globals, RenderArgs, SessionArgs, TrainArgs,
};

type Result<T> = std::result::Result<T, CliError>;

/// Attaches the offending path to a library error.
fn at<T>(path: &Path, r: hiq::Result<T>) -> Result<T> {
    r.map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::File { path: path.to_path_buf(), source: e.into() })
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// `L` for every layer, or one level per layer such as `L,L,M`.
fn parse_levels(spec: &str, layers: usize) -> Result<Vec<EcLevel>> {
    let levels: Vec<EcLevel> =
        spec.split(',').map(|s| s.parse().map_err(|e: HiqError| usage(e.to_string()))).collect::<Result<_>>()?;
    match levels.len() {
        1 => Ok(vec![levels[0]; layers]),
        n if n == layers => Ok(levels),
        n => Err(usage(format!("--ec lists {n} levels for {layers} layers"))),
    }
}

fn capacity_table(version: u8, layers: usize) -> String {
    let mut s = format!("capacity of version {version} with {layers} layer(s):\n");
    for level in EcLevel::ALL {
        if let Ok(c) = capacity(version, &vec![level; layers]) {
            s.push_str(&format!("  {level}: {c} bytes\n"));
        }
    }
    s
}

pub fn encode_cmd(g: &Globals, a: EncodeArgs) -> Result<()> {
    let c = &g.config;
    let payload = fs::read(&a.input).map_err(|e| CliError::File { path: a.input.clone(), source: e.into() })?;
    let layers: usize = c.pick(a.layers, "layers", 3)?;
    let levels = parse_levels(&c.pick(a.ec, "ec", "L".to_string())?, layers)?;
    let randomize = !c.switch(a.no_randomize, "no-randomize")?;
    let version = match c.pick_opt(a.version, "version")? {
        Some(v) => v,
        None => (1..=40u8)
            .find(|&v| capacity(v, &levels).is_ok_and(|cap| cap >= payload.len()))
            .unwrap_or(40),
    };
    let opts = EncodeOptions { version, ec_levels: levels, randomize, seed: g.seed as u16 };
    let sym = match encode(&payload, &opts) {
        Ok(s) => s,
        Err(e @ (HiqError::CapacityExceeded { .. } | HiqError::Capacity(_))) => {
            eprint!("{}", capacity_table(version, layers));
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    info!("version {version}, dim {}, {} layers", sym.dim(), sym.n_layers());
    at(&a.output, container::save(&sym, &a.output))
}

fn load_symbol(path: &Path) -> Result<HiqSymbol> {
    at(path, container::load(path))
}

pub fn render_cmd(g: &Globals, a: RenderArgs) -> Result<()> {
    let sym = load_symbol(&a.symbol)?;
    let module_px = g.config.pick(a.module_px, "module-px", 4)?;
    let quiet = g.config.pick(a.quiet, "quiet", 4)?;
    let img = render(&sym, module_px, quiet)?.image;
    at(&a.output, img.save(&a.output))
}

pub fn distort_cmd(g: &Globals, a: DistortArgs) -> Result<()> {
    let c = &g.config;
    let sym = load_symbol(&a.render.symbol)?;
    let mut spec = CorpusSpec::clean(sym.version, sym.format.ec_levels.clone());
    spec.module_px = c.pick(a.render.module_px, "module-px", 4)?;
    spec.quiet = c.pick(a.render.quiet, "quiet", 4)?;
    let point = |v: f64| [v, v];
    if let Some(center) = c.pick_opt(a.cmi, "cmi")? {
        spec.cmi_fixed = None;
        spec.cmi_center = point(center);
    }
    spec.lighting = vec![c.pick(a.lighting, "lighting", "neutral".to_string())?];
    spec.cci_strength = point(c.pick(a.cci, "cci", 0.0)?);
    spec.noise_sigma = point(c.pick(a.noise, "noise", 0.0)?);
    spec.blur_sigma = point(c.pick(a.blur, "blur", 0.0)?);
    spec.warp_inset = point(c.pick(a.warp, "warp", 0.0)?);
    spec.gradient = point(c.pick(a.gradient, "gradient", 0.0)?);

    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let side = ((sym.dim() + 2 * spec.quiet) * spec.module_px) as f64;
    let profile = draw_profile(&spec, side, &mut rng)?;
    let img = distort_symbol(&sym, &profile, spec.module_px, spec.quiet, &mut rng)?.image;
    at(&a.render.output, img.save(&a.render.output))
}

pub fn corpus_cmd(g: &Globals, a: CorpusArgs) -> Result<()> {
    let c = &g.config;
    let preset = c.pick(a.preset, "preset", "clean".to_string())?;
    let version = c.pick_opt(a.version, "version")?;
    let layers = c.pick_opt(a.layers, "layers")?;
    let ec = c.pick_opt(a.ec, "ec")?;
    let mut spec = match preset.as_str() {
        "training" => CorpusSpec::training(),
        "clean" => CorpusSpec::clean(version.unwrap_or(5), vec![EcLevel::L; layers.unwrap_or(3)]),
        "cmi-heavy" => CorpusSpec::cmi_heavy(version.unwrap_or(10), layers.unwrap_or(3)),
        other => return Err(usage(format!("unknown corpus preset `{other}`"))),
    };
    if let Some(v) = version {
        spec.version = v;
    }
    let n = layers.unwrap_or(spec.n_layers());
    spec.ec_levels = match ec {
        Some(e) => parse_levels(&e, n)?,
        None => vec![spec.ec_levels[0]; n],
    };
    spec.module_px = c.pick(a.module_px, "module-px", spec.module_px)?;
    spec.randomize = !c.switch(a.no_randomize, "no-randomize")?;
    let count = c.pick(a.count, "count", 20)?;
    let items = synth_corpus(&spec, count, g.seed)?;
    fs::create_dir_all(&a.output).map_err(|e| CliError::File { path: a.output.clone(), source: e.into() })?;
    at(&a.output, write_corpus(&a.output, &items))?;
    info!("wrote {count} items to {}", a.output.display());
    Ok(())
}

pub fn train_cmd(g: &Globals, a: TrainArgs) -> Result<()> {
    let c = &g.config;
    let algo: Algo = c.pick(a.algo, "algo", "lsvm-cmi".to_string())?.parse().map_err(|e: HiqError| usage(e.to_string()))?;
    let items = at(&a.corpus, load_corpus(&a.corpus))?;
    let n_layers = items
        .first()
        .map(|i| i.symbol.n_layers())
        .ok_or_else(|| CliError::File { path: a.corpus.clone(), source: HiqError::InsufficientData("empty corpus".into()) })?;
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        c: c.pick(a.c, "c", defaults.c)?,
        max_iters: c.pick(a.max_iters, "max-iters", defaults.max_iters)?,
        augment: c.pick(a.augment, "augment", defaults.augment)?,
        seed: g.seed,
        ..defaults
    };
    let max = c.pick(a.max_samples, "max-samples", 200_000)?;
    let samples = subsample(&training_set(&items, &cfg)?, max, g.seed);
    info!("training {algo} on {} samples", samples.len());
    let model = train_model(algo, &samples, n_layers, &cfg)?;
    at(&a.output, save_model(&model, &a.output))
}

fn model_or_ideal(path: Option<&PathBuf>, image: &RasterImage) -> Result<ColorModel> {
    match path {
        Some(p) => at(p, load_model(p)),
        None => {
            let n = detect_layer_count(image).map_err(|e| CliError::Decode(format!("layer count unreadable: {e}")))?;
            Ok(ColorModel::ideal(n)?)
        }
    }
}

fn decode_options(no_rgt: bool) -> DecodeOptions {
    let geometry = if no_rgt { GeometryMode::FourPoint } else { GeometryMode::Rgt };
    DecodeOptions { geometry, ..Default::default() }
}

fn emit(output: Option<&PathBuf>, payload: &[u8]) -> Result<()> {
    match output {
        Some(p) => write_bytes(p, payload),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(payload).and_then(|_| out.flush()).map_err(|e| CliError::Data(e.into()))
        }
    }
}

pub fn decode_cmd(g: &Globals, a: DecodeArgs) -> Result<()> {
    let img = at(&a.image, RasterImage::load(&a.image))?;
    if let Some(p) = &a.pbm {
        at(p, binarize(&img).and_then(|b| b.save_pbm(p)))?;
    }
    let model = model_or_ideal(a.model.as_ref(), &img)?;
    let no_rgt = g.config.switch(a.no_rgt, "no-rgt")?;
    let r = decode_frame(&img, &model, None, &decode_options(no_rgt))?;
    info!("{}: {}/{} blocks recovered", r.status, r.recovered_blocks(), r.attempted_blocks());
    match (&r.status, &r.payload) {
        (FrameStatus::Decoded, Some(p)) => emit(a.output.as_ref(), p),
        _ => Err(CliError::Decode(format!(
            "{}: {} ({}/{} blocks)",
            r.status,
            r.message.as_deref().unwrap_or("decoding failed"),
            r.recovered_blocks(),
            r.attempted_blocks()
        ))),
    }
}

pub fn session_cmd(g: &Globals, a: SessionArgs) -> Result<()> {
    let opts = decode_options(g.config.switch(a.no_rgt, "no-rgt")?);
    let mut session = ScanSession::new();
    let mut model = None;
    for path in &a.images {
        let img = at(path, RasterImage::load(path))?;
        if model.is_none() {
            model = Some(model_or_ideal(a.model.as_ref(), &img)?);
        }
        let r = decode_frame(&img, model.as_ref().expect("set above"), Some(&session), &opts)?;
        at(path, session.accumulate(&r))?;
        info!("{}: {}, {}/{} blocks held", path.display(), r.status, session.recovered_count(), session.block_count());
        if session.is_complete() {
            break;
        }
    }
    match session.payload() {
        Some(p) => emit(a.output.as_ref(), &p),
        None => Err(CliError::Decode(format!(
            "session incomplete after {} frames: {}/{} blocks",
            session.frames(),
            session.recovered_count(),
            session.block_count()
        ))),
    }
}

/// Loads every model file; `ideal` entries stay `None` until the layer
/// count is known.
fn load_models(specs: &[String]) -> Result<Vec<Option<ColorModel>>> {
    specs
        .iter()
        .map(|s| match s.as_str() {
            "ideal" => Ok(None),
            _ => at(Path::new(s), load_model(Path::new(s))).map(Some),
        })
        .collect()
}

/// A model file is labeled by its algorithm; repeats get a numeric suffix.
fn label_models(models: Vec<Option<ColorModel>>, n_layers: usize) -> Result<Vec<(String, ColorModel)>> {
    let mut out: Vec<(String, ColorModel)> = Vec::new();
    for m in models {
        let (base, model) = match m {
            Some(m) => (m.algo().to_string(), m),
            None => ("ideal".to_string(), ColorModel::ideal(n_layers)?),
        };
        let mut label = base.clone();
        let mut k = 2;
        while out.iter().any(|(l, _)| *l == label) {
            label = format!("{base}#{k}");
            k += 1;
        }
        out.push((label, model));
    }
    Ok(out)
}

pub fn bench_cmd(g: &Globals, a: BenchArgs) -> Result<()> {
    let c = &g.config;
    let assertions = match &a.assertions {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::File { path: p.clone(), source: e.into() })?;
            Some(Assertions::parse(&text)?)
        }
        None => None,
    };
    let models = load_models(&a.models)?;
    let corpus = at(&a.corpus, load_corpus(&a.corpus))?;
    let n_layers = corpus.first().map_or(3, |i| i.symbol.n_layers());
    let models = label_models(models, n_layers)?;
    let base = BenchModes {
        max_frames: c.pick(a.frames, "frames", 1)?,
        occlusion: c.pick_opt(a.occlusion, "occlusion")?,
        seed: g.seed,
        ..Default::default()
    };

    let mut runs = vec![("", base.clone())];
    for name in &a.ablate {
        let mut m = base.clone();
        let suffix = match name.as_str() {
            "rgt" => {
                m.decode.geometry = GeometryMode::FourPoint;
                "-no-rgt"
            }
            "rand" => {
                m.randomize = Some(false);
                "-no-rand"
            }
            "accum" => {
                m.accumulate = false;
                "-no-accum"
            }
            other => return Err(usage(format!("unknown ablation `{other}` (rgt, rand, accum)"))),
        };
        runs.push((suffix, m));
    }

    let mut rows: Vec<BenchRow> = Vec::new();
    for (suffix, modes) in &runs {
        for mut r in run_benchmark(&corpus, &models, modes)? {
            r.classifier.push_str(suffix);
            rows.push(r);
        }
    }
    let csv = report_csv(&rows);
    match &a.csv {
        Some(p) => {
            write_bytes(p, csv.as_bytes())?;
            eprint!("{}", report_summary(&rows));
        }
        None => print!("{csv}"),
    }
    if let Some(asserts) = assertions {
        let (ok, lines) = asserts.evaluate(&rows)?;
        for l in lines {
            eprintln!("{l}");
        }
        if !ok {
            return Err(CliError::Decode("benchmark thresholds not met".into()));
        }
    }
    Ok(())
}
