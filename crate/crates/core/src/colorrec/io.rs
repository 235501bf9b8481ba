//! Plain-text model files.
//!
//! ```text
//! HIQMODEL 1
//! algo qda-cmi
//! layers 2
//! epsilon 1e-6
//! theta 0.9 0.025 0.025 0.025 0.025
//! degenerate 0
//! history -1234.5 -1200.1
//! class 0 <mean: 3 values> <covariance: 9 values>
//! ...
//! ```
//!
//! LSVM files carry one `layer` block per layer instead of the class lines.
//! Floats are written in shortest round-trip form, so loading reproduces
//! the model bit for bit.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{HiqError, Result};

use super::kernel::Kernel;
use super::linalg::Mat3;
use super::lsvm::{LsvmLayer, LsvmModel};
use super::qda::QdaModel;
use super::{Algo, ColorModel};

const MAGIC: &str = "HIQMODEL 1";

fn floats(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

pub fn model_to_text(model: &ColorModel) -> String {
    let mut s = String::new();
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "algo {}", model.algo()).unwrap();
    writeln!(s, "layers {}", model.n_layers()).unwrap();
    match model {
        ColorModel::Qda(m) => {
            writeln!(s, "epsilon {:?}", m.epsilon).unwrap();
            writeln!(s, "theta {}", floats(&m.theta)).unwrap();
            writeln!(s, "degenerate {}", m.degenerate as u8).unwrap();
            writeln!(s, "history {}", floats(&m.history)).unwrap();
            for (k, (mu, c)) in m.means.iter().zip(&m.covs).enumerate() {
                let flat: Vec<f64> = c.iter().flatten().copied().collect();
                writeln!(s, "class {k} {} {}", floats(mu), floats(&flat)).unwrap();
            }
        }
        ColorModel::Lsvm(m) => {
            for (j, l) in m.layers.iter().enumerate() {
                writeln!(s, "layer {} {}", j + 1, l.kernel).unwrap();
                writeln!(s, "bias {:?}", l.b).unwrap();
                writeln!(s, "theta {}", floats(&l.theta)).unwrap();
                writeln!(s, "w {}", floats(&l.w)).unwrap();
                writeln!(s, "history {}", floats(&l.history)).unwrap();
            }
        }
    }
    s
}

fn bad(m: impl Into<String>) -> HiqError {
    HiqError::Parse(format!("model file: {}", m.into()))
}

struct Reader<'a, I: Iterator<Item = &'a str>> {
    lines: I,
}

impl<'a, I: Iterator<Item = &'a str>> Reader<'a, I> {
    /// Next line, which must start with `key`; returns the remaining tokens.
    fn field(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let line = self.lines.next().ok_or_else(|| bad(format!("missing {key}")))?;
        let mut tok = line.split_whitespace();
        if tok.next() != Some(key) {
            return Err(bad(format!("expected `{key}`, found `{line}`")));
        }
        Ok(tok.collect())
    }

    fn one<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        match v.as_slice() {
            [x] => x.parse().map_err(|_| bad(format!("bad value for {key}: `{x}`"))),
            _ => Err(bad(format!("{key} takes one value"))),
        }
    }

    fn floats(&mut self, key: &str) -> Result<Vec<f64>> {
        parse_floats(&self.field(key)?)
    }
}

fn parse_floats(tok: &[&str]) -> Result<Vec<f64>> {
    tok.iter()
        .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad number `{t}`"))))
        .collect()
}

fn theta5(v: Vec<f64>) -> Result<[f64; 5]> {
    v.try_into().map_err(|v: Vec<f64>| bad(format!("theta has {} entries", v.len())))
}

pub fn model_from_text(text: &str) -> Result<ColorModel> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    if lines.next() != Some(MAGIC) {
        return Err(bad("missing header"));
    }
    let mut r = Reader { lines };
    let algo: Algo = r.field("algo")?.first().ok_or_else(|| bad("empty algo"))?.parse()?;
    let n_layers: usize = r.one("layers")?;
    if !(1..=crate::symbology::MAX_LAYERS).contains(&n_layers) {
        return Err(bad(format!("{n_layers} layers")));
    }
    if algo.is_qda_family() {
        let epsilon: f64 = r.one("epsilon")?;
        let theta = theta5(r.floats("theta")?)?;
        let degenerate = r.one::<u8>("degenerate")? == 1;
        let history = r.floats("history")?;
        let mut means = Vec::new();
        let mut covs = Vec::new();
        for k in 0..1usize << n_layers {
            let tok = r.field("class")?;
            if tok.first().and_then(|t| t.parse::<usize>().ok()) != Some(k) {
                return Err(bad(format!("class {k} missing or out of order")));
            }
            let v = parse_floats(&tok[1..])?;
            if v.len() != 12 {
                return Err(bad(format!("class {k} has {} numbers, expected 12", v.len())));
            }
            means.push([v[0], v[1], v[2]]);
            let c: Mat3 = [[v[3], v[4], v[5]], [v[6], v[7], v[8]], [v[9], v[10], v[11]]];
            covs.push(c);
        }
        let mut m = QdaModel::new(n_layers, means, covs, theta, epsilon)?;
        m.cmi = algo == Algo::QdaCmi;
        m.degenerate = degenerate;
        m.history = history;
        Ok(ColorModel::Qda(m))
    } else {
        let mut layers = Vec::with_capacity(n_layers);
        for j in 0..n_layers {
            let tok = r.field("layer")?;
            let (idx, kernel) = match tok.as_slice() {
                [i, k] => (i.parse::<usize>().ok(), k.parse::<Kernel>()?),
                _ => return Err(bad("layer line needs an index and a kernel")),
            };
            if idx != Some(j + 1) {
                return Err(bad(format!("layer {} missing or out of order", j + 1)));
            }
            let b: f64 = r.one("bias")?;
            let theta = theta5(r.floats("theta")?)?;
            let w = r.floats("w")?;
            if w.len() != kernel.dim() {
                return Err(bad(format!("layer {} has {} weights for kernel {kernel}", j + 1, w.len())));
            }
            let history = r.floats("history")?;
            layers.push(LsvmLayer { kernel, w, b, theta, history });
        }
        Ok(ColorModel::Lsvm(LsvmModel { cmi: algo == Algo::LsvmCmi, layers }))
    }
}

pub fn save_model(model: &ColorModel, path: &Path) -> Result<()> {
    Ok(std::fs::write(path, model_to_text(model))?)
}

pub fn load_model(path: &Path) -> Result<ColorModel> {
    model_from_text(&std::fs::read_to_string(path)?)
}
