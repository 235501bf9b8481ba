//! Layered SVM (one binary SVM per layer) and its CMI variant.

use rayon::prelude::*;

use crate::color::Rgb;
use crate::error::{HiqError, Result};
use crate::geometry::FeatureBlock;

use super::kernel::Kernel;
use super::qda::E1;
use super::svm::{train_binary, train_binary_from, SvmParams};
use super::{ColorSample, TrainConfig};

const CHUNK: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct LsvmLayer {
    pub kernel: Kernel,
    pub w: Vec<f64>,
    pub b: f64,
    pub theta: [f64; 5],
    /// P1 objective after each outer alternation.
    pub history: Vec<f64>,
}

impl LsvmLayer {
    pub fn decision(&self, fb: &FeatureBlock) -> f64 {
        self.kernel.score(&self.w, fb.mix(&self.theta)) + self.b
    }

    pub fn predict(&self, fb: &FeatureBlock) -> u8 {
        (self.decision(fb) > 0.0) as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsvmModel {
    pub cmi: bool,
    pub layers: Vec<LsvmLayer>,
}

impl LsvmModel {
    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Bits of all layers not in `skip`; skipped layers report 0. Returns the
    /// bits and the number of SVM evaluations.
    pub fn predict(&self, fb: &FeatureBlock, skip: &[bool]) -> (Vec<u8>, usize) {
        let mut evals = 0;
        let bits = self
            .layers
            .iter()
            .enumerate()
            .map(|(j, l)| {
                if skip.get(j).copied().unwrap_or(false) {
                    0
                } else {
                    evals += 1;
                    l.predict(fb)
                }
            })
            .collect();
        (bits, evals)
    }
}

/// One layer's training view: feature blocks and ±1 labels.
struct LayerData<'a> {
    blocks: Vec<&'a FeatureBlock>,
    labels: Vec<bool>,
}

fn layer_data<'a>(samples: &'a [ColorSample], n_layers: usize, j: usize) -> Result<LayerData<'a>> {
    let labels: Vec<bool> = samples
        .iter()
        .map(|s| (s.class >> (n_layers - 1 - j)) & 1 == 1)
        .collect();
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 || pos == labels.len() {
        return Err(HiqError::InsufficientData(format!(
            "layer {} has a single class in the training data",
            j + 1
        )));
    }
    Ok(LayerData { blocks: samples.iter().map(|s| &s.x).collect(), labels })
}

fn mapped(data: &LayerData, kernel: Kernel, theta: &[f64; 5]) -> Vec<f64> {
    let d = kernel.dim();
    let mut x = vec![0.0; data.blocks.len() * d];
    for (row, fb) in x.chunks_mut(d).zip(&data.blocks) {
        kernel.map_into(fb.mix(theta), row);
    }
    x
}

fn svm_params(cfg: &TrainConfig, j: usize) -> SvmParams {
    SvmParams { c: cfg.c, seed: cfg.seed ^ (j as u64 + 1), ..SvmParams::default() }
}

/// Hinge sum `Σ max(0, 1 − s_i(ωᵀφ(X_iᵀθ) + b))` and its subgradient in θ.
fn hinge_and_grad(data: &LayerData, kernel: Kernel, w: &[f64], b: f64, theta: &[f64; 5]) -> (f64, [f64; 5]) {
    let parts: Vec<(f64, [f64; 5])> = data
        .blocks
        .par_chunks(CHUNK)
        .zip(data.labels.par_chunks(CHUNK))
        .map(|(blocks, labels)| {
            let mut loss = 0.0;
            let mut grad = [0.0; 5];
            for (fb, &y) in blocks.iter().zip(labels) {
                let s = if y { 1.0 } else { -1.0 };
                let x: Rgb = fb.mix(theta);
                let margin = s * (kernel.score(w, x) + b);
                if margin < 1.0 {
                    loss += 1.0 - margin;
                    let g = kernel.score_grad(w, x);
                    for (r, row) in fb.x.iter().enumerate() {
                        grad[r] -= s * (row[0] * g[0] + row[1] * g[1] + row[2] * g[2]);
                    }
                }
            }
            (loss, grad)
        })
        .collect();
    let mut loss = 0.0;
    let mut grad = [0.0; 5];
    for (l, g) in parts {
        loss += l;
        for r in 0..5 {
            grad[r] += g[r];
        }
    }
    (loss, grad)
}

fn p1(cfg: &TrainConfig, w: &[f64], b: f64, hinge: f64) -> f64 {
    0.5 * (w.iter().map(|v| v * v).sum::<f64>() + b * b) + cfg.c * hinge
}

pub fn project_ball(theta: &mut [f64; 5]) {
    let n = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 1.0 {
        for v in theta.iter_mut() {
            *v /= n;
        }
    }
}

/// Projected subgradient descent on P2 from `start` with normalized steps
/// of length `η₀/√t`; returns the best iterate and its hinge sum.
pub fn minimize_p2(
    data_blocks: &[&FeatureBlock],
    labels: &[bool],
    kernel: Kernel,
    w: &[f64],
    b: f64,
    start: [f64; 5],
    cfg: &TrainConfig,
) -> ([f64; 5], f64) {
    let data = LayerData { blocks: data_blocks.to_vec(), labels: labels.to_vec() };
    descend(&data, kernel, w, b, start, cfg)
}

fn descend(data: &LayerData, kernel: Kernel, w: &[f64], b: f64, start: [f64; 5], cfg: &TrainConfig) -> ([f64; 5], f64) {
    let mut theta = start;
    let (mut loss, mut grad) = hinge_and_grad(data, kernel, w, b, &theta);
    let mut best = (theta, loss);
    for t in 1..=cfg.pg_steps {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let eta = cfg.pg_eta0 / (t as f64).sqrt();
        for r in 0..5 {
            theta[r] -= eta * grad[r] / norm;
        }
        project_ball(&mut theta);
        (loss, grad) = hinge_and_grad(data, kernel, w, b, &theta);
        if loss < best.1 {
            best = (theta, loss);
        }
    }
    best
}

fn train_layer(data: &LayerData, kernel: Kernel, cfg: &TrainConfig, j: usize, cmi: bool) -> LsvmLayer {
    let d = kernel.dim();
    let mut theta = E1;
    let x = mapped(data, kernel, &theta);
    let sol = train_binary(&x, d, &data.labels, &svm_params(cfg, j));
    let (mut w, mut b, mut alpha) = (sol.w, sol.b, sol.alpha);
    let (mut hinge, _) = hinge_and_grad(data, kernel, &w, b, &theta);
    let mut obj = p1(cfg, &w, b, hinge);
    let mut history = vec![obj];
    if !cmi {
        return LsvmLayer { kernel, w, b, theta, history };
    }
    for iter in 0..cfg.max_iters {
        if iter > 0 {
            // SVM on the current θ, warm-started from the last multipliers and
            // kept only if it improves P1.
            let x = mapped(data, kernel, &theta);
            let sol = train_binary_from(&x, d, &data.labels, &svm_params(cfg, j), alpha.clone());
            let (h, _) = hinge_and_grad(data, kernel, &sol.w, sol.b, &theta);
            alpha = sol.alpha;
            if p1(cfg, &sol.w, sol.b, h) < obj {
                (w, b, hinge) = (sol.w, sol.b, h);
            }
        }
        // θ by projected subgradient descent with ω, b fixed.
        let (t, h) = descend(data, kernel, &w, b, theta, cfg);
        if h < hinge {
            theta = t;
            hinge = h;
        }
        let next = p1(cfg, &w, b, hinge);
        let gain = obj - next;
        obj = next;
        history.push(obj);
        if gain <= cfg.tol * obj.abs() {
            break;
        }
    }
    LsvmLayer { kernel, w, b, theta, history }
}

fn train(samples: &[ColorSample], n_layers: usize, cfg: &TrainConfig, cmi: bool) -> Result<LsvmModel> {
    let datas = (0..n_layers)
        .map(|j| layer_data(samples, n_layers, j))
        .collect::<Result<Vec<_>>>()?;
    let layers = datas
        .par_iter()
        .enumerate()
        .map(|(j, data)| train_layer(data, cfg.kernel(j), cfg, j, cmi))
        .collect();
    Ok(LsvmModel { cmi, layers })
}

/// n independent binary SVMs on the center colors.
pub fn train_lsvm(samples: &[ColorSample], n_layers: usize, cfg: &TrainConfig) -> Result<LsvmModel> {
    train(samples, n_layers, cfg, false)
}

/// Per layer, alternates the SVM dual solve with projected subgradient
/// steps on θ over the unit ball.
pub fn train_lsvm_cmi(samples: &[ColorSample], n_layers: usize, cfg: &TrainConfig) -> Result<LsvmModel> {
    train(samples, n_layers, cfg, true)
}
