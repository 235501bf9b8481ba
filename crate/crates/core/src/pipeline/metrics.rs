//! Bit error rate, decode failure rate and prediction accounting.

use crate::colorrec::Algo;
use crate::error::{HiqError, Result};

use super::frame::{FrameResult, FrameStatus, GroundTruth};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metrics {
    pub frames: usize,
    pub localized: usize,
    pub decoded: usize,
    /// Wrong and total pre-correction bits per layer.
    pub bit_errors: Vec<(usize, usize)>,
    pub ber_per_layer: Vec<Option<f64>>,
    /// Over all layers; `None` when no bits were scored.
    pub ber: Option<f64>,
    /// Failed over localized frames; `None` when nothing localized.
    pub dfr: Option<f64>,
    /// Mean discriminant evaluations over localized frames.
    pub predictions_per_frame: Option<f64>,
    /// Frames each successful session needed, in session order.
    pub frames_to_success: Vec<usize>,
}

impl Metrics {
    pub fn frames_mean(&self) -> Option<f64> {
        if self.frames_to_success.is_empty() {
            return None;
        }
        Some(self.frames_to_success.iter().sum::<usize>() as f64 / self.frames_to_success.len() as f64)
    }

    pub fn frames_median(&self) -> Option<f64> {
        let mut v = self.frames_to_success.clone();
        if v.is_empty() {
            return None;
        }
        v.sort_unstable();
        let m = v.len() / 2;
        Some(if v.len() % 2 == 1 { v[m] as f64 } else { (v[m - 1] + v[m]) as f64 / 2.0 })
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Discriminant evaluations a full frame costs: every module is scored
/// against all `2^n` classes by QDA, or once per layer by LSVM.
pub fn expected_predictions_per_frame(algo: Algo, dim: usize, n_layers: usize) -> usize {
    let per_module = if algo.is_qda_family() { 1 << n_layers } else { n_layers };
    dim * dim * per_module
}

/// Scores `results[i]` against `truth[i]`.
///
/// BER counts pre-correction bits of localized frames. DFR is the share of
/// localized frames that did not decode; frames that failed to localize are
/// left out of its denominator.
pub fn compute_metrics(results: &[FrameResult], truth: &[GroundTruth]) -> Result<Metrics> {
    if results.is_empty() {
        return Err(HiqError::UndefinedMetrics("no frames".into()));
    }
    if results.len() != truth.len() {
        return Err(HiqError::InvalidParameter(format!(
            "{} results but {} ground-truth symbols",
            results.len(),
            truth.len()
        )));
    }
    let layers = truth.iter().map(|t| t.streams.len()).max().unwrap_or(0);
    let mut m = Metrics { frames: results.len(), bit_errors: vec![(0, 0); layers], ..Default::default() };
    let mut evaluations = 0usize;
    for (r, t) in results.iter().zip(truth) {
        let Some(errs) = r.bit_errors(t) else { continue };
        m.localized += 1;
        evaluations += r.evaluations;
        if r.status == FrameStatus::Decoded {
            m.decoded += 1;
        }
        for (acc, (w, n)) in m.bit_errors.iter_mut().zip(errs) {
            acc.0 += w;
            acc.1 += n;
        }
    }
    m.ber_per_layer = m.bit_errors.iter().map(|&(w, n)| ratio(w, n)).collect();
    let (w, n) = m.bit_errors.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    m.ber = ratio(w, n);
    m.dfr = ratio(m.localized - m.decoded, m.localized);
    m.predictions_per_frame = ratio(evaluations, m.localized);
    Ok(m)
}
