//! Color recovery: white normalization and the four trainable module
//! classifiers (QDA, LSVM and their cross-module-interference variants).

mod io;
pub mod kernel;
pub mod lemma;
pub mod linalg;
mod lsvm;
mod qda;
pub mod svm;
mod train;
mod white;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HiqError, Result};
use crate::geometry::FeatureBlock;
use crate::symbology::{build_codebook, tuple_bits};

pub use io::{load_model, model_from_text, model_to_text, save_model};
pub use kernel::Kernel;
pub use lsvm::{minimize_p2, project_ball, train_lsvm, train_lsvm_cmi, LsvmLayer, LsvmModel};
pub use qda::{train_qda, train_qda_cmi, QdaModel, E1};
pub use train::{samples_from_frame, samples_from_item, subsample, training_set};
pub use white::{augment_noisy_white, estimate_white, normalize_white, white_reference_points, WHITE_EPSILON};

/// A labeled feature block; `class` indexes the codebook (layer 1 = MSB).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorSample {
    pub x: FeatureBlock,
    pub class: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub c: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub pg_eta0: f64,
    pub pg_steps: usize,
    pub epsilon: f64,
    pub augment: usize,
    pub sigma_w: f64,
    /// Per-layer kernels; `None` uses linear for layers 1–2 and cubic beyond.
    pub kernels: Option<Vec<Kernel>>,
    /// Cap on SVM training samples (QDA uses every sample).
    pub max_svm_samples: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-6,
            max_iters: 50,
            pg_eta0: 0.1,
            pg_steps: 200,
            epsilon: 1e-6,
            augment: 5,
            sigma_w: 0.03,
            kernels: None,
            max_svm_samples: 20_000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn kernel(&self, layer: usize) -> Kernel {
        self.kernels
            .as_ref()
            .and_then(|k| k.get(layer).copied())
            .unwrap_or_else(|| Kernel::default_for_layer(layer))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algo {
    Qda,
    QdaCmi,
    Lsvm,
    LsvmCmi,
}

impl Algo {
    pub const ALL: [Algo; 4] = [Algo::Qda, Algo::QdaCmi, Algo::Lsvm, Algo::LsvmCmi];

    pub fn is_qda_family(self) -> bool {
        matches!(self, Algo::Qda | Algo::QdaCmi)
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algo::Qda => "qda",
            Algo::QdaCmi => "qda-cmi",
            Algo::Lsvm => "lsvm",
            Algo::LsvmCmi => "lsvm-cmi",
        })
    }
}

impl FromStr for Algo {
    type Err = HiqError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qda" => Ok(Algo::Qda),
            "qda-cmi" => Ok(Algo::QdaCmi),
            "lsvm" => Ok(Algo::Lsvm),
            "lsvm-cmi" => Ok(Algo::LsvmCmi),
            other => Err(HiqError::Parse(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// A trained classifier of either family.
#[derive(Debug, Clone, PartialEq)]
pub enum ColorModel {
    Qda(QdaModel),
    Lsvm(LsvmModel),
}

/// Per-module output: one bit per layer plus the evaluation count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub bits: Vec<u8>,
    pub evaluations: usize,
}

impl ColorModel {
    pub fn algo(&self) -> Algo {
        match self {
            ColorModel::Qda(m) if m.cmi => Algo::QdaCmi,
            ColorModel::Qda(_) => Algo::Qda,
            ColorModel::Lsvm(m) if m.cmi => Algo::LsvmCmi,
            ColorModel::Lsvm(_) => Algo::Lsvm,
        }
    }

    pub fn n_layers(&self) -> usize {
        match self {
            ColorModel::Qda(m) => m.n_layers,
            ColorModel::Lsvm(m) => m.n_layers(),
        }
    }

    /// QDA with class means at the codebook colors and a shared isotropic
    /// covariance. Needs no training and decodes undistorted renders.
    pub fn ideal(n_layers: usize) -> Result<Self> {
        let cb = build_codebook(n_layers)?;
        let v = 0.01;
        let cov = [[v, 0.0, 0.0], [0.0, v, 0.0], [0.0, 0.0, v]];
        QdaModel::new(n_layers, cb.entries().to_vec(), vec![cov; cb.len()], E1, 1e-6).map(ColorModel::Qda)
    }

    /// Predicts one module. QDA couples all layers and ignores `skip`;
    /// LSVM evaluates only the layers not skipped.
    pub fn predict(&self, fb: &FeatureBlock, skip: &[bool]) -> Prediction {
        match self {
            ColorModel::Qda(m) => {
                let (k, evaluations) = m.predict(fb);
                Prediction { bits: tuple_bits(k, m.n_layers), evaluations }
            }
            ColorModel::Lsvm(m) => {
                let (bits, evaluations) = m.predict(fb, skip);
                Prediction { bits, evaluations }
            }
        }
    }
}

/// Trains `algo` on labeled samples.
pub fn train_model(algo: Algo, samples: &[ColorSample], n_layers: usize, cfg: &TrainConfig) -> Result<ColorModel> {
    match algo {
        Algo::Qda => train_qda(samples, n_layers, cfg).map(ColorModel::Qda),
        Algo::QdaCmi => train_qda_cmi(samples, n_layers, cfg).map(ColorModel::Qda),
        Algo::Lsvm | Algo::LsvmCmi => {
            let svm_set = subsample(samples, cfg.max_svm_samples, cfg.seed);
            if algo == Algo::Lsvm {
                train_lsvm(&svm_set, n_layers, cfg).map(ColorModel::Lsvm)
            } else {
                train_lsvm_cmi(&svm_set, n_layers, cfg).map(ColorModel::Lsvm)
            }
        }
    }
}
