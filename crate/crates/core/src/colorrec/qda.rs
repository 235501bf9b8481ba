//! QDA and QDA-CMI.
//!
//! Both are fit from per-class sufficient statistics of the 5×3 feature
//! blocks, so every alternation of QDA-CMI costs O(K) regardless of the
//! number of samples.

use std::f64::consts::PI;

use crate::color::Rgb;
use crate::error::{HiqError, Result};
use crate::geometry::FeatureBlock;

use super::linalg::{inv3, quad3, solve, Mat3};
use super::{ColorSample, TrainConfig};

pub const E1: [f64; 5] = [1.0, 0.0, 0.0, 0.0, 0.0];

#[derive(Debug, Clone, PartialEq)]
pub struct QdaModel {
    pub n_layers: usize,
    pub means: Vec<Rgb>,
    /// Regularized covariances Σ_k + εI.
    pub covs: Vec<Mat3>,
    pub theta: [f64; 5],
    pub epsilon: f64,
    /// Trained with θ free (QDA-CMI) rather than fixed at e₁.
    pub cmi: bool,
    /// Log-likelihood after each alternation (a single entry for plain QDA).
    pub history: Vec<f64>,
    /// Set when the θ system became singular and training stopped early.
    pub degenerate: bool,
    inv: Vec<Mat3>,
    logdet: Vec<f64>,
}

impl QdaModel {
    pub fn new(n_layers: usize, means: Vec<Rgb>, covs: Vec<Mat3>, theta: [f64; 5], epsilon: f64) -> Result<Self> {
        let k = 1usize << n_layers;
        if means.len() != k || covs.len() != k {
            return Err(HiqError::InvalidParameter(format!(
                "{} means / {} covariances for {k} classes",
                means.len(),
                covs.len()
            )));
        }
        let mut inv = Vec::with_capacity(k);
        let mut logdet = Vec::with_capacity(k);
        for (i, c) in covs.iter().enumerate() {
            let d = super::linalg::det3(c);
            let ci = inv3(c).filter(|_| d > 0.0).ok_or_else(|| {
                HiqError::InvalidParameter(format!("covariance of class {i} is not positive definite"))
            })?;
            inv.push(ci);
            logdet.push(d.ln());
        }
        Ok(Self {
            n_layers,
            means,
            covs,
            theta,
            epsilon,
            cmi: false,
            history: Vec::new(),
            degenerate: false,
            inv,
            logdet,
        })
    }

    pub fn classes(&self) -> usize {
        self.means.len()
    }

    /// `−½ log|Σ_k| − ½ (x−μ_k)ᵀ Σ_k⁻¹ (x−μ_k)` for class `k`.
    pub fn discriminant(&self, k: usize, x: Rgb) -> f64 {
        let d = [x[0] - self.means[k][0], x[1] - self.means[k][1], x[2] - self.means[k][2]];
        -0.5 * self.logdet[k] - 0.5 * quad3(&self.inv[k], &d)
    }

    /// Most likely class of `X`, plus the number of discriminants evaluated.
    pub fn predict(&self, fb: &FeatureBlock) -> (usize, usize) {
        let x = fb.mix(&self.theta);
        let mut best = (f64::NEG_INFINITY, 0);
        for k in 0..self.classes() {
            let g = self.discriminant(k, x);
            if g > best.0 {
                best = (g, k);
            }
        }
        (best.1, self.classes())
    }
}

/// Per-class sums needed to evaluate means and covariances for any θ.
struct ClassStats {
    n: f64,
    /// `t[a][r] = Σ_i X_i[r][a]`, column a of the feature blocks summed.
    t: [[f64; 5]; 3],
    /// `s[a][b][r][q] = Σ_i X_i[r][a] X_i[q][b]`.
    s: [[[[f64; 5]; 5]; 3]; 3],
}

impl ClassStats {
    fn new() -> Self {
        Self { n: 0.0, t: [[0.0; 5]; 3], s: [[[[0.0; 5]; 5]; 3]; 3] }
    }

    fn add(&mut self, fb: &FeatureBlock) {
        self.n += 1.0;
        for a in 0..3 {
            for r in 0..5 {
                self.t[a][r] += fb.x[r][a];
            }
            for b in 0..3 {
                for r in 0..5 {
                    let xa = fb.x[r][a];
                    for q in 0..5 {
                        self.s[a][b][r][q] += xa * fb.x[q][b];
                    }
                }
            }
        }
    }

    fn mean(&self, theta: &[f64; 5]) -> Rgb {
        [0, 1, 2].map(|a| dot5(&self.t[a], theta) / self.n)
    }

    /// Maximum-likelihood covariance of `Xᵀθ` (without ridge).
    fn scatter(&self, theta: &[f64; 5]) -> Mat3 {
        let mu = self.mean(theta);
        let mut m = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let mut v = 0.0;
                for r in 0..5 {
                    v += theta[r] * dot5(&self.s[a][b][r], theta);
                }
                m[a][b] = v / self.n - mu[a] * mu[b];
            }
        }
        m
    }
}

fn dot5(a: &[f64; 5], b: &[f64; 5]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn class_stats(samples: &[ColorSample], n_layers: usize) -> Result<Vec<ClassStats>> {
    let k = 1usize << n_layers;
    let mut stats: Vec<ClassStats> = (0..k).map(|_| ClassStats::new()).collect();
    for s in samples {
        if s.class >= k {
            return Err(HiqError::InvalidParameter(format!("class {} out of range for {k} classes", s.class)));
        }
        stats[s.class].add(&s.x);
    }
    let missing: Vec<String> = stats
        .iter()
        .enumerate()
        .filter(|(_, s)| s.n < 4.0)
        .map(|(i, s)| format!("class {i} ({} samples)", s.n))
        .collect();
    if !missing.is_empty() {
        return Err(HiqError::InsufficientData(format!(
            "need at least 4 samples per class: {}",
            missing.join(", ")
        )));
    }
    Ok(stats)
}

fn fit(stats: &[ClassStats], n_layers: usize, theta: &[f64; 5], eps: f64) -> Result<QdaModel> {
    let means: Vec<Rgb> = stats.iter().map(|s| s.mean(theta)).collect();
    let covs: Vec<Mat3> = stats
        .iter()
        .map(|s| {
            let mut c = s.scatter(theta);
            for (i, row) in c.iter_mut().enumerate() {
                row[i] += eps;
            }
            c
        })
        .collect();
    QdaModel::new(n_layers, means, covs, *theta, eps)
}

/// Ridge-penalized log-likelihood. The penalty `−(N_k ε / 2) tr(Σ_k⁻¹)`
/// makes `S_k + εI` the exact maximizer over Σ_k.
fn log_likelihood(stats: &[ClassStats], model: &QdaModel) -> f64 {
    stats
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let scatter = s.scatter(&model.theta);
            let inv = &model.inv[k];
            let mut tr_s = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    tr_s += inv[a][b] * scatter[b][a];
                }
            }
            let tr_inv = inv[0][0] + inv[1][1] + inv[2][2];
            -0.5 * s.n * (3.0 * (2.0 * PI).ln() + model.logdet[k] + tr_s + model.epsilon * tr_inv)
        })
        .sum()
}

/// Plain QDA on the center rows.
pub fn train_qda(samples: &[ColorSample], n_layers: usize, cfg: &TrainConfig) -> Result<QdaModel> {
    let stats = class_stats(samples, n_layers)?;
    let mut model = fit(&stats, n_layers, &E1, cfg.epsilon)?;
    model.history = vec![log_likelihood(&stats, &model)];
    Ok(model)
}

/// θ minimizing `Σ (Xᵀθ−μ_k)ᵀ Σ_k⁻¹ (Xᵀθ−μ_k)` subject to `eᵀθ = 1`.
fn theta_step(stats: &[ClassStats], model: &QdaModel) -> Option<[f64; 5]> {
    let mut a = [[0.0; 5]; 5];
    let mut b = [0.0; 5];
    for (k, s) in stats.iter().enumerate() {
        let inv = &model.inv[k];
        let mu = model.means[k];
        for p in 0..3 {
            for q in 0..3 {
                let w = inv[p][q];
                for r in 0..5 {
                    for c in 0..5 {
                        a[r][c] += w * s.s[p][q][r][c];
                    }
                    b[r] += w * s.t[p][r] * mu[q];
                }
            }
        }
    }
    let ainv_b = solve(&a, &b)?;
    let ainv_e = solve(&a, &[1.0; 5])?;
    let denom: f64 = ainv_e.iter().sum();
    if denom.abs() < 1e-300 {
        return None;
    }
    let lambda = (1.0 - ainv_b.iter().sum::<f64>()) / denom;
    Some(std::array::from_fn(|i| ainv_b[i] + lambda * ainv_e[i]))
}

/// Alternating maximization of the QDA-CMI likelihood.
pub fn train_qda_cmi(samples: &[ColorSample], n_layers: usize, cfg: &TrainConfig) -> Result<QdaModel> {
    let stats = class_stats(samples, n_layers)?;
    let mut model = fit(&stats, n_layers, &E1, cfg.epsilon)?;
    let mut ll = log_likelihood(&stats, &model);
    let mut history = vec![ll];
    let mut degenerate = false;
    for _ in 0..cfg.max_iters {
        let Some(theta) = theta_step(&stats, &model) else {
            degenerate = true;
            break;
        };
        let Ok(next) = fit(&stats, n_layers, &theta, cfg.epsilon) else {
            degenerate = true;
            break;
        };
        let next_ll = log_likelihood(&stats, &next);
        if !(next_ll >= ll) {
            // Only rounding can cause this; keep the previous iterate.
            break;
        }
        let gain = next_ll - ll;
        model = next;
        ll = next_ll;
        history.push(ll);
        if gain <= cfg.tol * ll.abs() {
            break;
        }
    }
    model.history = history;
    model.degenerate = degenerate;
    model.cmi = true;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn sample_at(x: Rgb, class: usize) -> ColorSample {
        ColorSample { x: FeatureBlock { x: [x; 5], row: 0, col: 0 }, class }
    }

    fn gaussian_set(means: &[Rgb], sd: f64, per: usize, seed: u64) -> Vec<ColorSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sd).unwrap();
        let mut out = Vec::new();
        for (k, m) in means.iter().enumerate() {
            for _ in 0..per {
                out.push(sample_at([0, 1, 2].map(|i| m[i] + noise.sample(&mut rng)), k));
            }
        }
        out
    }

    #[test]
    fn recovers_class_means() {
        let means = [[0.9, 0.9, 0.9], [0.1, 0.1, 0.1]];
        let per = 2000;
        let sd = 0.05;
        let m = train_qda(&gaussian_set(&means, sd, per, 1), 1, &TrainConfig::default()).unwrap();
        for k in 0..2 {
            for i in 0..3 {
                assert!((m.means[k][i] - means[k][i]).abs() < 3.0 * sd / (per as f64).sqrt());
            }
        }
    }

    #[test]
    fn missing_or_tiny_class_is_insufficient() {
        let mut s = gaussian_set(&[[0.9; 3], [0.1; 3]], 0.05, 10, 2);
        s.truncate(11);
        assert!(matches!(train_qda(&s, 1, &TrainConfig::default()), Err(HiqError::InsufficientData(_))));
    }

    #[test]
    fn duplication_leaves_model_unchanged() {
        let s = gaussian_set(&[[0.9; 3], [0.1; 3]], 0.05, 50, 3);
        let mut d = s.clone();
        d.extend(s.iter().cloned());
        let a = train_qda(&s, 1, &TrainConfig::default()).unwrap();
        let b = train_qda(&d, 1, &TrainConfig::default()).unwrap();
        for k in 0..2 {
            for i in 0..3 {
                assert!((a.means[k][i] - b.means[k][i]).abs() < 1e-12);
                for j in 0..3 {
                    assert!((a.covs[k][i][j] - b.covs[k][i][j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn predicts_the_nearest_mean_under_shared_covariance() {
        let means = vec![[1.0, 1.0, 1.0], [0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [0.0, 0.0, 0.0]];
        let cov = [[0.01, 0.0, 0.0], [0.0, 0.01, 0.0], [0.0, 0.0, 0.01]];
        let m = QdaModel::new(2, means.clone(), vec![cov; 4], E1, 0.0).unwrap();
        for (k, mu) in means.iter().enumerate() {
            assert_eq!(m.predict(&FeatureBlock { x: [*mu; 5], row: 0, col: 0 }), (k, 4));
        }
    }

    #[test]
    fn agrees_with_direct_density() {
        let means = [[0.9, 0.9, 0.9], [0.1, 0.8, 0.8], [0.8, 0.1, 0.8], [0.1, 0.1, 0.1]];
        let m = train_qda(&gaussian_set(&means, 0.08, 300, 4), 2, &TrainConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = rand_distr::Uniform::new(0.0, 1.0).unwrap();
        for _ in 0..1000 {
            let x: Rgb = [0, 1, 2].map(|_| u.sample(&mut rng));
            let density = |k: usize| {
                let d = [x[0] - m.means[k][0], x[1] - m.means[k][1], x[2] - m.means[k][2]];
                let c = &m.covs[k];
                (-0.5 * quad3(&inv3(c).unwrap(), &d)).exp()
                    / ((2.0 * PI).powi(3) * super::super::linalg::det3(c)).sqrt()
            };
            let brute = (0..4).max_by(|&a, &b| density(a).total_cmp(&density(b))).unwrap();
            assert_eq!(m.predict(&FeatureBlock { x: [x; 5], row: 0, col: 0 }).0, brute);
        }
    }

    #[test]
    fn unit_theta_cmi_model_predicts_like_qda() {
        let s = gaussian_set(&[[0.9; 3], [0.1; 3]], 0.1, 200, 5);
        let q = train_qda(&s, 1, &TrainConfig::default()).unwrap();
        let cmi = QdaModel::new(1, q.means.clone(), q.covs.clone(), E1, q.epsilon).unwrap();
        for smp in &s {
            assert_eq!(q.predict(&smp.x), cmi.predict(&smp.x));
        }
    }
}
