//! Numerical witness for the vertex property of the summed-weight θ
//! constraint in LSVM-CMI.
//!
//! For fixed dual multipliers λ the Lagrangian of P1 is linear in θ, so
//! over the simplex `{θ ≥ 0, eᵀθ = 1}` its minimum sits at a vertex e_r.
//! The witness solves that linear program by enumerating the five vertices
//! and compares the best vertex with the unit-ball optimum found by
//! projected subgradient descent on P2.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::FeatureBlock;

use super::kernel::Kernel;
use super::lsvm::minimize_p2;
use super::qda::E1;
use super::svm::{train_binary, SvmParams};
use super::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaWitness {
    /// θ-coefficients of the Lagrangian at the SVM's multipliers.
    pub lagrangian: [f64; 5],
    /// Minimizer of the Lagrangian over the simplex.
    pub simplex_theta: [f64; 5],
    /// P2 hinge sum at each vertex e_r.
    pub vertex_hinge: [f64; 5],
    pub best_vertex_hinge: f64,
    /// Projected-subgradient optimum over ‖θ‖₂ ≤ 1.
    pub ball_theta: [f64; 5],
    pub ball_hinge: f64,
}

impl LemmaWitness {
    pub fn nonzeros(&self) -> usize {
        self.simplex_theta.iter().filter(|v| v.abs() > 0.0).count()
    }
}

/// Minimizes `cᵀθ` over the probability simplex by checking its vertices.
pub fn min_linear_on_simplex(c: &[f64; 5]) -> ([f64; 5], f64) {
    let r = (0..5).min_by(|&a, &b| c[a].total_cmp(&c[b])).expect("five vertices");
    let mut theta = [0.0; 5];
    theta[r] = 1.0;
    (theta, c[r])
}

fn hinge(blocks: &[FeatureBlock], labels: &[bool], w: &[f64], b: f64, theta: &[f64; 5]) -> f64 {
    blocks
        .iter()
        .zip(labels)
        .map(|(fb, &y)| {
            let s = if y { 1.0 } else { -1.0 };
            (1.0 - s * (Kernel::Linear.score(w, fb.mix(theta)) + b)).max(0.0)
        })
        .sum()
}

/// Fixes (ω, b, λ) from a linear SVM at θ = e₁, then solves both θ problems.
pub fn lemma_witness(blocks: &[FeatureBlock], labels: &[bool], cfg: &TrainConfig) -> LemmaWitness {
    let x: Vec<f64> = blocks.iter().flat_map(|fb| fb.center()).collect();
    let sol = train_binary(&x, 3, labels, &SvmParams { c: cfg.c, seed: cfg.seed, ..SvmParams::default() });
    let mut lagrangian = [0.0; 5];
    for ((fb, &y), &l) in blocks.iter().zip(labels).zip(&sol.alpha) {
        let s = if y { 1.0 } else { -1.0 };
        for (r, row) in fb.x.iter().enumerate() {
            lagrangian[r] -= l * s * (sol.w[0] * row[0] + sol.w[1] * row[1] + sol.w[2] * row[2]);
        }
    }
    let (simplex_theta, _) = min_linear_on_simplex(&lagrangian);
    let vertex_hinge: [f64; 5] = std::array::from_fn(|r| {
        let mut e = [0.0; 5];
        e[r] = 1.0;
        hinge(blocks, labels, &sol.w, sol.b, &e)
    });
    let best_vertex_hinge = vertex_hinge.iter().copied().fold(f64::INFINITY, f64::min);
    let refs: Vec<&FeatureBlock> = blocks.iter().collect();
    let (ball_theta, ball_hinge) = minimize_p2(&refs, labels, Kernel::Linear, &sol.w, sol.b, E1, cfg);
    LemmaWitness { lagrangian, simplex_theta, vertex_hinge, best_vertex_hinge, ball_theta, ball_hinge }
}

/// A small binary instance with cross-module interference: each block's
/// observed center is a blend of its own gray level and its neighbors'.
pub fn synthetic_instance(n: usize, seed: u64) -> (Vec<FeatureBlock>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.05).expect("positive sigma");
    let leak = rng.random_range(0.05..0.15);
    let mut blocks = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let truth: [bool; 5] = std::array::from_fn(|_| rng.random_bool(0.5));
        let level = |b: bool| if b { 0.15 } else { 0.9 };
        let mut x = [[0.0; 3]; 5];
        for r in 0..5 {
            let own = level(truth[r]);
            // Neighbors are observed cleanly; the center picks up leakage.
            let v = if r == 0 {
                (1.0 - 4.0 * leak) * own + leak * (1..5).map(|q| level(truth[q])).sum::<f64>()
            } else {
                own
            };
            x[r] = [(); 3].map(|_| v + noise.sample(&mut rng));
        }
        blocks.push(FeatureBlock { x, row: 0, col: 0 });
        labels.push(truth[0]);
    }
    (blocks, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_minimum_is_a_vertex() {
        let (t, v) = min_linear_on_simplex(&[0.3, -1.0, 2.0, -0.5, 0.0]);
        assert_eq!(t, [0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(v, -1.0);
    }

    #[test]
    fn vertex_value_bounds_every_simplex_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let c: [f64; 5] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let (_, best) = min_linear_on_simplex(&c);
            let raw: [f64; 5] = std::array::from_fn(|_| rng.random_range(0.0..1.0));
            let s: f64 = raw.iter().sum();
            let val: f64 = (0..5).map(|r| c[r] * raw[r] / s).sum();
            assert!(best <= val + 1e-12);
        }
    }

    #[test]
    fn witness_has_one_nonzero() {
        let (b, l) = synthetic_instance(200, 1);
        let w = lemma_witness(&b, &l, &TrainConfig::default());
        assert_eq!(w.nonzeros(), 1);
        assert!(w.ball_hinge.is_finite());
    }
}
