//! Soft-margin binary SVM trained by dual coordinate descent.
//!
//! The bias is folded in as a constant feature of value 1, so it is
//! regularized together with ω.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SvmSolution {
    pub w: Vec<f64>,
    pub b: f64,
    /// Dual variables λ_i ∈ [0, C].
    pub alpha: Vec<f64>,
    pub epochs: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SvmParams {
    pub c: f64,
    /// Stop when the projected-gradient spread falls below this.
    pub eps: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { c: 1.0, eps: 1e-3, max_epochs: 400, seed: 0 }
    }
}

fn sign(y: bool) -> f64 {
    if y {
        1.0
    } else {
        -1.0
    }
}

/// Trains on the row-major `n×d` matrix `x` with labels `y` (true ↔ +1).
pub fn train_binary(x: &[f64], d: usize, y: &[bool], p: &SvmParams) -> SvmSolution {
    train_binary_from(x, d, y, p, vec![0.0; y.len()])
}

/// As [`train_binary`], starting the dual ascent from `alpha` (clamped to
/// `[0, C]`) instead of zero.
pub fn train_binary_from(x: &[f64], d: usize, y: &[bool], p: &SvmParams, mut alpha: Vec<f64>) -> SvmSolution {
    let n = y.len();
    assert_eq!(x.len(), n * d);
    assert_eq!(alpha.len(), n);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    for (i, a) in alpha.iter_mut().enumerate() {
        *a = a.clamp(0.0, p.c);
        let ya = sign(y[i]) * *a;
        for (wk, xk) in w.iter_mut().zip(&x[i * d..(i + 1) * d]) {
            *wk += ya * xk;
        }
        b += ya;
    }
    let qdiag: Vec<f64> = (0..n)
        .map(|i| x[i * d..(i + 1) * d].iter().map(|v| v * v).sum::<f64>() + 1.0)
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut epochs = 0;
    while epochs < p.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let xi = &x[i * d..(i + 1) * d];
            let yi = sign(y[i]);
            let g = yi * (xi.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == p.c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / qdiag[i]).clamp(0.0, p.c);
                let delta = (alpha[i] - old) * yi;
                for (wk, xk) in w.iter_mut().zip(xi) {
                    *wk += delta * xk;
                }
                b += delta;
            }
        }
        if pg_max - pg_min < p.eps {
            break;
        }
    }
    SvmSolution { w, b, alpha, epochs }
}

/// `½(‖ω‖² + b²) + C Σ max(0, 1 − y_i(ωᵀx_i + b))`.
pub fn primal_objective(x: &[f64], d: usize, y: &[bool], w: &[f64], b: f64, c: f64) -> f64 {
    let reg = 0.5 * (w.iter().map(|v| v * v).sum::<f64>() + b * b);
    let hinge: f64 = (0..y.len())
        .map(|i| {
            let s = x[i * d..(i + 1) * d].iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b;
            (1.0 - sign(y[i]) * s).max(0.0)
        })
        .sum();
    reg + c * hinge
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn blobs(n: usize, gap: f64, seed: u64) -> (Vec<f64>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let pos = i % 2 == 0;
            let c = if pos { gap } else { -gap };
            x.extend([c + rng.random_range(-0.5..0.5), rng.random_range(-1.0..1.0), 0.5 * c + rng.random_range(-0.5..0.5)]);
            y.push(pos);
        }
        (x, y)
    }

    #[test]
    fn separable_data_is_fit_perfectly() {
        let (x, y) = blobs(400, 1.0, 1);
        let s = train_binary(&x, 3, &y, &SvmParams::default());
        for i in 0..y.len() {
            let f = x[i * 3..i * 3 + 3].iter().zip(&s.w).map(|(a, b)| a * b).sum::<f64>() + s.b;
            assert_eq!(f > 0.0, y[i]);
            assert!(sign(y[i]) * f > 0.0);
        }
    }

    #[test]
    fn flipping_labels_flips_solution() {
        let (x, y) = blobs(200, 0.6, 2);
        let p = SvmParams { eps: 1e-6, max_epochs: 5000, ..Default::default() };
        let a = train_binary(&x, 3, &y, &p);
        let flipped: Vec<bool> = y.iter().map(|v| !v).collect();
        let b = train_binary(&x, 3, &flipped, &p);
        for (u, v) in a.w.iter().zip(&b.w) {
            assert!((u + v).abs() < 1e-9);
        }
        assert!((a.b + b.b).abs() < 1e-9);
    }

    #[test]
    fn warm_start_reaches_the_same_optimum() {
        let (x, y) = blobs(300, 0.3, 4);
        let p = SvmParams { eps: 1e-6, max_epochs: 5000, ..Default::default() };
        let cold = train_binary(&x, 3, &y, &p);
        let warm = train_binary_from(&x, 3, &y, &p, vec![0.5; y.len()]);
        let a = primal_objective(&x, 3, &y, &cold.w, cold.b, p.c);
        let b = primal_objective(&x, 3, &y, &warm.w, warm.b, p.c);
        assert!((a - b).abs() < 1e-4 * a, "{a} vs {b}");
    }

    #[test]
    fn dual_solution_is_near_optimal() {
        let (x, y) = blobs(300, 0.3, 3);
        let p = SvmParams { eps: 1e-6, max_epochs: 5000, ..Default::default() };
        let s = train_binary(&x, 3, &y, &p);
        let primal = primal_objective(&x, 3, &y, &s.w, s.b, p.c);
        // Dual value: Σα − ½‖Σ α_i y_i [x_i, 1]‖².
        let dual = s.alpha.iter().sum::<f64>() - 0.5 * (s.w.iter().map(|v| v * v).sum::<f64>() + s.b * s.b);
        assert!(primal - dual < 1e-4 * primal.max(1.0), "gap {}", primal - dual);
    }
}
