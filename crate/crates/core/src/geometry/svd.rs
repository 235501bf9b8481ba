//! One-sided Jacobi SVD for small, tall matrices.

/// Singular values and right singular vectors of an `m×n` matrix.
#[derive(Debug, Clone)]
pub struct Svd {
    pub n: usize,
    /// Singular values, descending.
    pub values: Vec<f64>,
    /// Right singular vectors; `vectors[i]` pairs with `values[i]`.
    pub vectors: Vec<Vec<f64>>,
}

const MAX_SWEEPS: usize = 60;

/// Decomposes the row-major `m×n` matrix `a`.
pub fn jacobi_svd(a: &[f64], m: usize, n: usize) -> Svd {
    assert_eq!(a.len(), m * n, "matrix size mismatch");
    // Work on columns: cols[j][i] = a[i][j].
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a[i * n + j]).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = cols.iter().enumerate().map(|(j, c)| (dot(c, c).sqrt(), j)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    Svd {
        n,
        values: order.iter().map(|o| o.0).collect(),
        vectors: order.iter().map(|o| v[o.1].clone()).collect(),
    }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    for i in 0..cols[p].len() {
        let x = cols[p][i];
        let y = cols[q][i];
        cols[p][i] = c * x - s * y;
        cols[q][i] = s * x + c * y;
    }
}

impl Svd {
    pub fn smallest(&self) -> (&[f64], f64) {
        let last = self.values.len() - 1;
        (&self.vectors[last], self.values[last])
    }
}
