use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::color::Rgb;
use crate::error::HiqError;

/// Explicit feature maps; the SVM stays linear in the mapped space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    Linear,
    /// `(xᵀy + 1)³`, i.e. degree 3 with γ = 1 and coef0 = 1.
    Poly3,
}

/// Exponents `(a1, a2, a3)` with `a1+a2+a3 ≤ 3`, and the multinomial
/// weight `sqrt(3! / (a0! a1! a2! a3!))`.
const POLY3_TERMS: [([usize; 3], f64); 20] = poly3_terms();

const fn fact(n: usize) -> usize {
    match n {
        0 | 1 => 1,
        2 => 2,
        _ => 6,
    }
}

const fn poly3_terms() -> [([usize; 3], f64); 20] {
    let mut out = [([0usize; 3], 0.0f64); 20];
    let mut i = 0;
    let mut a1 = 0;
    while a1 <= 3 {
        let mut a2 = 0;
        while a1 + a2 <= 3 {
            let mut a3 = 0;
            while a1 + a2 + a3 <= 3 {
                let a0 = 3 - a1 - a2 - a3;
                // The multinomial is 1, 3 or 6 at degree 3.
                let w = match 6 / (fact(a0) * fact(a1) * fact(a2) * fact(a3)) {
                    1 => 1.0,
                    3 => 1.732_050_807_568_877_2,
                    _ => 2.449_489_742_783_178,
                };
                out[i] = ([a1, a2, a3], w);
                i += 1;
                a3 += 1;
            }
            a2 += 1;
        }
        a1 += 1;
    }
    out
}

/// `x_d^0 … x_d^3` per channel.
fn powers(x: Rgb) -> [[f64; 4]; 3] {
    x.map(|v| [1.0, v, v * v, v * v * v])
}

impl Kernel {
    /// Default kernel of layer `j` (0-based): linear for the first two
    /// layers, cubic polynomial beyond.
    pub fn default_for_layer(j: usize) -> Self {
        if j < 2 {
            Kernel::Linear
        } else {
            Kernel::Poly3
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Kernel::Linear => 3,
            Kernel::Poly3 => 20,
        }
    }

    pub fn map_into(self, x: Rgb, out: &mut [f64]) {
        match self {
            Kernel::Linear => out[..3].copy_from_slice(&x),
            Kernel::Poly3 => {
                let p = powers(x);
                for (o, (a, c)) in out.iter_mut().zip(POLY3_TERMS.iter()) {
                    *o = c * p[0][a[0]] * p[1][a[1]] * p[2][a[2]];
                }
            }
        }
    }

    pub fn map(self, x: Rgb) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.map_into(x, &mut out);
        out
    }

    /// `ωᵀφ(x)`.
    pub fn score(self, w: &[f64], x: Rgb) -> f64 {
        match self {
            Kernel::Linear => w[0] * x[0] + w[1] * x[1] + w[2] * x[2],
            Kernel::Poly3 => {
                let p = powers(x);
                POLY3_TERMS
                    .iter()
                    .zip(w)
                    .map(|((a, c), wi)| wi * c * p[0][a[0]] * p[1][a[1]] * p[2][a[2]])
                    .sum()
            }
        }
    }

    /// Gradient of `ωᵀφ(x)` with respect to `x`.
    pub fn score_grad(self, w: &[f64], x: Rgb) -> Rgb {
        match self {
            Kernel::Linear => [w[0], w[1], w[2]],
            Kernel::Poly3 => {
                let p = powers(x);
                let mut g = [0.0; 3];
                for ((a, c), wi) in POLY3_TERMS.iter().zip(w) {
                    let coef = wi * c;
                    if a[0] > 0 {
                        g[0] += coef * a[0] as f64 * p[0][a[0] - 1] * p[1][a[1]] * p[2][a[2]];
                    }
                    if a[1] > 0 {
                        g[1] += coef * a[1] as f64 * p[0][a[0]] * p[1][a[1] - 1] * p[2][a[2]];
                    }
                    if a[2] > 0 {
                        g[2] += coef * a[2] as f64 * p[0][a[0]] * p[1][a[1]] * p[2][a[2] - 1];
                    }
                }
                g
            }
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Linear => "linear",
            Kernel::Poly3 => "poly3",
        })
    }
}

impl FromStr for Kernel {
    type Err = HiqError;
    fn from_str(s: &str) -> Result<Self, HiqError> {
        match s {
            "linear" => Ok(Kernel::Linear),
            "poly3" => Ok(Kernel::Poly3),
            other => Err(HiqError::Parse(format!("unknown kernel {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly3_map_reproduces_kernel() {
        let xs = [[0.1, 0.7, 0.3], [1.2, 0.0, 0.5], [0.9, 0.9, 0.05]];
        for x in xs {
            for y in xs {
                let dot: f64 = Kernel::Poly3.map(x).iter().zip(Kernel::Poly3.map(y)).map(|(a, b)| a * b).sum();
                let k = (x[0] * y[0] + x[1] * y[1] + x[2] * y[2] + 1.0).powi(3);
                assert!((dot - k).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn score_gradient_matches_finite_differences() {
        let w: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = [0.4, 0.8, 0.2];
        let g = Kernel::Poly3.score_grad(&w, x);
        for d in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[d] += 1e-6;
            xm[d] -= 1e-6;
            let fd = (Kernel::Poly3.score(&w, xp) - Kernel::Poly3.score(&w, xm)) / 2e-6;
            assert!((fd - g[d]).abs() < 1e-6);
        }
        let s: f64 = Kernel::Poly3.map(x).iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((s - Kernel::Poly3.score(&w, x)).abs() < 1e-12);
    }
}
