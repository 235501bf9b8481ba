use serde::{Deserialize, Serialize};

use crate::error::{HiqError, Result};

use super::svd::jacobi_svd;

/// Default correspondence weights.
pub const FINDER_WEIGHT: f64 = 0.6;
pub const ALIGNMENT_WEIGHT: f64 = 0.4;

/// Planar projective transform, row-major `h1..h9`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    pub h: [f64; 9],
}

/// A weighted point pair `image → grid`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub image: (f64, f64),
    pub grid: (f64, f64),
    pub weight: f64,
}

impl Correspondence {
    pub fn new(image: (f64, f64), grid: (f64, f64), weight: f64) -> Self {
        Self { image, grid, weight }
    }
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        h: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    };

    pub fn new(h: [f64; 9]) -> Self {
        Self { h }
    }

    /// `x' = s·x + tx`, `y' = s·y + ty`.
    pub fn scale_translate(s: f64, tx: f64, ty: f64) -> Self {
        Self::new([s, 0.0, tx, 0.0, s, ty, 0.0, 0.0, 1.0])
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let h = &self.h;
        let w = h[6] * x + h[7] * y + h[8];
        ((h[0] * x + h[1] * y + h[2]) / w, (h[3] * x + h[4] * y + h[5]) / w)
    }

    pub fn det(&self) -> f64 {
        let h = &self.h;
        h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6])
            + h[2] * (h[3] * h[7] - h[4] * h[6])
    }

    pub fn norm(&self) -> f64 {
        self.h.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn inverse(&self) -> Result<Self> {
        let d = self.det();
        if !d.is_finite() || d.abs() < 1e-12 * self.norm().powi(3) {
            return Err(HiqError::InvalidParameter("singular homography".into()));
        }
        let h = &self.h;
        let adj = [
            h[4] * h[8] - h[5] * h[7],
            h[2] * h[7] - h[1] * h[8],
            h[1] * h[5] - h[2] * h[4],
            h[5] * h[6] - h[3] * h[8],
            h[0] * h[8] - h[2] * h[6],
            h[2] * h[3] - h[0] * h[5],
            h[3] * h[7] - h[4] * h[6],
            h[1] * h[6] - h[0] * h[7],
            h[0] * h[4] - h[1] * h[3],
        ];
        Ok(Self::new(adj.map(|v| v / d)))
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let (a, b) = (&self.h, &other.h);
        let mut out = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                out[r * 3 + c] = (0..3).map(|k| a[r * 3 + k] * b[k * 3 + c]).sum();
            }
        }
        Self::new(out)
    }

    /// Unit Frobenius norm with `h9 ≥ 0` (tie: `h8 ≥ 0`).
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        let mut h = self.h.map(|v| v / n);
        let flip = if h[8].abs() > 1e-15 { h[8] < 0.0 } else { h[7] < 0.0 };
        if flip {
            h = h.map(|v| -v);
        }
        Self::new(h)
    }

    /// Relative distance after normalizing both sides.
    pub fn distance(&self, other: &Self) -> f64 {
        let (a, b) = (self.normalized(), other.normalized());
        a.h.iter().zip(&b.h).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn has_collinear_triple(points: &[(f64, f64)]) -> bool {
    let scale = points
        .iter()
        .flat_map(|p| [p.0.abs(), p.1.abs()])
        .fold(1.0f64, f64::max);
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if cross(points[i], points[j], points[k]).abs() < 1e-9 * scale * scale {
                    return true;
                }
            }
        }
    }
    false
}

/// Similarity transform taking points to zero centroid, mean distance √2.
fn conditioner(points: impl Iterator<Item = (f64, f64)> + Clone) -> Homography {
    let n = points.clone().count() as f64;
    let (sx, sy) = points.clone().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (cx, cy) = (sx / n, sy / n);
    let mean = points.map(|p| ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()).sum::<f64>() / n;
    let s = if mean > 0.0 { std::f64::consts::SQRT_2 / mean } else { 1.0 };
    Homography::scale_translate(s, -s * cx, -s * cy)
}

/// Exact homography from four non-degenerate correspondences.
pub fn homography_4pt(corrs: &[Correspondence]) -> Result<Homography> {
    if corrs.len() != 4 {
        return Err(HiqError::InvalidParameter(format!(
            "expected 4 correspondences, got {}",
            corrs.len()
        )));
    }
    let img: Vec<_> = corrs.iter().map(|c| c.image).collect();
    let grid: Vec<_> = corrs.iter().map(|c| c.grid).collect();
    if has_collinear_triple(&img) || has_collinear_triple(&grid) {
        return Err(HiqError::DegenerateConfiguration("three collinear points".into()));
    }
    let unit: Vec<_> = corrs.iter().map(|c| Correspondence { weight: 1.0, ..*c }).collect();
    solve(&unit)
}

/// Affine map through three non-collinear correspondences.
pub fn affine_3pt(corrs: &[Correspondence]) -> Result<Homography> {
    if corrs.len() != 3 {
        return Err(HiqError::InvalidParameter(format!(
            "expected 3 correspondences, got {}",
            corrs.len()
        )));
    }
    let [p0, p1, p2] = [0, 1, 2].map(|i| corrs[i].image);
    let d = (p1.0 - p0.0) * (p2.1 - p0.1) - (p2.0 - p0.0) * (p1.1 - p0.1);
    let span = [p0, p1, p2].iter().map(|p| p.0.abs().max(p.1.abs())).fold(1.0, f64::max);
    if d.abs() <= 1e-12 * span * span {
        return Err(HiqError::DegenerateConfiguration("three collinear points".into()));
    }
    // Solve [x y 1]·[a b c]ᵀ = u for each output coordinate by Cramer's rule.
    let row = |f: fn(&Correspondence) -> f64| -> [f64; 3] {
        let [u0, u1, u2] = [0, 1, 2].map(|i| f(&corrs[i]));
        let a = ((u1 - u0) * (p2.1 - p0.1) - (u2 - u0) * (p1.1 - p0.1)) / d;
        let b = ((p1.0 - p0.0) * (u2 - u0) - (p2.0 - p0.0) * (u1 - u0)) / d;
        [a, b, u0 - a * p0.0 - b * p0.1]
    };
    let [a, b, c] = row(|c| c.grid.0);
    let [e, f, g] = row(|c| c.grid.1);
    Ok(Homography::new([a, b, c, e, f, g, 0.0, 0.0, 1.0]))
}

/// Weighted least-squares homography over N ≥ 4 correspondences: the right
/// singular vector of the row-weighted DLT matrix for its smallest singular
/// value.
pub fn estimate_rgt(corrs: &[Correspondence]) -> Result<Homography> {
    if corrs.len() < 4 {
        return Err(HiqError::DegenerateConfiguration(format!(
            "{} correspondences, need at least 4",
            corrs.len()
        )));
    }
    if let Some(c) = corrs.iter().find(|c| !(c.weight > 0.0)) {
        return Err(HiqError::InvalidParameter(format!("non-positive weight {}", c.weight)));
    }
    solve(corrs)
}

fn solve(corrs: &[Correspondence]) -> Result<Homography> {
    let t_img = conditioner(corrs.iter().map(|c| c.image));
    let t_grid = conditioner(corrs.iter().map(|c| c.grid));
    let m = 2 * corrs.len();
    let mut a = Vec::with_capacity(m * 9);
    for c in corrs {
        let (x, y) = t_img.apply(c.image.0, c.image.1);
        let (u, v) = t_grid.apply(c.grid.0, c.grid.1);
        let w = c.weight;
        a.extend([x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u].map(|e| w * e));
        a.extend([0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, -v].map(|e| w * e));
    }
    let svd = jacobi_svd(&a, m, 9);
    if svd.values[7] <= 1e-10 * svd.values[0] {
        return Err(HiqError::DegenerateConfiguration(
            "correspondence matrix has rank below 8".into(),
        ));
    }
    let (v, _) = svd.smallest();
    let hn = Homography::new(v.try_into().expect("9 entries"));
    let h = t_grid.inverse()?.compose(&hn).compose(&t_img);
    let h = h.normalized();
    if h.det().abs() < 1e-14 {
        return Err(HiqError::DegenerateConfiguration("estimated homography is singular".into()));
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_h(rng: &mut impl Rng) -> Homography {
        Homography::new([
            rng.random_range(2.0..5.0),
            rng.random_range(-0.5..0.5),
            rng.random_range(10.0..60.0),
            rng.random_range(-0.5..0.5),
            rng.random_range(2.0..5.0),
            rng.random_range(10.0..60.0),
            rng.random_range(-1e-3..1e-3),
            rng.random_range(-1e-3..1e-3),
            1.0,
        ])
    }

    fn corrs_from(h_grid_to_img: &Homography, grid: &[(f64, f64)], w: f64) -> Vec<Correspondence> {
        grid.iter()
            .map(|&g| Correspondence::new(h_grid_to_img.apply(g.0, g.1), g, w))
            .collect()
    }

    #[test]
    fn affine_through_three_points() {
        let h = Homography::new([2.0, 0.5, 3.0, -0.25, 1.5, 7.0, 0.0, 0.0, 1.0]);
        let grid = [(0.0, 0.0), (10.0, 1.0), (2.0, 9.0)];
        let c: Vec<_> = grid.iter().map(|&g| Correspondence::new(g, h.apply(g.0, g.1), 1.0)).collect();
        let a = affine_3pt(&c).unwrap();
        assert!(a.distance(&h) < 1e-12);
        let line: Vec<_> = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]
            .iter()
            .map(|&p| Correspondence::new(p, p, 1.0))
            .collect();
        assert!(affine_3pt(&line).is_err());
    }

    #[test]
    fn unit_square_gives_identity() {
        let sq = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let c: Vec<_> = sq.iter().map(|&p| Correspondence::new(p, p, 1.0)).collect();
        let h = homography_4pt(&c).unwrap();
        assert!(h.distance(&Homography::IDENTITY) < 1e-12);
    }

    #[test]
    fn recovers_random_homographies() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let grid = [(3.5, 3.5), (101.5, 3.5), (3.5, 101.5), (98.5, 98.5)];
        for _ in 0..50 {
            let g2i = random_h(&mut rng);
            let truth = g2i.inverse().unwrap();
            let h = homography_4pt(&corrs_from(&g2i, &grid, 1.0)).unwrap();
            assert!(h.distance(&truth) < 1e-9, "{}", h.distance(&truth));
        }
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (0.0, 5.0)];
        let c: Vec<_> = pts.iter().map(|&p| Correspondence::new(p, p, 1.0)).collect();
        assert!(matches!(homography_4pt(&c), Err(HiqError::DegenerateConfiguration(_))));
        let line: Vec<_> = (0..6)
            .map(|i| Correspondence::new((i as f64, 2.0 * i as f64), (i as f64, 0.0), 1.0))
            .collect();
        assert!(matches!(estimate_rgt(&line), Err(HiqError::DegenerateConfiguration(_))));
    }

    #[test]
    fn rgt_on_four_points_matches_exact_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g2i = random_h(&mut rng);
        let grid = [(3.5, 3.5), (60.5, 3.5), (3.5, 60.5), (57.5, 57.5)];
        let c = corrs_from(&g2i, &grid, 0.5);
        let a = homography_4pt(&c).unwrap();
        let b = estimate_rgt(&c).unwrap();
        assert!(a.distance(&b) < 1e-9);
    }

    #[test]
    fn noiseless_many_points_reproject_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g2i = random_h(&mut rng);
        let grid: Vec<_> = (0..10)
            .map(|i| (3.5 + 17.0 * (i % 4) as f64, 3.5 + 29.0 * (i / 4) as f64 + (i % 3) as f64))
            .collect();
        let c = corrs_from(&g2i, &grid, 0.4);
        let h = estimate_rgt(&c).unwrap();
        for corr in &c {
            let (u, v) = h.apply(corr.image.0, corr.image.1);
            assert!((u - corr.grid.0).abs() < 1e-6 && (v - corr.grid.1).abs() < 1e-6);
        }
    }

    #[test]
    fn inverse_and_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_h(&mut rng);
        let id = h.compose(&h.inverse().unwrap());
        assert!(id.distance(&Homography::IDENTITY) < 1e-12);
        assert!(Homography::new([1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0]).inverse().is_err());
    }
}
