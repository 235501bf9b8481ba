//! Scan-line finder and alignment detection.
//!
//! Finders are found as 1:1:3:1:1 black/white runs along rows, confirmed by
//! vertical, horizontal and diagonal cross-checks, clustered, and then
//! validated by the color of their core. The core color also tells which
//! corner a finder belongs to. Alignment patterns are searched near the
//! positions predicted by the current image↔grid estimate, which is refit
//! after every accepted pattern.

use crate::color::{self, Rgb};
use crate::error::{HiqError, Result};
use crate::geometry::{affine_3pt, estimate_rgt, Correspondence, ALIGNMENT_WEIGHT, FINDER_WEIGHT};
use crate::raster::RasterImage;
use crate::symbology::layout::{MAX_VERSION, MIN_VERSION};
use crate::symbology::{Layout, ALIGNMENT_CORE_COLOR, FINDER_CORE_COLORS};

use super::binarize::BitImage;

/// Relative tolerance per run when matching module ratios.
pub const TOLERANCE: f64 = 0.5;

/// Looser tolerance for the vertical and diagonal cross-checks, where blur
/// and neighbor bleed erode the one-module white gaps unevenly.
pub const CROSS_TOLERANCE: f64 = 0.75;

const FINDER_RATIOS: [f64; 5] = [1.0, 1.0, 3.0, 1.0, 1.0];

/// Alignment search radius around the predicted center, in modules.
pub const ALIGNMENT_SEARCH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Finder {
    /// Subpixel center in image coordinates.
    pub center: (f64, f64),
    /// Estimated module size in pixels.
    pub module: f64,
    /// White-normalized core color.
    pub core: Rgb,
    /// White-normalized outer-ring color.
    pub ring: Rgb,
    /// Number of scan lines that confirmed the pattern.
    pub hits: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub center: (f64, f64),
    /// Center module `(row, col)`.
    pub grid: (usize, usize),
    pub core: Rgb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSet {
    /// Top-left, top-right, bottom-left.
    pub finders: [Finder; 3],
    pub module_size: f64,
    /// Version implied by the finder spacing.
    pub version: u8,
    pub alignments: Vec<Alignment>,
}

impl PatternSet {
    /// Weighted correspondences of every detected pattern for `version`.
    pub fn correspondences(&self, version: u8) -> Result<Vec<Correspondence>> {
        let layout = Layout::get(version)?;
        let mut out: Vec<Correspondence> = self
            .finders
            .iter()
            .zip(layout.finder_centers())
            .map(|(f, (r, c))| Correspondence::new(f.center, grid_point(r, c), FINDER_WEIGHT))
            .collect();
        out.extend(
            self.alignments
                .iter()
                .map(|a| Correspondence::new(a.center, grid_point(a.grid.0, a.grid.1), ALIGNMENT_WEIGHT)),
        );
        Ok(out)
    }
}

/// Grid coordinates `(x, y)` of the center of module `(r, c)`.
pub fn grid_point(r: usize, c: usize) -> (f64, f64) {
    (c as f64 + 0.5, r as f64 + 0.5)
}

/// Module size implied by `counts` if every run is within `tol` of its
/// expected share.
pub fn ratio_unit(counts: &[usize], ratios: &[f64], tol: f64) -> Option<f64> {
    let total: usize = counts.iter().sum();
    let unit = total as f64 / ratios.iter().sum::<f64>();
    if counts.iter().any(|&c| c == 0) || unit < 1.0 {
        return None;
    }
    counts
        .iter()
        .zip(ratios)
        .all(|(&c, &r)| (c as f64 - r * unit).abs() < tol * r * unit)
        .then_some(unit)
}

/// Module size of a finder cross-check. Bleed shifts the boundary between
/// the outer ring and the white gap, so when the five runs miss the ratio
/// each ring is merged with its gap and the 2:3:2 widths are checked. With
/// `expect`, the runs must also match that module size.
pub fn finder_cross_unit(counts: &[usize; 5], expect: Option<f64>) -> Option<f64> {
    let unit = ratio_unit(counts, &FINDER_RATIOS, CROSS_TOLERANCE).or_else(|| {
        if counts.contains(&0) {
            return None;
        }
        let merged = [counts[0] + counts[1], counts[2], counts[3] + counts[4]];
        ratio_unit(&merged, &[2.0, 3.0, 2.0], TOLERANCE)
    })?;
    match expect {
        Some(e) if (counts[2] as f64 - 3.0 * e).abs() >= TOLERANCE * 3.0 * e => None,
        _ => Some(unit),
    }
}

#[derive(Debug, Clone, Copy)]
struct Run {
    black: bool,
    start: usize,
    len: usize,
}

fn runs(bits: impl Iterator<Item = u8>, offset: usize) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::new();
    for (i, b) in bits.enumerate() {
        let black = b == 1;
        match out.last_mut() {
            Some(r) if r.black == black => r.len += 1,
            _ => out.push(Run { black, start: offset + i, len: 1 }),
        }
    }
    out
}

fn row_runs(bits: &BitImage, y: usize, x0: usize, x1: usize) -> Vec<Run> {
    runs((x0..x1).map(|x| bits.get(x, y)), x0)
}

/// Walks from the black pixel `(x, y)` in both directions along `(dx, dy)`
/// and measures the five runs black/white/black(center)/white/black.
/// Outer runs stop counting at `cap`. Returns the runs and the center of
/// the middle run as a signed offset (in steps) from the start pixel's
/// leading edge.
fn cross_check(bits: &BitImage, x: usize, y: usize, dx: isize, dy: isize, cap: usize) -> Option<([usize; 5], f64)> {
    if !bits.is_black(x, y) {
        return None;
    }
    let (w, h) = (bits.width as isize, bits.height as isize);
    let at = |t: isize| -> Option<bool> {
        let (px, py) = (x as isize + t * dx, y as isize + t * dy);
        (px >= 0 && py >= 0 && px < w && py < h).then(|| bits.is_black(px as usize, py as usize))
    };
    // Direction s ∈ {−1, +1}: center extent, white run, outer black run.
    let walk = |s: isize| -> Option<[usize; 3]> {
        let mut t = s;
        let mut out = [0usize; 3];
        for (k, want_black) in [true, false, true].into_iter().enumerate() {
            loop {
                match at(t) {
                    Some(b) if b == want_black => {
                        out[k] += 1;
                        t += s;
                        if k == 2 && out[k] >= cap {
                            break;
                        }
                        if out[k] > 4 * cap {
                            return None;
                        }
                    }
                    _ => break,
                }
            }
            if k > 0 && out[k] == 0 {
                return None;
            }
        }
        Some(out)
    };
    let neg = walk(-1)?;
    let pos = walk(1)?;
    let counts = [neg[2], neg[1], neg[0] + 1 + pos[0], pos[1], pos[2]];
    let center = ((pos[0] + 1) as f64 - neg[0] as f64) / 2.0;
    Some((counts, center))
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    x: f64,
    y: f64,
    unit: f64,
}

/// [`cross_check`] that passes [`finder_cross_unit`], retried at offsets of
/// up to half a module across the scan direction so a single noisy pixel
/// line cannot veto a pattern. Offsets are reported in the original frame.
fn cross_check_near(
    bits: &BitImage,
    x: usize,
    y: usize,
    (dx, dy): (isize, isize),
    cap: usize,
    unit: f64,
    expect: Option<f64>,
) -> Option<([usize; 5], f64, f64)> {
    let (px, py) = if dx == 0 { (1, 0) } else { (0, 1) };
    let spread = (unit / 2.0).floor() as isize;
    (0..=spread).flat_map(|k| if k == 0 { vec![0] } else { vec![-k, k] }).find_map(|k| {
        let (sx, sy) = (x as isize + k * px, y as isize + k * py);
        if sx < 0 || sy < 0 || sx as usize >= bits.width || sy as usize >= bits.height {
            return None;
        }
        let (counts, off) = cross_check(bits, sx as usize, sy as usize, dx, dy, cap)?;
        let u = finder_cross_unit(&counts, expect)?;
        Some((counts, off, u))
    })
}

fn finder_candidate(bits: &BitImage, cx: f64, y: usize, unit: f64) -> Option<Candidate> {
    let cap = (7.0 * unit).ceil() as usize + 2;
    let col = cx.floor() as usize;
    let (_, voff, uv) = cross_check_near(bits, col, y, (0, 1), cap, unit, None)?;
    if !(0.5..2.0).contains(&(uv / unit)) {
        return None;
    }
    let cy = y as f64 + voff;
    let row = cy.floor() as usize;
    // Same direction as the row scan, so the module size must agree with it.
    let (_, hoff, uh) = cross_check_near(bits, col, row, (1, 0), cap, unit, Some(unit))?;
    let cx = col as f64 + hoff;
    cross_check_near(bits, cx.floor() as usize, row, (1, 1), cap, unit, None)?;
    Some(Candidate { x: cx, y: cy, unit: (uv + uh) / 2.0 })
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

/// Median of cross-check centers taken across the core, first along
/// columns, then along rows. Bleed that bridges the core to its ring on one
/// side shifts only the lines through that side.
fn refine_center(bits: &BitImage, (x, y): (f64, f64), unit: f64) -> (f64, f64) {
    let cap = (7.0 * unit).ceil() as usize + 2;
    let offsets = [-1.0, -0.5, 0.0, 0.5, 1.0].map(|k| k * unit);
    let along = |fixed: f64, start: f64, vertical: bool| {
        let centers = offsets
            .iter()
            .filter_map(|&k| {
                let (px, py) = if vertical { (fixed + k, start) } else { (start, fixed + k) };
                if px < 0.0 || py < 0.0 {
                    return None;
                }
                let (px, py) = (px.floor() as usize, py.floor() as usize);
                if px >= bits.width || py >= bits.height {
                    return None;
                }
                let (dx, dy) = if vertical { (0, 1) } else { (1, 0) };
                let (counts, off) = cross_check(bits, px, py, dx, dy, cap)?;
                finder_cross_unit(&counts, None)?;
                Some(if vertical { py as f64 + off } else { px as f64 + off })
            })
            .collect();
        median(centers)
    };
    let y = along(x, y, true).unwrap_or(y);
    let x = along(y, x, false).unwrap_or(x);
    (x, y)
}

struct Cluster {
    sx: f64,
    sy: f64,
    su: f64,
    n: usize,
}

impl Cluster {
    fn center(&self) -> (f64, f64, f64) {
        let n = self.n as f64;
        (self.sx / n, self.sy / n, self.su / n)
    }
}

fn cluster(cands: &[Candidate]) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    for c in cands {
        let hit = out.iter_mut().find(|k| {
            let (x, y, u) = k.center();
            (x - c.x).abs() <= 2.0 * u && (y - c.y).abs() <= 2.0 * u && (0.5..2.0).contains(&(c.unit / u))
        });
        match hit {
            Some(k) => {
                k.sx += c.x;
                k.sy += c.y;
                k.su += c.unit;
                k.n += 1;
            }
            None => out.push(Cluster { sx: c.x, sy: c.y, su: c.unit, n: 1 }),
        }
    }
    out
}

fn mean_sample(img: &RasterImage, pts: &[(f64, f64)]) -> Option<Rgb> {
    let mut acc = [0.0; 3];
    for &(x, y) in pts {
        let s = img.sample(x, y)?;
        for k in 0..3 {
            acc[k] += s[k] / pts.len() as f64;
        }
    }
    Some(acc)
}

/// Per-channel maximum over samples at distance `r` in the four axis
/// directions.
fn local_white(img: &RasterImage, (x, y): (f64, f64), r: f64) -> Option<Rgb> {
    let mut w = [0.0f64; 3];
    for (dx, dy) in [(r, 0.0), (-r, 0.0), (0.0, r), (0.0, -r)] {
        let s = img.sample(x + dx, y + dy)?;
        for k in 0..3 {
            w[k] = w[k].max(s[k]);
        }
    }
    w.iter().all(|&v| v > 0.05).then_some(w)
}

fn normalized(c: Rgb, w: Rgb) -> Rgb {
    [0, 1, 2].map(|k| (c[k] / w[k]).clamp(0.0, 2.0))
}

fn cross(center: (f64, f64), r: f64) -> [(f64, f64); 4] {
    let (x, y) = center;
    [(x + r, y), (x - r, y), (x, y + r), (x, y - r)]
}

/// Colors of a finder candidate and the corner it belongs to, if its core
/// is one of the finder core colors.
fn classify_finder(img: &RasterImage, center: (f64, f64), unit: f64) -> Option<(usize, Rgb, Rgb)> {
    let white = local_white(img, center, 2.0 * unit)?;
    let mut core_pts = vec![center];
    core_pts.extend(cross(center, 0.5 * unit));
    let core = normalized(mean_sample(img, &core_pts)?, white);
    let ring = normalized(mean_sample(img, &cross(center, 3.0 * unit))?, white);
    let k = color::nearest(core, &color::CUBE_CORNERS);
    let role = FINDER_CORE_COLORS.iter().position(|&c| c == color::CUBE_CORNERS[k])?;
    Some((role, core, ring))
}

/// All color-validated finders in the image, best first per corner.
pub fn find_finders(bits: &BitImage, img: &RasterImage) -> Vec<(usize, Finder)> {
    let mut cands = Vec::new();
    for y in 0..bits.height {
        let rr = row_runs(bits, y, 0, bits.width);
        for win in rr.windows(5) {
            if !win[0].black {
                continue;
            }
            let counts = [0, 1, 2, 3, 4].map(|k| win[k].len);
            let Some(unit) = ratio_unit(&counts, &FINDER_RATIOS, TOLERANCE) else {
                continue;
            };
            let cx = win[2].start as f64 + win[2].len as f64 / 2.0;
            if let Some(c) = finder_candidate(bits, cx, y, unit) {
                cands.push(c);
            }
        }
    }
    let mut out: Vec<(usize, Finder)> = cluster(&cands)
        .into_iter()
        .filter(|k| k.n >= 2)
        .filter_map(|k| {
            let (x, y, unit) = k.center();
            let (x, y) = refine_center(bits, (x, y), unit);
            let Some((role, core, ring)) = classify_finder(img, (x, y), unit) else {
                log::debug!("finder-like cluster at ({x:.1}, {y:.1}) with {} hits has no finder core color", k.n);
                return None;
            };
            Some((role, Finder { center: (x, y), module: unit, core, ring, hits: k.n }))
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.hits.cmp(&a.1.hits)));
    out
}

/// Version whose finder spacing best matches the detected finders.
pub fn estimate_version(finders: &[Finder; 3]) -> u8 {
    let ms = finders.iter().map(|f| f.module).sum::<f64>() / 3.0;
    let d = |a: &Finder, b: &Finder| ((a.center.0 - b.center.0).powi(2) + (a.center.1 - b.center.1).powi(2)).sqrt();
    let dim = (d(&finders[0], &finders[1]) + d(&finders[0], &finders[2])) / (2.0 * ms) + 7.0;
    ((dim - 17.0) / 4.0).round().clamp(MIN_VERSION as f64, MAX_VERSION as f64) as u8
}

/// Candidates per corner considered when choosing the finder triple.
const TRIPLE_CANDIDATES: usize = 12;

/// How far a triple is from a square's corners with the finder core colors:
/// unequal arms, a non-right angle at the top-left, unequal module sizes
/// and off-color cores all add up.
fn triple_cost(t: [&Finder; 3]) -> f64 {
    let arm = |b: &Finder| (b.center.0 - t[0].center.0, b.center.1 - t[0].center.1);
    let (a, b) = (arm(t[1]), arm(t[2]));
    let (la, lb) = (a.0.hypot(a.1), b.0.hypot(b.1));
    if la == 0.0 || lb == 0.0 {
        return f64::INFINITY;
    }
    let cos = (a.0 * b.0 + a.1 * b.1) / (la * lb);
    let units = t.map(|f| f.module);
    let mean = units.iter().sum::<f64>() / 3.0;
    let unit_spread = units.iter().map(|u| (u / mean).ln().abs()).fold(0.0, f64::max);
    let color: f64 = t
        .iter()
        .zip(FINDER_CORE_COLORS)
        .map(|(f, c)| color::dist2(f.core, c).sqrt())
        .sum::<f64>()
        / 3.0;
    (la / lb).ln().abs() + cos.abs() + unit_spread + color
}

/// The lowest-cost triple; ties keep the better-confirmed candidates.
fn best_triple(by_role: &[Vec<Finder>; 3]) -> [Finder; 3] {
    let mut best = (f64::INFINITY, [&by_role[0][0], &by_role[1][0], &by_role[2][0]]);
    for tl in &by_role[0] {
        for tr in &by_role[1] {
            for bl in &by_role[2] {
                let cost = triple_cost([tl, tr, bl]);
                if cost < best.0 {
                    best = (cost, [tl, tr, bl]);
                }
            }
        }
    }
    best.1.map(|f| *f)
}

/// Three finders (one per corner), the estimated version and the alignment
/// patterns of that version.
pub fn find_patterns(bits: &BitImage, img: &RasterImage) -> Result<PatternSet> {
    let found = find_finders(bits, img);
    let mut by_role: [Vec<Finder>; 3] = Default::default();
    for (role, f) in found {
        if by_role[role].len() < TRIPLE_CANDIDATES {
            by_role[role].push(f);
        }
    }
    let missing: Vec<&str> = ["top-left", "top-right", "bottom-left"]
        .iter()
        .zip(&by_role)
        .filter(|(_, f)| f.is_empty())
        .map(|(n, _)| *n)
        .collect();
    if !missing.is_empty() {
        return Err(HiqError::NotFound(format!("no {} finder", missing.join(", "))));
    }
    let finders = best_triple(&by_role);
    let version = estimate_version(&finders);
    let module_size = finders.iter().map(|f| f.module).sum::<f64>() / 3.0;
    let alignments = find_alignments(bits, img, &finders, version)?;
    Ok(PatternSet { finders, module_size, version, alignments })
}

fn finder_corrs(finders: &[Finder; 3], layout: &Layout) -> Vec<Correspondence> {
    finders
        .iter()
        .zip(layout.finder_centers())
        .map(|(f, (r, c))| Correspondence::new(f.center, grid_point(r, c), FINDER_WEIGHT))
        .collect()
}

/// Searches every alignment pattern of `version`, nearest to the finders
/// first, within ±2 modules of where the running estimate predicts it.
pub fn find_alignments(bits: &BitImage, img: &RasterImage, finders: &[Finder; 3], version: u8) -> Result<Vec<Alignment>> {
    let layout = Layout::get(version)?;
    let mut corrs = finder_corrs(finders, layout);
    let mut g2i = affine_3pt(&corrs)?.inverse()?;
    let fc = layout.finder_centers();
    let mut todo: Vec<(usize, usize)> = layout.alignment_centers().to_vec();
    let dist = |&(r, c): &(usize, usize)| {
        fc.iter()
            .map(|&(fr, fcol)| r.abs_diff(fr).pow(2) + c.abs_diff(fcol).pow(2))
            .min()
            .unwrap_or(0)
    };
    todo.sort_by_key(dist);
    let mut out = Vec::new();
    for (r, c) in todo {
        let (gx, gy) = grid_point(r, c);
        let p = g2i.apply(gx, gy);
        let q = g2i.apply(gx + 1.0, gy);
        let ms = ((q.0 - p.0).powi(2) + (q.1 - p.1).powi(2)).sqrt();
        if let Some((center, core)) = search_alignment(bits, img, p, ms) {
            out.push(Alignment { center, grid: (r, c), core });
            corrs.push(Correspondence::new(center, (gx, gy), ALIGNMENT_WEIGHT));
            if corrs.len() >= 4 {
                if let Ok(h) = estimate_rgt(&corrs).and_then(|h| h.inverse()) {
                    g2i = h;
                }
            }
        }
    }
    Ok(out)
}

/// Inner runs white/black/white of one module each (or three modules
/// together when bleed moves the boundaries between them); outer black runs
/// only need to exist.
fn alignment_runs_ok(counts: &[usize; 5], ms: f64) -> bool {
    let inner = &counts[1..4];
    let each = inner.iter().all(|&c| (c as f64 - ms).abs() < CROSS_TOLERANCE * ms);
    let span = inner.iter().sum::<usize>() as f64;
    let merged = !inner.contains(&0) && (span - 3.0 * ms).abs() < TOLERANCE * ms;
    (each || merged) && counts[0] as f64 >= 0.5 * ms && counts[4] as f64 >= 0.5 * ms
}

/// Fraction of the way from white to the alignment core color a sampled
/// core must reach.
const MIN_CORE_STEP: f64 = 0.3;

/// A one-module core bleeds toward white under neighbor mixing, so white is
/// left out of the nearest-color test (the core binarized black) and a
/// minimum step away from white is required instead.
fn is_alignment_core(core: Rgb) -> bool {
    let dark = &color::CUBE_CORNERS[1..];
    let dir = [0, 1, 2].map(|k| color::WHITE[k] - ALIGNMENT_CORE_COLOR[k]);
    let step = (0..3).map(|k| (color::WHITE[k] - core[k]) * dir[k]).sum::<f64>() / color::dist2(color::WHITE, ALIGNMENT_CORE_COLOR);
    dark[color::nearest(core, dark)] == ALIGNMENT_CORE_COLOR && step >= MIN_CORE_STEP
}

fn search_alignment(bits: &BitImage, img: &RasterImage, p: (f64, f64), ms: f64) -> Option<((f64, f64), Rgb)> {
    if !(ms >= 1.0) {
        return None;
    }
    let reach = ALIGNMENT_SEARCH * ms;
    let span = reach + 3.0 * ms;
    let clampi = |v: f64, hi: usize| v.max(0.0).min(hi as f64) as usize;
    let (x0, x1) = (clampi(p.0 - span, bits.width), clampi(p.0 + span + 1.0, bits.width));
    let (y0, y1) = (clampi(p.1 - reach, bits.height), clampi(p.1 + reach + 1.0, bits.height));
    let cap = (2.0 * ms).ceil() as usize + 1;
    let mut best: Option<(f64, (f64, f64), Rgb)> = None;
    for y in y0..y1 {
        let rr = row_runs(bits, y, x0, x1);
        for win in rr.windows(5) {
            if !win[0].black || !alignment_runs_ok(&[0, 1, 2, 3, 4].map(|k| win[k].len), ms) {
                continue;
            }
            let cx = win[2].start as f64 + win[2].len as f64 / 2.0;
            if (cx - p.0).abs() > reach {
                continue;
            }
            let col = cx.floor() as usize;
            let Some((vc, voff)) = cross_check(bits, col, y, 0, 1, cap) else {
                continue;
            };
            if !alignment_runs_ok(&vc, ms) {
                continue;
            }
            let cy = y as f64 + voff;
            let Some((hc, hoff)) = cross_check(bits, col, cy.floor() as usize, 1, 0, cap) else {
                continue;
            };
            if !alignment_runs_ok(&hc, ms) {
                continue;
            }
            let center = (col as f64 + hoff, cy);
            let d = (center.0 - p.0).powi(2) + (center.1 - p.1).powi(2);
            if d > reach * reach || best.as_ref().is_some_and(|b| b.0 <= d) {
                continue;
            }
            let Some(white) = local_white(img, center, ms) else {
                continue;
            };
            let mut core_pts = vec![center];
            core_pts.extend(cross(center, 0.25 * ms));
            let Some(core) = mean_sample(img, &core_pts).map(|c| normalized(c, white)) else {
                continue;
            };
            if is_alignment_core(core) {
                best = Some((d, center, core));
            }
        }
    }
    best.map(|(_, c, core)| (c, core))
}
