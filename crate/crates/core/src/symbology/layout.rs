//! Module roles for one layer of a version-v symbol.
//!
//! Every layer shares the same geometry: three 7×7 finders with a one-module
//! separator, 5×5 alignment patterns at the monochrome QR positions, an
//! 89-module format region next to the top-left finder, and data modules
//! everywhere else. There are no timing patterns and no version blocks.

use std::sync::OnceLock;

use crate::error::{HiqError, Result};

pub const MIN_VERSION: u8 = 1;
pub const MAX_VERSION: u8 = 40;
pub const FORMAT_COPY_LEN: usize = 44;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModuleRole {
    /// Finder pattern or its separator; the index is 0 (top-left),
    /// 1 (top-right) or 2 (bottom-left).
    Finder(u8),
    Alignment,
    Format,
    Data,
}

#[derive(Debug, Clone)]
pub struct Layout {
    pub version: u8,
    pub dim: usize,
    roles: Vec<ModuleRole>,
    /// Data modules in natural placement order.
    data_positions: Vec<(usize, usize)>,
    format_a: Vec<(usize, usize)>,
    format_b: Vec<(usize, usize)>,
    alignment_centers: Vec<(usize, usize)>,
}

pub fn dimension(version: u8) -> usize {
    17 + 4 * version as usize
}

pub fn check_version(version: u8) -> Result<()> {
    if (MIN_VERSION..=MAX_VERSION).contains(&version) {
        Ok(())
    } else {
        Err(HiqError::InvalidParameter(format!(
            "version {version} outside {MIN_VERSION}..={MAX_VERSION}"
        )))
    }
}

/// Row/column coordinates of alignment pattern centers, as in QR.
pub fn alignment_coordinates(version: u8) -> Vec<usize> {
    if version == 1 {
        return Vec::new();
    }
    let v = version as usize;
    let size = dimension(version);
    let count = v / 7 + 2;
    let step = if v == 32 {
        26
    } else {
        (v * 4 + count * 2 + 1) / (count * 2 - 2) * 2
    };
    let mut out = vec![6];
    for i in 0..count - 1 {
        out.insert(1, size - 7 - i * step);
    }
    out
}

/// Finder centers in module coordinates `(row, col)`: top-left, top-right,
/// bottom-left.
pub fn finder_origins(dim: usize) -> [(usize, usize); 3] {
    [(0, 0), (0, dim - 7), (dim - 7, 0)]
}

impl Layout {
    pub fn get(version: u8) -> Result<&'static Layout> {
        static ALL: OnceLock<Vec<Layout>> = OnceLock::new();
        check_version(version)?;
        let all = ALL.get_or_init(|| (MIN_VERSION..=MAX_VERSION).map(Layout::build).collect());
        Ok(&all[version as usize - 1])
    }

    fn build(version: u8) -> Layout {
        let dim = dimension(version);
        let mut roles = vec![ModuleRole::Data; dim * dim];
        for (f, &(r0, c0)) in finder_origins(dim).iter().enumerate() {
            // 8×8 region including the separator on the inner sides.
            let rr = if r0 == 0 { 0..8 } else { dim - 8..dim };
            let cc = if c0 == 0 { 0..8 } else { dim - 8..dim };
            for r in rr {
                for c in cc.clone() {
                    roles[r * dim + c] = ModuleRole::Finder(f as u8);
                }
            }
        }

        let coords = alignment_coordinates(version);
        let mut alignment_centers = Vec::new();
        for &r in &coords {
            for &c in &coords {
                let overlaps = (r - 2..=r + 2).any(|rr| {
                    (c - 2..=c + 2).any(|cc| matches!(roles[rr * dim + cc], ModuleRole::Finder(_)))
                });
                if overlaps {
                    continue;
                }
                alignment_centers.push((r, c));
                for rr in r - 2..=r + 2 {
                    for cc in c - 2..=c + 2 {
                        roles[rr * dim + cc] = ModuleRole::Alignment;
                    }
                }
            }
        }

        let mut format_a = Vec::with_capacity(FORMAT_COPY_LEN);
        let mut format_b = Vec::with_capacity(FORMAT_COPY_LEN);
        for r in 0..8 {
            for c in 8..13 {
                format_a.push((r, c));
            }
        }
        for c in 9..13 {
            format_a.push((8, c));
        }
        for r in 8..13 {
            for c in 0..8 {
                format_b.push((r, c));
            }
        }
        for r in 9..13 {
            format_b.push((r, 8));
        }
        for &(r, c) in format_a.iter().chain(&format_b).chain(std::iter::once(&(8, 8))) {
            roles[r * dim + c] = ModuleRole::Format;
        }

        let mut data_positions = Vec::new();
        let mut upward = true;
        let mut right = dim as isize - 1;
        while right >= 0 {
            let cols: Vec<usize> = if right >= 1 {
                vec![right as usize, right as usize - 1]
            } else {
                vec![0]
            };
            for i in 0..dim {
                let r = if upward { dim - 1 - i } else { i };
                for &c in &cols {
                    if roles[r * dim + c] == ModuleRole::Data {
                        data_positions.push((r, c));
                    }
                }
            }
            upward = !upward;
            right -= 2;
        }

        Layout {
            version,
            dim,
            roles,
            data_positions,
            format_a,
            format_b,
            alignment_centers,
        }
    }

    pub fn role(&self, r: usize, c: usize) -> ModuleRole {
        self.roles[r * self.dim + c]
    }

    pub fn data_positions(&self) -> &[(usize, usize)] {
        &self.data_positions
    }

    pub fn data_module_count(&self) -> usize {
        self.data_positions.len()
    }

    /// Byte budget of one layer.
    pub fn codeword_budget(&self) -> usize {
        self.data_positions.len() / 8
    }

    pub fn format_copies(&self) -> [&[(usize, usize)]; 2] {
        [&self.format_a, &self.format_b]
    }

    pub fn alignment_centers(&self) -> &[(usize, usize)] {
        &self.alignment_centers
    }

    /// Finder centers as `(row, col)`.
    pub fn finder_centers(&self) -> [(usize, usize); 3] {
        finder_origins(self.dim).map(|(r, c)| (r + 3, c + 3))
    }

    /// Monochrome bit of a function-pattern module (1 = dark).
    pub fn pattern_bit(&self, r: usize, c: usize) -> Option<u8> {
        match self.role(r, c) {
            ModuleRole::Finder(f) => {
                let (r0, c0) = finder_origins(self.dim)[f as usize];
                let dr = r as isize - r0 as isize;
                let dc = c as isize - c0 as isize;
                if !(0..7).contains(&dr) || !(0..7).contains(&dc) {
                    return Some(0);
                }
                let ring = dr.min(dc).min(6 - dr).min(6 - dc);
                Some(if ring == 1 { 0 } else { 1 })
            }
            ModuleRole::Alignment => {
                let (ar, ac) = self.nearest_alignment(r, c);
                let d = (r as isize - ar as isize).abs().max((c as isize - ac as isize).abs());
                Some(if d == 1 { 0 } else { 1 })
            }
            _ => None,
        }
    }

    fn nearest_alignment(&self, r: usize, c: usize) -> (usize, usize) {
        *self
            .alignment_centers
            .iter()
            .find(|&&(ar, ac)| r.abs_diff(ar) <= 2 && c.abs_diff(ac) <= 2)
            .expect("module is not inside an alignment pattern")
    }

    /// Chebyshev ring index (0 = center) of a module within its finder, or
    /// `None` for separators and non-finder modules.
    pub fn finder_ring(&self, r: usize, c: usize) -> Option<(u8, usize)> {
        match self.role(r, c) {
            ModuleRole::Finder(f) => {
                let (cr, cc) = self.finder_centers()[f as usize];
                let d = r.abs_diff(cr).max(c.abs_diff(cc));
                (d <= 3).then_some((f, d))
            }
            _ => None,
        }
    }

    /// Chebyshev ring of a module within its alignment pattern.
    pub fn alignment_ring(&self, r: usize, c: usize) -> Option<usize> {
        (self.role(r, c) == ModuleRole::Alignment).then(|| {
            let (ar, ac) = self.nearest_alignment(r, c);
            r.abs_diff(ar).max(c.abs_diff(ac))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alignment_coordinates_match_qr() {
        assert_eq!(alignment_coordinates(2), vec![6, 18]);
        assert_eq!(alignment_coordinates(7), vec![6, 22, 38]);
        assert_eq!(alignment_coordinates(22), vec![6, 26, 50, 74, 98]);
        assert_eq!(alignment_coordinates(32), vec![6, 34, 60, 86, 112, 138]);
        assert_eq!(alignment_coordinates(40), vec![6, 30, 58, 86, 114, 142, 170]);
    }

    #[test]
    fn module_counts_add_up() {
        for v in MIN_VERSION..=MAX_VERSION {
            let l = Layout::get(v).unwrap();
            let mut count = [0usize; 4];
            for r in 0..l.dim {
                for c in 0..l.dim {
                    count[match l.role(r, c) {
                        ModuleRole::Finder(_) => 0,
                        ModuleRole::Alignment => 1,
                        ModuleRole::Format => 2,
                        ModuleRole::Data => 3,
                    }] += 1;
                }
            }
            assert_eq!(count[0], 192);
            assert_eq!(count[1], 25 * l.alignment_centers().len());
            assert_eq!(count[2], 89);
            assert_eq!(count[3], l.data_module_count());
            let unique: std::collections::HashSet<_> = l.data_positions().iter().collect();
            assert_eq!(unique.len(), l.data_module_count());
        }
    }

    #[test]
    fn budgets_at_extreme_versions() {
        assert_eq!(Layout::get(1).unwrap().codeword_budget(), 20);
        assert_eq!(Layout::get(40).unwrap().codeword_budget(), 3737);
        assert_eq!(Layout::get(22).unwrap().dim, 105);
    }

    #[test]
    fn finder_pattern_bits() {
        let l = Layout::get(3).unwrap();
        let row: Vec<u8> = (0..8).map(|c| l.pattern_bit(3, c).unwrap()).collect();
        assert_eq!(row, vec![1, 0, 1, 1, 1, 0, 1, 0]);
        let edge: Vec<u8> = (0..8).map(|c| l.pattern_bit(0, c).unwrap()).collect();
        assert_eq!(edge, vec![1, 1, 1, 1, 1, 1, 1, 0]);
        assert_eq!(l.pattern_bit(l.dim - 4, 3), Some(1));
        assert_eq!(l.pattern_bit(3, l.dim - 8), Some(0));
    }

    #[test]
    fn version_bounds() {
        assert!(Layout::get(0).is_err());
        assert!(Layout::get(41).is_err());
    }
}
