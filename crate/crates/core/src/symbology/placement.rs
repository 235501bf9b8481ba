//! Mapping between a layer's bit stream and its data modules.

use super::layout::Layout;

const WINDOW: usize = 8;
const REPAIR_TRIES: usize = 64;

/// SplitMix64 generator; small, splittable and identical on every platform.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform draw from `0..bound` by rejection.
    pub fn below(&mut self, bound: usize) -> usize {
        let n = bound as u64;
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }
}

/// `order[i]` is the index (into [`Layout::data_positions`]) of the module
/// carrying stream bit `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    order: Vec<usize>,
}

impl Placement {
    pub fn natural(layout: &Layout) -> Self {
        Self {
            order: (0..layout.data_module_count()).collect(),
        }
    }

    /// Seeded permutation of the data modules. A repair pass then swaps
    /// entries so that consecutive stream bits avoid sharing an 8×8 window
    /// wherever an alternative exists.
    pub fn randomized(layout: &Layout, seed: u16) -> Self {
        let n = layout.data_module_count();
        let mut rng = SplitMix64::new(((seed as u64) << 8) ^ layout.version as u64 ^ 0x4849_515f_504c_4143);
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.below(i + 1);
            order.swap(i, j);
        }
        let pos = layout.data_positions();
        let window = |idx: usize| {
            let (r, c) = pos[idx];
            (r / WINDOW, c / WINDOW)
        };
        for k in 0..n.saturating_sub(2) {
            let w = window(order[k]);
            if window(order[k + 1]) != w {
                continue;
            }
            for _ in 0..REPAIR_TRIES {
                let j = k + 2 + rng.below(n - k - 2);
                if window(order[j]) != w {
                    order.swap(k + 1, j);
                    break;
                }
            }
        }
        Self { order }
    }

    pub fn build(layout: &Layout, randomized: bool, seed: u16) -> Self {
        if randomized {
            Self::randomized(layout, seed)
        } else {
            Self::natural(layout)
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `inverse()[m]` is the stream bit carried by data module `m`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.order.len()];
        for (i, &m) in self.order.iter().enumerate() {
            inv[m] = i;
        }
        inv
    }

    /// Writes `stream` into a row-major `dim×dim` bit matrix.
    pub fn scatter(&self, layout: &Layout, stream: &[u8], matrix: &mut [u8]) {
        let pos = layout.data_positions();
        for (i, &b) in stream.iter().enumerate() {
            let (r, c) = pos[self.order[i]];
            matrix[r * layout.dim + c] = b;
        }
    }

    /// Reads the stream back out of a per-module value grid.
    pub fn gather<T: Copy>(&self, layout: &Layout, grid: &[T]) -> Vec<T> {
        let pos = layout.data_positions();
        self.order
            .iter()
            .map(|&m| {
                let (r, c) = pos[m];
                grid[r * layout.dim + c]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // First outputs for seed 0 from the reference implementation.
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xe220_a839_7b1d_cdaf);
        assert_eq!(r.next_u64(), 0x6e78_9e6a_a1b9_65f4);
    }

    #[test]
    fn randomized_is_a_permutation_with_inverse() {
        let l = Layout::get(9).unwrap();
        let p = Placement::randomized(l, 77);
        let inv = p.inverse();
        for (i, &m) in p.order().iter().enumerate() {
            assert_eq!(inv[m], i);
        }
        let mut sorted = p.order().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..l.data_module_count()).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        let l = Layout::get(5).unwrap();
        assert_eq!(Placement::randomized(l, 1), Placement::randomized(l, 1));
        assert_ne!(Placement::randomized(l, 1), Placement::randomized(l, 2));
    }

    #[test]
    fn consecutive_bits_rarely_share_a_window() {
        let l = Layout::get(22).unwrap();
        let p = Placement::randomized(l, 9);
        let pos = l.data_positions();
        let same = p
            .order()
            .windows(2)
            .filter(|w| {
                let (a, b) = (pos[w[0]], pos[w[1]]);
                (a.0 / 8, a.1 / 8) == (b.0 / 8, b.1 / 8)
            })
            .count();
        assert!(same <= 1, "{same} adjacent pairs share a window");
    }

    #[test]
    fn scatter_then_gather() {
        let l = Layout::get(3).unwrap();
        let p = Placement::randomized(l, 3);
        let stream: Vec<u8> = (0..l.data_module_count()).map(|i| (i * 7 % 3 == 0) as u8).collect();
        let mut m = vec![0u8; l.dim * l.dim];
        p.scatter(l, &stream, &mut m);
        assert_eq!(p.gather(l, &m), stream);
    }
}
