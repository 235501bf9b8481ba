//! Binary extension fields GF(2^m) for m ≤ 8, backed by log/antilog tables.

use std::sync::OnceLock;

/// A field GF(2^m) with a fixed primitive polynomial. Elements are `u8`.
#[derive(Debug, Clone)]
pub struct GaloisField {
    order: usize,
    exp: Vec<u8>,
    log: Vec<u8>,
}

impl GaloisField {
    /// Builds the tables for GF(2^bits) from a primitive polynomial given
    /// with its leading term, e.g. `0x11d` for x^8+x^4+x^3+x^2+1.
    pub fn new(bits: u32, primitive: u32) -> Self {
        assert!((2..=8).contains(&bits), "field width must be 2..=8 bits");
        let order = 1usize << bits;
        let mut exp = vec![0u8; 2 * order];
        let mut log = vec![0u8; order];
        let mut x: u32 = 1;
        for i in 0..order - 1 {
            exp[i] = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & (order as u32) != 0 {
                x ^= primitive;
            }
        }
        assert_eq!(x, 1, "polynomial {primitive:#x} is not primitive");
        for i in order - 1..2 * order {
            exp[i] = exp[i - (order - 1)];
        }
        Self { order, exp, log }
    }

    /// GF(256) with the QR primitive polynomial.
    pub fn gf256() -> &'static GaloisField {
        static F: OnceLock<GaloisField> = OnceLock::new();
        F.get_or_init(|| GaloisField::new(8, 0x11d))
    }

    /// GF(16) with x^4+x+1, used for the format field.
    pub fn gf16() -> &'static GaloisField {
        static F: OnceLock<GaloisField> = OnceLock::new();
        F.get_or_init(|| GaloisField::new(4, 0x13))
    }

    /// Number of elements, 2^m.
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    #[inline]
    pub fn div(&self, a: u8, b: u8) -> u8 {
        assert!(b != 0, "division by zero in GF(2^m)");
        if a == 0 {
            0
        } else {
            let n = self.order - 1;
            self.exp[(self.log[a as usize] as usize + n - self.log[b as usize] as usize) % n]
        }
    }

    #[inline]
    pub fn inv(&self, a: u8) -> u8 {
        self.div(1, a)
    }

    /// α^e for any (possibly negative) exponent.
    #[inline]
    pub fn pow_alpha(&self, e: i64) -> u8 {
        let n = (self.order - 1) as i64;
        self.exp[e.rem_euclid(n) as usize]
    }

    #[inline]
    pub fn log(&self, a: u8) -> usize {
        assert!(a != 0, "log of zero");
        self.log[a as usize] as usize
    }

    /// Evaluates a polynomial stored lowest degree first.
    pub fn eval_low_first(&self, poly: &[u8], x: u8) -> u8 {
        poly.iter().rev().fold(0u8, |acc, &c| self.mul(acc, x) ^ c)
    }

    /// Evaluates a polynomial stored highest degree first.
    pub fn eval_high_first(&self, poly: &[u8], x: u8) -> u8 {
        poly.iter().fold(0u8, |acc, &c| self.mul(acc, x) ^ c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf256_inverse_table() {
        let f = GaloisField::gf256();
        for a in 1..=255u8 {
            assert_eq!(f.mul(a, f.inv(a)), 1);
        }
    }

    #[test]
    fn gf16_is_a_field() {
        let f = GaloisField::gf16();
        for a in 1..16u8 {
            for b in 1..16u8 {
                let p = f.mul(a, b);
                assert!(p < 16 && p != 0);
                assert_eq!(f.div(p, b), a);
            }
        }
    }

    #[test]
    fn mul_matches_carryless_reduction() {
        let f = GaloisField::gf256();
        let slow = |mut a: u32, mut b: u32| {
            let mut r = 0u32;
            while b != 0 {
                if b & 1 != 0 {
                    r ^= a;
                }
                a <<= 1;
                if a & 0x100 != 0 {
                    a ^= 0x11d;
                }
                b >>= 1;
            }
            r as u8
        };
        for a in (0..=255u32).step_by(7) {
            for b in 0..=255u32 {
                assert_eq!(f.mul(a as u8, b as u8), slow(a, b));
            }
        }
    }
}
