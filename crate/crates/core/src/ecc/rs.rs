//! Systematic Reed-Solomon encoder and Berlekamp-Massey/Forney decoder over
//! a [`GaloisField`]. Codewords are `data ‖ parity`, highest degree first,
//! with generator roots α^0 … α^(e-1).

use super::gf::GaloisField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsFailure {
    /// More errors than the code can correct were detected.
    TooManyErrors,
}

#[derive(Debug, Clone)]
pub struct ReedSolomon {
    field: &'static GaloisField,
    /// Generator polynomial, highest degree first, monic.
    generator: Vec<u8>,
}

impl ReedSolomon {
    pub fn new(field: &'static GaloisField, parity_len: usize) -> Self {
        assert!(parity_len > 0 && parity_len < field.order(), "bad parity length");
        let mut g = vec![1u8];
        for i in 0..parity_len {
            // g(x) *= (x - α^i)
            let root = field.pow_alpha(i as i64);
            let mut next = vec![0u8; g.len() + 1];
            for (j, &c) in g.iter().enumerate() {
                next[j] ^= c;
                next[j + 1] ^= field.mul(c, root);
            }
            g = next;
        }
        Self { field, generator: g }
    }

    pub fn parity_len(&self) -> usize {
        self.generator.len() - 1
    }

    /// Parity symbols for `data`: the remainder of data(x)·x^e mod g(x).
    pub fn encode(&self, data: &[u8]) -> Vec<u8> {
        let e = self.parity_len();
        let mut rem = vec![0u8; e];
        for &d in data {
            let factor = d ^ rem[0];
            rem.rotate_left(1);
            rem[e - 1] = 0;
            if factor != 0 {
                for (r, &g) in rem.iter_mut().zip(&self.generator[1..]) {
                    *r ^= self.field.mul(g, factor);
                }
            }
        }
        rem
    }

    /// Syndromes S_j = c(α^j), j = 0..e.
    pub fn syndromes(&self, codeword: &[u8]) -> Vec<u8> {
        (0..self.parity_len())
            .map(|j| self.field.eval_high_first(codeword, self.field.pow_alpha(j as i64)))
            .collect()
    }

    /// Corrects `codeword` in place. Returns the number of corrected symbols.
    pub fn decode(&self, codeword: &mut [u8]) -> Result<usize, RsFailure> {
        let f = self.field;
        let e = self.parity_len();
        let n = codeword.len();
        assert!(n > e && n < f.order(), "codeword length out of range");
        let synd = self.syndromes(codeword);
        if synd.iter().all(|&s| s == 0) {
            return Ok(0);
        }

        // Berlekamp-Massey; polynomials lowest degree first.
        let mut lambda = vec![1u8];
        let mut prev = vec![1u8];
        let mut l = 0usize;
        let mut m = 1usize;
        let mut b = 1u8;
        for k in 0..e {
            let mut d = synd[k];
            for i in 1..=l.min(lambda.len() - 1) {
                d ^= f.mul(lambda[i], synd[k - i]);
            }
            if d == 0 {
                m += 1;
                continue;
            }
            let coef = f.div(d, b);
            let mut next = lambda.clone();
            if next.len() < prev.len() + m {
                next.resize(prev.len() + m, 0);
            }
            for (i, &p) in prev.iter().enumerate() {
                next[i + m] ^= f.mul(coef, p);
            }
            if 2 * l <= k {
                prev = std::mem::replace(&mut lambda, next);
                l = k + 1 - l;
                b = d;
                m = 1;
            } else {
                lambda = next;
                m += 1;
            }
        }
        while lambda.len() > 1 && *lambda.last().unwrap() == 0 {
            lambda.pop();
        }
        let degree = lambda.len() - 1;
        if degree == 0 || degree > e / 2 || degree != l {
            return Err(RsFailure::TooManyErrors);
        }

        // Chien search over the positions actually present in the codeword.
        // Position p (power of x) is index n-1-p.
        let mut powers = Vec::with_capacity(degree);
        for p in 0..n {
            if f.eval_low_first(&lambda, f.pow_alpha(-(p as i64))) == 0 {
                powers.push(p);
            }
        }
        if powers.len() != degree {
            return Err(RsFailure::TooManyErrors);
        }

        // Ω(x) = S(x)Λ(x) mod x^e
        let mut omega = vec![0u8; e];
        for (i, &s) in synd.iter().enumerate() {
            for (j, &lc) in lambda.iter().enumerate() {
                if i + j < e {
                    omega[i + j] ^= f.mul(s, lc);
                }
            }
        }
        // Formal derivative: odd-degree terms survive in characteristic 2.
        let dlambda: Vec<u8> = (1..lambda.len())
            .map(|i| if i % 2 == 1 { lambda[i] } else { 0 })
            .collect();

        for &p in &powers {
            let x = f.pow_alpha(p as i64);
            let x_inv = f.inv(x);
            let denom = f.eval_low_first(&dlambda, x_inv);
            if denom == 0 {
                return Err(RsFailure::TooManyErrors);
            }
            let mag = f.mul(x, f.div(f.eval_low_first(&omega, x_inv), denom));
            codeword[n - 1 - p] ^= mag;
        }
        if self.syndromes(codeword).iter().any(|&s| s != 0) {
            return Err(RsFailure::TooManyErrors);
        }
        Ok(degree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Reference encoder by explicit long division of data(x)·x^e by g(x).
    fn reference_parity(gen: &[u8], data: &[u8]) -> Vec<u8> {
        let f = GaloisField::gf256();
        let e = gen.len() - 1;
        let mut msg: Vec<u8> = data.to_vec();
        msg.extend(std::iter::repeat(0).take(e));
        for i in 0..data.len() {
            let c = msg[i];
            if c != 0 {
                for (j, &g) in gen.iter().enumerate() {
                    msg[i + j] ^= f.mul(g, c);
                }
            }
        }
        msg[data.len()..].to_vec()
    }

    #[test]
    fn encode_matches_long_division() {
        let rs = ReedSolomon::new(GaloisField::gf256(), 10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for len in [1usize, 5, 19, 100] {
            let data: Vec<u8> = (0..len).map(|_| rng.random()).collect();
            assert_eq!(rs.encode(&data), reference_parity(&rs.generator, &data));
        }
    }

    #[test]
    fn qr_version1_m_known_vector() {
        // "HELLO WORLD" at 1-M from the QR literature.
        let data = [
            0x20, 0x5b, 0x0b, 0x78, 0xd1, 0x72, 0xdc, 0x4d, 0x43, 0x40, 0xec, 0x11, 0xec, 0x11,
            0xec, 0x11,
        ];
        let rs = ReedSolomon::new(GaloisField::gf256(), 10);
        assert_eq!(
            rs.encode(&data),
            vec![0xc4, 0x23, 0x27, 0x77, 0xeb, 0xd7, 0xe7, 0xe2, 0x5d, 0x17]
        );
    }

    #[test]
    fn codeword_has_zero_syndromes() {
        let rs = ReedSolomon::new(GaloisField::gf256(), 8);
        let data: Vec<u8> = (0..40).collect();
        let mut cw = data.clone();
        cw.extend(rs.encode(&data));
        assert!(rs.syndromes(&cw).iter().all(|&s| s == 0));
    }

    #[test]
    fn exhaustive_small_block_corrections() {
        // Every single and double error pattern on positions of a 12-symbol
        // GF(16) codeword with 4 parity symbols is corrected.
        let f = GaloisField::gf16();
        let rs = ReedSolomon::new(f, 4);
        let data = [3u8, 7, 1, 0, 15, 9, 2, 4];
        let mut cw = data.to_vec();
        cw.extend(rs.encode(&data));
        for i in 0..cw.len() {
            for j in i + 1..cw.len() {
                for (ei, ej) in [(1u8, 5u8), (15, 15), (8, 2)] {
                    let mut bad = cw.clone();
                    bad[i] ^= ei;
                    bad[j] ^= ej;
                    assert_eq!(rs.decode(&mut bad), Ok(2));
                    assert_eq!(bad, cw);
                }
            }
        }
    }

    #[test]
    fn too_many_errors_is_reported_or_detected() {
        let rs = ReedSolomon::new(GaloisField::gf256(), 6);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data: Vec<u8> = (0..30).map(|_| rng.random()).collect();
        let mut cw = data.clone();
        cw.extend(rs.encode(&data));
        let mut failures = 0;
        for _ in 0..200 {
            let mut bad = cw.clone();
            let mut pos: Vec<usize> = (0..bad.len()).collect();
            for k in 0..4 {
                let j = rng.random_range(k..pos.len());
                pos.swap(k, j);
                bad[pos[k]] ^= rng.random_range(1..=255u8);
            }
            match rs.decode(&mut bad) {
                Err(_) => failures += 1,
                Ok(_) => assert!(rs.syndromes(&bad).iter().all(|&s| s == 0)),
            }
        }
        assert!(failures > 150);
    }
}
