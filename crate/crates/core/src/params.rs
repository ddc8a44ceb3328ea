use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest modulus `p^m` the residue representation accepts.
pub const MODULUS_CAP: u64 = 1 << 62;

/// Model parameters: the prime `p`, the precision level `m`, the exponent `b`
/// of the Vladimirov operator and the diffusion coefficient `D`.
///
/// The limit-kernel computations ignore `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    p: u64,
    m: u32,
    b: f64,
    diffusion: f64,
    #[serde(skip)]
    modulus: u64,
}

impl Params {
    pub fn new(p: u64, m: u32, b: f64, diffusion: f64) -> Result<Self> {
        if !is_prime(p) {
            return domain(format!("p = {p} is not prime"));
        }
        if m == 0 {
            return domain("precision level m must be at least 1");
        }
        let modulus = match p.checked_pow(m) {
            Some(q) if q < MODULUS_CAP => q,
            _ => return domain(format!("p^m = {p}^{m} exceeds the 2^62 representation cap")),
        };
        if !(b.is_finite() && b > 0.0) {
            return domain(format!("exponent b must be a positive real, got {b}"));
        }
        if !(diffusion.is_finite() && diffusion > 0.0) {
            return domain(format!("diffusion coefficient must be a positive real, got {diffusion}"));
        }
        Ok(Self { p, m, b, diffusion, modulus })
    }

    /// Same `p`, `b`, `D` at another precision level.
    pub fn with_level(&self, m: u32) -> Result<Self> {
        Self::new(self.p, m, self.b, self.diffusion)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    /// `p^m`, the order of `G_m`.
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn pf(&self) -> f64 {
        self.p as f64
    }

    /// `p^{mb}`.
    pub fn p_mb(&self) -> f64 {
        self.pf().powf(self.m as f64 * self.b)
    }

    /// `p^x` for a real exponent.
    pub fn pow(&self, x: f64) -> f64 {
        self.pf().powf(x)
    }

    /// Whether `b` is a whole number, in which case time scales are exact rationals.
    pub fn integral_b(&self) -> Option<u32> {
        if self.b.fract() == 0.0 && self.b <= u32::MAX as f64 {
            Some(self.b as u32)
        } else {
            None
        }
    }
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &q in &SMALL {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut a: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, a);
            }
            a = mul(a, a);
            e >>= 1;
        }
        acc
    };
    'witness: for &a in &SMALL {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Integer power `p^k` for the small exponents used in index arithmetic.
pub(crate) fn ipow(p: u64, k: u32) -> u64 {
    p.pow(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_agrees_with_trial_division() {
        let trial = |n: u64| n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d));
        for n in 0..5000 {
            assert_eq!(is_prime(n), trial(n), "n = {n}");
        }
        assert!(is_prime(2_305_843_009_213_693_951)); // 2^61 - 1
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(Params::new(4, 2, 1.0, 1.0).is_err());
        assert!(Params::new(2, 0, 1.0, 1.0).is_err());
        assert!(Params::new(2, 62, 1.0, 1.0).is_err());
        assert!(Params::new(2, 61, 1.0, 1.0).is_ok());
        assert!(Params::new(3, 2, 0.0, 1.0).is_err());
        assert!(Params::new(3, 2, 1.0, -1.0).is_err());
        assert!(Params::new(3, 2, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn integral_exponent_detection() {
        assert_eq!(Params::new(2, 3, 2.0, 1.0).unwrap().integral_b(), Some(2));
        assert_eq!(Params::new(2, 3, 0.5, 1.0).unwrap().integral_b(), None);
    }
}
