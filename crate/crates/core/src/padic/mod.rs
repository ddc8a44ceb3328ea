//! Arithmetic on `G_m = Z_p / p^m Z_p` and its Pontryagin dual
//! `p^{-m} Z_p / Z_p`.
//!
//! Both groups are represented by residues in `[0, p^m)`. A group residue `x`
//! stands for `x + p^m Z_p`; a dual residue `r` stands for `r / p^m + Z_p`.
//! Norms, volumes and the character pairing follow from that encoding.

mod radial;

pub use radial::{RadialProfile, Side};

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::params::{ipow, Params, MODULUS_CAP};

/// p-adic valuation of a residue; the zero class has infinite valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<u32> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinite)
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}

/// The finite group `G_m` for a prime `p`, together with its dual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Group {
    p: u64,
    m: u32,
    modulus: u64,
}

impl Group {
    pub fn new(p: u64, m: u32) -> Result<Self> {
        let params = Params::new(p, m, 1.0, 1.0)?;
        Ok(params.group())
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Valuation of `residue`, or a domain error when it is not reduced.
    pub fn valuation(&self, residue: u64) -> Result<Valuation> {
        if residue >= self.modulus {
            return domain(format!("residue {residue} outside [0, {})", self.modulus));
        }
        Ok(match self.class_of(residue) {
            v if v == self.m => Valuation::Infinite,
            v => Valuation::Finite(v),
        })
    }

    /// Valuation class index in `0..=m`, where `m` is the zero class.
    /// The residue must already be reduced.
    #[inline]
    pub fn class_of(&self, residue: u64) -> u32 {
        if residue == 0 {
            return self.m;
        }
        let mut r = residue;
        let mut v = 0;
        while r.is_multiple_of(self.p) {
            r /= self.p;
            v += 1;
        }
        v
    }

    /// Number of residues in valuation class `v` (`v = m` is the zero class).
    pub fn class_size(&self, v: u32) -> u64 {
        debug_assert!(v <= self.m);
        if v == self.m {
            1
        } else {
            (self.p - 1) * ipow(self.p, self.m - v - 1)
        }
    }

    pub fn element(&self, residue: u64) -> Result<GroupElement> {
        self.valuation(residue)?;
        Ok(GroupElement { residue, group: *self })
    }

    pub fn dual_element(&self, residue: u64) -> Result<DualElement> {
        self.valuation(residue)?;
        Ok(DualElement { residue, group: *self })
    }

    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.modulus).map(|residue| GroupElement { residue, group: *self })
    }

    pub fn dual_elements(&self) -> impl Iterator<Item = DualElement> + '_ {
        (0..self.modulus).map(|residue| DualElement { residue, group: *self })
    }

    fn check_index(&self, k: u32) -> Result<()> {
        if k > self.m {
            return domain(format!("index {k} outside 0..={}", self.m));
        }
        Ok(())
    }

    /// `Vol(B_m(k))`: `p^{k-m}` for `k >= 1` and `p^{-m}` for `k = 0`.
    pub fn ball_volume(&self, k: u32) -> Result<Ratio<u64>> {
        self.check_index(k)?;
        let num = if k == 0 { 1 } else { ipow(self.p, k) };
        Ok(Ratio::new(num, self.modulus))
    }

    /// `Vol(S_m(k))`: `(1 - 1/p) p^{k-m}` for `k >= 1` and `p^{-m}` for `k = 0`.
    pub fn circle_volume(&self, k: u32) -> Result<Ratio<u64>> {
        self.check_index(k)?;
        let num = if k == 0 { 1 } else { (self.p - 1) * ipow(self.p, k - 1) };
        Ok(Ratio::new(num, self.modulus))
    }

    /// Counting-measure volume of the dual ball of radius `p^k`.
    pub fn dual_ball_volume(&self, k: u32) -> Result<Ratio<u64>> {
        self.check_index(k)?;
        Ok(Ratio::from_integer(ipow(self.p, k)))
    }

    /// Counting-measure volume of the dual circle of radius `p^k` (`1` for `k = 0`).
    pub fn dual_circle_volume(&self, k: u32) -> Result<Ratio<u64>> {
        self.check_index(k)?;
        let n = if k == 0 { 1 } else { (self.p - 1) * ipow(self.p, k - 1) };
        Ok(Ratio::from_integer(n))
    }

    /// Exact phase `(x y mod p^m) / p^m` of the pairing, as a numerator over `p^m`.
    pub fn pairing_phase(&self, x: u64, y: u64) -> u64 {
        ((x as u128 * y as u128) % self.modulus as u128) as u64
    }

    /// `<[x], [[y]]> = exp(2 pi i {x y})`.
    pub fn char_pairing(&self, x: &GroupElement, y: &DualElement) -> Result<Complex64> {
        if x.group != *self || y.group != *self {
            return Err(Error::LevelMismatch(format!(
                "pairing on G_{} of elements from G_{} and dual of G_{}",
                self.m, x.group.m, y.group.m
            )));
        }
        Ok(unit_root(self.pairing_phase(x.residue, y.residue), self.modulus))
    }

    /// `int_{B_m(i)} chi(x y) d[x] = Vol(B_m(i)) 1[|[[y]]| <= p^{m-i}]`, and
    /// `p^{-m}` for `i = 0`.
    pub fn indicator_integral(&self, i: u32, y: &DualElement) -> Result<Ratio<u64>> {
        self.check_index(i)?;
        if i == 0 {
            return Ok(Ratio::new(1, self.modulus));
        }
        let inside = y.norm_exp().is_none_or(|k| k <= self.m - i);
        if inside {
            self.ball_volume(i)
        } else {
            Ok(Ratio::from_integer(0))
        }
    }

    /// `int_{dual B_m(i)} chi(x y) d[[y]] = p^i 1[|[x]| <= p^{-i}]`.
    ///
    /// The dual ball of radius `p^0` is the single class `[[0]]`, so the value
    /// at `i = 0` is `1` under counting measure.
    pub fn dual_indicator_integral(&self, i: u32, x: &GroupElement) -> Result<Ratio<u64>> {
        self.check_index(i)?;
        let inside = x.valuation().finite().is_none_or(|v| v >= i);
        if inside {
            self.dual_ball_volume(i)
        } else {
            Ok(Ratio::from_integer(0))
        }
    }

    /// The embedding `Gamma_m`: the canonical digit expansion with indices `0..m-1`.
    pub fn gamma_embed(&self, x: &GroupElement) -> Digits {
        Digits::from_residue(x.residue, self.p, self.m)
    }
}

impl Params {
    pub fn group(&self) -> Group {
        Group { p: self.p(), m: self.m(), modulus: self.modulus() }
    }
}

/// `exp(2 pi i num / den)` with exact values on quarter turns.
pub fn unit_root(num: u64, den: u64) -> Complex64 {
    let num = num % den;
    if (num as u128 * 4).is_multiple_of(den as u128) {
        return match (num as u128 * 4 / den as u128) as u8 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    // Fold into (-1/2, 1/2] turns before scaling to keep the angle small.
    let signed = if num as u128 * 2 > den as u128 { -((den - num) as f64) } else { num as f64 };
    let (s, c) = (TAU * signed / den as f64).sin_cos();
    Complex64::new(c, s)
}

/// An element `[x]_m` of `G_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupElement {
    residue: u64,
    group: Group,
}

impl GroupElement {
    pub fn residue(&self) -> u64 {
        self.residue
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn valuation(&self) -> Valuation {
        match self.group.class_of(self.residue) {
            v if v == self.group.m => Valuation::Infinite,
            v => Valuation::Finite(v),
        }
    }

    /// `|[x]|_m = p^{-v(x)}`, and `0` on the zero class.
    pub fn norm(&self) -> f64 {
        match self.valuation() {
            Valuation::Infinite => 0.0,
            Valuation::Finite(v) => (self.group.p as f64).powi(-(v as i32)),
        }
    }

    pub fn digits(&self) -> Digits {
        self.group.gamma_embed(self)
    }

    pub fn add(&self, other: &GroupElement) -> GroupElement {
        let sum = (self.residue as u128 + other.residue as u128) % self.group.modulus as u128;
        GroupElement { residue: sum as u64, group: self.group }
    }

    pub fn neg(&self) -> GroupElement {
        let residue = if self.residue == 0 { 0 } else { self.group.modulus - self.residue };
        GroupElement { residue, group: self.group }
    }
}

/// An element `[[r / p^m]]_m` of the dual group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DualElement {
    residue: u64,
    group: Group,
}

impl DualElement {
    pub fn residue(&self) -> u64 {
        self.residue
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn valuation(&self) -> Valuation {
        match self.group.class_of(self.residue) {
            v if v == self.group.m => Valuation::Infinite,
            v => Valuation::Finite(v),
        }
    }

    /// Exponent `k` with `|[[y]]| = p^k`, `None` for the zero class.
    pub fn norm_exp(&self) -> Option<u32> {
        self.valuation().finite().map(|v| self.group.m - v)
    }

    /// `|[[y]]|_m = p^{m - v(r)}`, and `0` on the zero class.
    pub fn norm(&self) -> f64 {
        match self.norm_exp() {
            None => 0.0,
            Some(k) => (self.group.p as f64).powi(k as i32),
        }
    }
}

/// A truncated base-`p` expansion `sum a(i) p^i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Digits {
    base: u64,
    coefficients: Vec<u64>,
}

impl Digits {
    pub fn from_residue(residue: u64, base: u64, len: u32) -> Self {
        let mut r = residue;
        let coefficients = (0..len)
            .map(|_| {
                let d = r % base;
                r /= base;
                d
            })
            .collect();
        Digits { base, coefficients }
    }

    pub fn new(base: u64, coefficients: Vec<u64>) -> Result<Self> {
        if let Some(&d) = coefficients.iter().find(|&&d| d >= base) {
            return domain(format!("digit {d} not in [0, {base})"));
        }
        let fits = (coefficients.len() as u32) < 64
            && base.checked_pow(coefficients.len() as u32).is_some_and(|q| q <= MODULUS_CAP);
        if !fits {
            return domain("digit string too long for the residue representation");
        }
        Ok(Digits { base, coefficients })
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coefficients
    }

    /// `sum a(i) p^i`.
    pub fn value(&self) -> u64 {
        self.coefficients.iter().rev().fold(0, |acc, &d| acc * self.base + d)
    }

    /// p-adic absolute value of the integer `value()`.
    pub fn padic_abs(&self) -> f64 {
        padic_abs_int(self.value() as i128, self.base)
    }

    /// Most significant digit first, `:`-separated when `p > 36`.
    pub fn to_digit_string(&self) -> String {
        if self.base <= 36 {
            self.coefficients.iter().rev().map(|&d| char::from_digit(d as u32, 36).unwrap()).collect()
        } else {
            let parts: Vec<String> = self.coefficients.iter().rev().map(u64::to_string).collect();
            parts.join(":")
        }
    }
}

/// `|n|_p` for an ordinary integer viewed inside `Z_p`.
pub fn padic_abs_int(n: i128, p: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = p as i128;
    let mut n = n;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    (p as f64).powi(-v)
}

/// The ball `center + p^j Z_p` of radius `p^{-j}` in `Z_p`.
///
/// The center is stored reduced modulo `p^j`, so derived equality is equality
/// of cosets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ball {
    p: u64,
    center: u64,
    radius_exp: u32,
}

impl Ball {
    pub fn new(p: u64, center: u64, radius_exp: u32) -> Result<Self> {
        let modulus = match p.checked_pow(radius_exp) {
            Some(q) if q < MODULUS_CAP => q,
            _ => return domain(format!("ball radius p^-{radius_exp} not representable")),
        };
        Ok(Ball { p, center: center % modulus, radius_exp })
    }

    pub fn from_digits(center: &Digits, radius_exp: u32) -> Result<Self> {
        Self::new(center.base(), center.value(), radius_exp)
    }

    /// All of `Z_p`.
    pub fn whole(p: u64) -> Self {
        Ball { p, center: 0, radius_exp: 0 }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn center(&self) -> u64 {
        self.center
    }

    pub fn center_digits(&self) -> Digits {
        Digits::from_residue(self.center, self.p, self.radius_exp)
    }

    pub fn radius_exp(&self) -> u32 {
        self.radius_exp
    }

    pub fn radius(&self) -> f64 {
        (self.p as f64).powi(-(self.radius_exp as i32))
    }

    /// Haar volume `p^{-j}`.
    pub fn volume(&self) -> f64 {
        self.radius()
    }

    /// Membership of the residue of `G_m`; requires `radius_exp <= m`.
    #[inline]
    pub fn contains_residue(&self, residue: u64) -> bool {
        residue % ipow(self.p, self.radius_exp) == self.center
    }

    pub fn contains_zero(&self) -> bool {
        self.center == 0
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B({}, {}^-{})", self.center, self.p, self.radius_exp)
    }
}
