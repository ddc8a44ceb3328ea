use serde::{Deserialize, Serialize};

use super::Group;
use crate::error::{domain, Result};

/// Which group a radial profile lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// `G_m`, with Haar measure of total mass one.
    Group,
    /// The dual of `G_m`, with counting measure.
    Dual,
}

/// A function on `G_m` or its dual that depends only on the norm.
///
/// Values are stored per valuation class of the residue: index `v < m` is the
/// shell of residues with valuation `v`, index `m` the zero class. On the group
/// side class `v` has norm `p^{-v}`; on the dual side it has norm `p^{m-v}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    group: Group,
    side: Side,
    classes: Vec<f64>,
}

impl RadialProfile {
    /// Builds a profile from shell values `v = 0..m-1` and the zero-class value.
    pub fn new(group: Group, side: Side, shells: Vec<f64>, zero: f64) -> Result<Self> {
        if shells.len() != group.m() as usize {
            return domain(format!("expected {} shell values, got {}", group.m(), shells.len()));
        }
        let mut classes = shells;
        classes.push(zero);
        Ok(Self { group, side, classes })
    }

    /// Builds a profile from a function of the valuation class index `0..=m`.
    pub fn from_fn(group: Group, side: Side, f: impl FnMut(u32) -> f64) -> Self {
        let classes = (0..=group.m()).map(f).collect();
        Self { group, side, classes }
    }

    /// Builds a dual profile from a function of the norm exponent `k` (`|y| = p^k`,
    /// `k = 0` for the zero class).
    pub fn dual_from_norm_exp(group: Group, mut f: impl FnMut(u32) -> f64) -> Self {
        let m = group.m();
        Self::from_fn(group, Side::Dual, |v| f(m - v))
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn level(&self) -> u32 {
        self.group.m()
    }

    /// Values indexed by valuation class, zero class last.
    pub fn classes(&self) -> &[f64] {
        &self.classes
    }

    pub fn shells(&self) -> &[f64] {
        &self.classes[..self.group.m() as usize]
    }

    pub fn zero_value(&self) -> f64 {
        self.classes[self.group.m() as usize]
    }

    pub fn at_class(&self, v: u32) -> f64 {
        self.classes[v as usize]
    }

    /// Value on the dual class of norm `p^k` (`k = 0` is the zero class).
    pub fn at_norm_exp(&self, k: u32) -> f64 {
        debug_assert_eq!(self.side, Side::Dual);
        self.classes[(self.group.m() - k) as usize]
    }

    /// Value at a reduced residue.
    pub fn value(&self, residue: u64) -> f64 {
        self.classes[self.group.class_of(residue) as usize]
    }

    /// Measure of each valuation class: Haar on the group, counting on the dual.
    pub fn class_measure(&self, v: u32) -> f64 {
        let size = self.group.class_size(v) as f64;
        match self.side {
            Side::Group => size / self.group.modulus() as f64,
            Side::Dual => size,
        }
    }

    /// `value * measure` per class, the class masses of a density.
    pub fn class_masses(&self) -> Vec<f64> {
        (0..=self.group.m()).map(|v| self.at_class(v) * self.class_measure(v)).collect()
    }

    pub fn integral(&self) -> f64 {
        self.class_masses().iter().sum()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        (0..=self.group.m()).map(|v| self.at_class(v).powi(2) * self.class_measure(v)).sum()
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self { group: self.group, side: self.side, classes: self.classes.iter().map(|&x| f(x)).collect() }
    }

    /// Per-element values of a density on the group: `value * p^{-m}`.
    pub fn to_pmf(&self) -> Self {
        let scale = 1.0 / self.group.modulus() as f64;
        self.map(|x| x * scale)
    }

    /// Expands to one value per residue.
    pub fn to_dense(&self) -> Vec<f64> {
        (0..self.group.modulus()).map(|r| self.value(r)).collect()
    }

    /// Forward transform `(F f)([[y]]) = int_{G_m} chi(x y) f([x]) d[x]`.
    ///
    /// Writes `f` as a combination of ball indicators and applies
    /// `int_{val >= v} chi(x y) = p^{-v} 1[|y| <= p^v]`.
    pub fn fourier(&self) -> Result<Self> {
        if self.side != Side::Group {
            return domain("forward transform expects a profile on G_m");
        }
        let m = self.group.m();
        let p = self.group.p() as f64;
        // coeff[v] = (f_v - f_{v-1}) p^{-v}, the weight of the ball indicator of radius p^{-v}.
        let coeff: Vec<f64> = (0..=m)
            .map(|v| {
                let prev = if v == 0 { 0.0 } else { self.at_class(v - 1) };
                (self.at_class(v) - prev) * p.powi(-(v as i32))
            })
            .collect();
        // A dual class w (norm p^{m-w}) sees balls v >= m - w; suffix sums give those.
        let mut suffix = vec![0.0; m as usize + 2];
        for v in (0..=m as usize).rev() {
            suffix[v] = suffix[v + 1] + coeff[v];
        }
        Ok(Self::from_fn(self.group, Side::Dual, |w| suffix[(m - w) as usize]))
    }

    /// Inverse transform `(F^{-1} g)([x]) = sum_{[[y]]} chi(-x y) g([[y]])`.
    ///
    /// Writes `g` as a combination of dual-ball indicators and applies
    /// `sum_{|y| <= p^k} chi(x y) = p^k 1[|x| <= p^{-k}]`.
    pub fn inverse_fourier(&self) -> Result<Self> {
        if self.side != Side::Dual {
            return domain("inverse transform expects a profile on the dual of G_m");
        }
        let m = self.group.m();
        let p = self.group.p() as f64;
        let coeff: Vec<f64> = (0..=m)
            .map(|k| {
                let next = if k == m { 0.0 } else { self.at_norm_exp(k + 1) };
                (self.at_norm_exp(k) - next) * p.powi(k as i32)
            })
            .collect();
        let mut prefix = Vec::with_capacity(m as usize + 1);
        let mut acc = 0.0;
        for c in &coeff {
            acc += c;
            prefix.push(acc);
        }
        // Group class v lies in every dual-ball image with k <= v.
        Ok(Self::from_fn(self.group, Side::Group, |v| prefix[v as usize]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grp(p: u64, m: u32) -> Group {
        Group::new(p, m).unwrap()
    }

    #[test]
    fn constant_transforms_to_delta() {
        let g = grp(3, 3);
        let one = RadialProfile::from_fn(g, Side::Group, |_| 1.0);
        let f = one.fourier().unwrap();
        assert_eq!(f.zero_value(), 1.0);
        assert!(f.shells().iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn ball_indicator_transforms() {
        // 1_{B_m(i)} has radius p^{i-m}, i.e. valuation >= m - i.
        let g = grp(2, 4);
        for i in 1..=4u32 {
            let f = RadialProfile::from_fn(g, Side::Group, |v| if v >= 4 - i { 1.0 } else { 0.0 });
            let t = f.fourier().unwrap();
            let vol = 2f64.powi(i as i32 - 4);
            for k in 0..=4u32 {
                let expect = if k <= 4 - i { vol } else { 0.0 };
                assert!((t.at_norm_exp(k) - expect).abs() < 1e-15, "i={i} k={k}");
            }
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = grp(5, 3);
        let f = RadialProfile::new(g, Side::Group, vec![0.3, -1.2, 2.5], 7.0).unwrap();
        let t = f.fourier().unwrap();
        let back = t.inverse_fourier().unwrap();
        for (a, b) in f.classes().iter().zip(back.classes()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((f.l2_norm_sq() - t.l2_norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn wrong_side_is_rejected() {
        let g = grp(2, 2);
        let f = RadialProfile::from_fn(g, Side::Dual, |_| 1.0);
        assert!(f.fourier().is_err());
        assert!(f.to_pmf().inverse_fourier().is_ok());
        assert!(RadialProfile::new(g, Side::Group, vec![1.0], 0.0).is_err());
    }
}
