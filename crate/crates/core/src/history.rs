//! Histories (epochs with ball routes) and the forward recursion that turns a
//! radial transition law into the probability of a simple cylinder set.

use num_rational::Rational64;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::padic::{Ball, Group, RadialProfile, Side};

/// A finite list of `(time, ball)` constraints with `t_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct History {
    #[serde(serialize_with = "serialize_times")]
    epochs: Vec<Rational64>,
    route: Vec<Ball>,
}

fn serialize_times<S: serde::Serializer>(times: &[Rational64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(times.iter().map(|t| t.to_string()))
}

impl History {
    pub fn new(epochs: Vec<Rational64>, route: Vec<Ball>) -> Result<Self> {
        if epochs.is_empty() || epochs.len() != route.len() {
            return domain("a history needs equally many epochs and route balls, at least one");
        }
        if epochs[0] != Rational64::from_integer(0) {
            return domain("the first epoch must be 0");
        }
        if epochs.windows(2).any(|w| w[0] >= w[1]) {
            return domain("epochs must be strictly increasing");
        }
        let p = route[0].p();
        if route.iter().any(|b| b.p() != p) {
            return domain("route balls must share one prime");
        }
        Ok(History { epochs, route })
    }

    pub fn epochs(&self) -> &[Rational64] {
        &self.epochs
    }

    pub fn route(&self) -> &[Ball] {
        &self.route
    }

    /// Number of constrained times after `t_0`.
    pub fn len(&self) -> usize {
        self.epochs.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Finest radius exponent on the route.
    pub fn finest_radius_exp(&self) -> u32 {
        self.route.iter().map(Ball::radius_exp).max().unwrap_or(0)
    }
}

/// `(v * k)(x) = sum_y v(y) k(x - y)` on `G_L` for a radial `k` given per element.
///
/// Uses coset sums: the `y` with `val(x - y) = i` are those congruent to `x`
/// modulo `p^i` but not modulo `p^{i+1}`. Cost is `O(p^L L)`.
pub fn radial_convolve(group: &Group, v: &[f64], kernel: &RadialProfile) -> Vec<f64> {
    let p = group.p() as usize;
    let levels = group.m() as usize;
    // sums[i][c] = sum of v over residues congruent to c mod p^i.
    let mut sums: Vec<Vec<f64>> = vec![Vec::new(); levels + 1];
    sums[levels] = v.to_vec();
    for i in (0..levels).rev() {
        let size = p.pow(i as u32);
        let finer = &sums[i + 1];
        sums[i] = (0..size).map(|c| (0..p).map(|d| finer[c + d * size]).sum()).collect();
    }
    let k = kernel.classes();
    (0..v.len())
        .map(|x| {
            let mut acc = 0.0;
            for i in 0..=levels {
                let here = sums[i][x % p.pow(i as u32)];
                let deeper = if i == levels { 0.0 } else { sums[i + 1][x % p.pow(i as u32 + 1)] };
                acc += k[i] * (here - deeper);
            }
            acc
        })
        .collect()
}

/// Total mass surviving the route: start at `[0]`, and for each epoch convolve
/// with `kernel(i)` (the per-element law of the increment over `(t_{i-1}, t_i]`)
/// then drop everything outside the route ball. Zero when the first ball
/// misses the origin.
pub(crate) fn forward_mass(
    group: &Group,
    history: &History,
    mut kernel: impl FnMut(usize) -> Result<RadialProfile>,
) -> Result<f64> {
    if !history.route()[0].contains_zero() {
        return Ok(0.0);
    }
    let mut mass = vec![0.0; group.modulus() as usize];
    mass[0] = 1.0;
    for (i, ball) in history.route().iter().enumerate().skip(1) {
        let step = kernel(i)?;
        debug_assert_eq!(step.side(), Side::Group);
        mass = radial_convolve(group, &mass, &step);
        for (x, w) in mass.iter_mut().enumerate() {
            if !ball.contains_residue(x as u64) {
                *w = 0.0;
            }
        }
    }
    Ok(mass.iter().sum())
}
