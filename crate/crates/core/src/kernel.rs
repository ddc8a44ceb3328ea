//! Spectral data of Brownian motion on `Z_p`.
//!
//! The characteristic function is `exp(-D (|y|^b - 1/beta) t)` on the dual
//! `Q_p / Z_p`, so every radial quantity (ball masses, densities, moments) is a
//! finite or rapidly convergent sum over dual shells.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use num_rational::Rational64;
use num_traits::ToPrimitive;
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::error::{domain, precondition, Result};
use crate::history::{forward_mass, History};
use crate::padic::{Group, RadialProfile, Side};
use crate::params::Params;

/// `beta = (p^{b+1} - 1) / (p^b (p - 1))`.
pub fn beta(p: u64, b: f64) -> f64 {
    let pf = p as f64;
    let pb = pf.powf(b);
    (pb * pf - 1.0) / (pb * (pf - 1.0))
}

/// Value given to the symbol at the trivial character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolConvention {
    /// `symbol(0) = 0`: the characteristic function is `1` at `[[0]]` and mass is conserved.
    #[default]
    Conservative,
    /// `symbol(0) = -1/beta`, reading `|[[0]]| = 0` literally.
    Literal,
}

/// A value computed from a truncated series, with a bound on what was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncated {
    pub value: f64,
    pub tail_bound: f64,
}

/// Radial heat kernel of the limit process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitKernel {
    p: u64,
    b: f64,
    diffusion: f64,
    beta: f64,
    convention: SymbolConvention,
}

/// Stop adding shells once a term falls below this.
const TERM_FLOOR: f64 = 1e-16;

impl LimitKernel {
    pub fn new(params: &Params) -> Self {
        Self::with_convention(params, SymbolConvention::Conservative)
    }

    pub fn with_convention(params: &Params, convention: SymbolConvention) -> Self {
        LimitKernel {
            p: params.p(),
            b: params.b(),
            diffusion: params.diffusion(),
            beta: beta(params.p(), params.b()),
            convention,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn convention(&self) -> SymbolConvention {
        self.convention
    }

    /// `|y|^b - 1/beta` on the dual shell of norm `p^k`; see [`SymbolConvention`] for `k = 0`.
    pub fn symbol(&self, k: u32) -> f64 {
        if k == 0 {
            return match self.convention {
                SymbolConvention::Conservative => 0.0,
                SymbolConvention::Literal => -1.0 / self.beta,
            };
        }
        (self.p as f64).powf(k as f64 * self.b) - 1.0 / self.beta
    }

    /// Smallest nonzero symbol value, `p^b - 1/beta`.
    pub fn spectral_gap(&self) -> f64 {
        self.symbol(1)
    }

    /// `phi(t, [[y]]) = exp(-D symbol(k) t)` for `|[[y]]| = p^k`.
    pub fn char_function(&self, t: f64, k: u32) -> f64 {
        (-self.diffusion * self.symbol(k) * t).exp()
    }

    // (p^k - p^{k-1}) phi(t, k), the total characteristic mass of dual shell k >= 1.
    fn shell_term(&self, t: f64, k: u32) -> f64 {
        let pf = self.p as f64;
        (pf - 1.0) * pf.powi(k as i32 - 1) * self.char_function(t, k)
    }

    /// `P(Y_t in p^j Z_p) = p^{-j} (phi_0 + sum_{k=1}^{j} (p^k - p^{k-1}) phi_k)`.
    pub fn ball_mass(&self, j: u32, t: f64) -> f64 {
        let inner: f64 = (1..=j).map(|k| self.shell_term(t, k)).sum();
        (self.p as f64).powi(-(j as i32)) * (self.char_function(t, 0) + inner)
    }

    /// Density of `Y_t` on the circle `|x| = p^{-j}`:
    /// `phi_0 + sum_{k=1}^{j} (p^k - p^{k-1}) phi_k - p^j phi_{j+1}`.
    pub fn radial_density(&self, j: u32, t: f64) -> f64 {
        let inner: f64 = (1..=j).map(|k| self.shell_term(t, k)).sum();
        self.char_function(t, 0) + inner - (self.p as f64).powi(j as i32) * self.char_function(t, j + 1)
    }

    /// Sum of `shell_term(t, k)` for `k > from`, stopped once a term is below
    /// `1e-16` and the terms are shrinking. Successive ratios decrease in `k`,
    /// so the dropped part is at most a geometric series.
    pub fn shell_tail(&self, t: f64, from: u32) -> Truncated {
        let mut value = 0.0;
        let mut k = from + 1;
        loop {
            let term = self.shell_term(t, k);
            let next = self.shell_term(t, k + 1);
            value += term;
            if term == 0.0 {
                return Truncated { value, tail_bound: 0.0 };
            }
            let ratio = next / term;
            if term < TERM_FLOOR && ratio < 1.0 {
                return Truncated { value, tail_bound: next / (1.0 - ratio) };
            }
            k += 1;
        }
    }

    /// Density at the origin, the supremum of the radial density.
    pub fn density_at_zero(&self, t: f64) -> Truncated {
        let tail = self.shell_tail(t, 0);
        Truncated { value: self.char_function(t, 0) + tail.value, tail_bound: tail.tail_bound }
    }

    /// Densities and ball masses for `j = 0..=max_j`.
    pub fn table(&self, t: f64, max_j: u32) -> RadialKernel {
        let density = (0..=max_j).map(|j| self.radial_density(j, t)).collect();
        let ball_mass: Vec<f64> = (0..=max_j + 1).map(|j| self.ball_mass(j, t)).collect();
        RadialKernel { t, density, ball_mass }
    }

    /// `E[|Y_t|^r] = sum_j p^{-jr} (B_j - B_{j+1})`, truncated at the first `J`
    /// with `p^{-Jr} < tail_tol`; the remaining mass `B_J` bounds the tail.
    pub fn limit_moment(&self, t: f64, r: f64, tail_tol: f64) -> Result<Truncated> {
        if !(r > 0.0 && r < self.b) {
            return domain(format!("moment order r = {r} must lie in (0, {})", self.b));
        }
        if tail_tol.is_nan() || tail_tol <= 0.0 {
            return domain("tail tolerance must be positive");
        }
        let pf = self.p as f64;
        let mut value = 0.0;
        let mut j = 0u32;
        let mut upper = self.ball_mass(0, t);
        while pf.powf(-(j as f64) * r) >= tail_tol {
            let lower = self.ball_mass(j + 1, t);
            value += pf.powf(-(j as f64) * r) * (upper - lower);
            upper = lower;
            j += 1;
        }
        Ok(Truncated { value, tail_bound: pf.powf(-(j as f64) * r) * upper })
    }

    /// Density on `Q_p` (no restriction to `Z_p`) at `|x| = p^{-j}`:
    /// `sum_{k <= j} p^k (exp(-D t p^{kb}) - exp(-D t p^{(k+1)b}))`.
    pub fn qp_density(&self, j: i32, t: f64, tail_tol: f64) -> Truncated {
        let pf = self.p as f64;
        // Each dropped term is at most p^k, so dropping k < start costs p^start / (p - 1).
        let start = ((tail_tol * (pf - 1.0)).ln() / pf.ln()).floor() as i32;
        let start = start.min(j);
        let dt = self.diffusion * t;
        let pb1 = pf.powf(self.b) - 1.0;
        let value = (start..=j)
            .map(|k| {
                let a = dt * pf.powf(k as f64 * self.b);
                // exp(-a) - exp(-a p^b) without cancellation for small a.
                pf.powi(k) * (-a).exp() * -(-a * pb1).exp_m1()
            })
            .sum();
        Truncated { value, tail_bound: pf.powi(start) / (pf - 1.0) }
    }

    /// Per-element law of `Y_t` reduced modulo `p^M`, as a radial profile on `G_M`.
    ///
    /// Off the zero coset the density is constant on each coset; the zero
    /// coset carries the ball mass.
    pub fn coset_law(&self, t: f64, group: &Group) -> RadialProfile {
        let m = group.m();
        let vol = 1.0 / group.modulus() as f64;
        RadialProfile::from_fn(*group, Side::Group, |v| {
            if v == m {
                self.ball_mass(m, t)
            } else {
                self.radial_density(v, t) * vol
            }
        })
    }

    /// Total variation distance to Haar measure over cosets of `p^j Z_p`.
    pub fn equilibrium_tv(&self, t: f64, j: u32) -> f64 {
        let pf = self.p as f64;
        let vol = pf.powi(-(j as i32));
        let shells: f64 = (0..j)
            .map(|v| {
                let count = (pf - 1.0) * pf.powi((j - v - 1) as i32);
                count * vol * (self.radial_density(v, t) - 1.0).abs()
            })
            .sum();
        0.5 * (shells + (self.ball_mass(j, t) - vol).abs())
    }
}

/// A tabulated radial kernel at a fixed time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialKernel {
    pub t: f64,
    /// Density on `|x| = p^{-j}`, `j = 0..=J`.
    pub density: Vec<f64>,
    /// `P(|Y_t| <= p^{-j})`, `j = 0..=J+1`.
    pub ball_mass: Vec<f64>,
}

impl RadialKernel {
    /// CSV with columns `j,density,ballMass,tailBound`; `tailBound` is the mass
    /// strictly inside the row's circle, i.e. what a table cut at that row leaves out.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,density,ballMass,tailBound\n");
        for (j, d) in self.density.iter().enumerate() {
            let _ = writeln!(out, "{j},{d},{},{}", self.ball_mass[j], self.ball_mass[j + 1]);
        }
        out
    }
}

/// `P(C(h))` for the limit process, computed exactly on cosets of `p^M Z_p`.
///
/// Reduction modulo `p^M` is a homomorphism, so the reduced process is a
/// random walk on `G_M` whose increment law is [`LimitKernel::coset_law`].
/// Any `M` at least the finest route radius gives the same answer.
pub fn cylinder_prob_limit(h: &History, params: &Params, resolution: u32) -> Result<f64> {
    cylinder_prob_limit_with(h, &LimitKernel::new(params), resolution)
}

pub fn cylinder_prob_limit_with(h: &History, kernel: &LimitKernel, resolution: u32) -> Result<f64> {
    if h.finest_radius_exp() > resolution {
        return precondition(format!(
            "route radius p^-{} is finer than resolution p^-{resolution}",
            h.finest_radius_exp()
        ));
    }
    if h.route()[0].p() != kernel.p {
        return domain("history and kernel use different primes");
    }
    let group = Params::new(kernel.p, resolution.max(1), kernel.b, kernel.diffusion)?.group();
    let epochs = h.epochs();
    forward_mass(&group, h, |i| {
        let dt = (epochs[i] - epochs[i - 1]).to_f64().unwrap_or(f64::NAN);
        Ok(kernel.coset_law(dt, &group))
    })
}

/// Read-mostly cache of kernel tables keyed by exact time.
///
/// Each entry is computed once; concurrent readers of the same key wait for
/// that single computation.
#[derive(Debug, Default)]
pub struct KernelCache {
    entries: RwLock<HashMap<CacheKey, Arc<OnceLock<Arc<RadialKernel>>>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    p: u64,
    b: u64,
    diffusion: u64,
    convention: SymbolConvention,
    t: Rational64,
    max_j: u32,
}

impl KernelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, kernel: &LimitKernel, t: Rational64, max_j: u32) -> Arc<RadialKernel> {
        let key = CacheKey {
            p: kernel.p,
            b: kernel.b.to_bits(),
            diffusion: kernel.diffusion.to_bits(),
            convention: kernel.convention,
            t: t.reduced(),
            max_j,
        };
        let cell = {
            let read = self.entries.read();
            read.get(&key).cloned()
        };
        let cell = cell.unwrap_or_else(|| self.entries.write().entry(key).or_default().clone());
        cell.get_or_init(|| Arc::new(kernel.table(t.to_f64().unwrap_or(f64::NAN), max_j))).clone()
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::Ball;

    fn kernel(p: u64, b: f64) -> LimitKernel {
        LimitKernel::new(&Params::new(p, 1, b, 1.0).unwrap())
    }

    #[test]
    fn beta_values() {
        assert!((beta(2, 1.0) - 1.5).abs() < 1e-15);
        assert!((beta(3, 1.0) - 4.0 / 3.0).abs() < 1e-15);
        for p in [2u64, 3, 5, 7] {
            for b in [0.5, 1.0, 2.0, 3.0] {
                let bt = beta(p, b);
                assert!(bt - 1.0 > 0.0 && bt - 1.0 < 1.0);
                let ratio = bt / (p as f64).powf(b);
                assert!(ratio > 0.0 && ratio < 1.0);
            }
        }
    }

    #[test]
    fn symbol_and_char_function() {
        let k = kernel(2, 1.0);
        assert_eq!(k.symbol(0), 0.0);
        assert!((k.symbol(1) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(k.char_function(0.7, 0), 1.0);
        assert!((k.char_function(1.0, 1) - (-4.0f64 / 3.0).exp()).abs() < 1e-15);
        for kk in 1..8 {
            assert!(k.symbol(kk) > 0.0);
        }
        let lit = LimitKernel::with_convention(&Params::new(2, 1, 1.0, 1.0).unwrap(), SymbolConvention::Literal);
        assert!((lit.char_function(1.0, 0) - (2.0f64 / 3.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn ball_mass_examples() {
        let k = kernel(2, 1.0);
        assert_eq!(k.ball_mass(0, 0.3), 1.0);
        let t = 1.0;
        assert!((k.ball_mass(1, t) - 0.5 * (1.0 + (-4.0f64 / 3.0).exp())).abs() < 1e-15);
        assert!((k.ball_mass(1, 1e-9) - 1.0).abs() < 1e-8);
        assert!((k.ball_mass(1, 60.0) - 0.5).abs() < 1e-12);
        for j in 0..10 {
            assert!(k.ball_mass(j, 0.25) - k.ball_mass(j + 1, 0.25) >= 0.0);
        }
    }

    #[test]
    fn density_examples() {
        let k = kernel(2, 1.0);
        assert!((k.radial_density(0, 1.0) - (1.0 - (-4.0f64 / 3.0).exp())).abs() < 1e-15);
        let gap = k.spectral_gap();
        for j in 0..=8 {
            let t = 20.0;
            assert!((k.radial_density(j, t) - 1.0).abs() <= 2f64.powi(j as i32 + 1) * (-gap * t).exp());
        }
    }

    #[test]
    fn density_and_ball_mass_are_consistent() {
        for (p, b) in [(2u64, 1.0), (3, 0.5), (5, 2.0)] {
            let k = kernel(p, b);
            let pf = p as f64;
            for t in [0.01, 0.3, 2.0] {
                for j in 0..8 {
                    let circle = k.ball_mass(j, t) - k.ball_mass(j + 1, t);
                    let weighted = k.radial_density(j, t) * (1.0 - 1.0 / pf) * pf.powi(-(j as i32));
                    assert!((circle - weighted).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn limit_moment_limits() {
        let k = kernel(3, 1.0);
        // Small jumps dominate for short times: the moment scales like t^{r/b}.
        let a = k.limit_moment(1e-6, 0.5, 1e-14).unwrap().value;
        let b = k.limit_moment(1e-8, 0.5, 1e-14).unwrap().value;
        assert!(a < 1e-2);
        assert!((a / b - 10.0).abs() < 2.0, "{a} {b}");
        let r = 0.5;
        let big = k.limit_moment(50.0, r, 1e-14).unwrap();
        let haar = (1.0 - 1.0 / 3.0) / (1.0 - 3f64.powf(-(r + 1.0)));
        assert!((big.value - haar).abs() < 1e-12);
        assert!(big.tail_bound < 1e-14);
        assert!(k.limit_moment(1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn qp_density_is_normalized_and_positive() {
        for (p, b) in [(2u64, 1.0), (3, 0.5), (2, 2.0)] {
            let k = kernel(p, b);
            let pf = p as f64;
            for t in [0.5, 1.0, 3.0] {
                let total: f64 = (-400..=200)
                    .map(|j| {
                        let d = k.qp_density(j, t, 1e-18);
                        assert!(d.value >= 0.0);
                        d.value * (1.0 - 1.0 / pf) * pf.powi(-j)
                    })
                    .sum();
                assert!((total - 1.0).abs() < 1e-8, "p={p} b={b} t={t}: {total}");
            }
        }
    }

    #[test]
    fn single_ball_limit_probability() {
        let pr = Params::new(2, 2, 1.0, 1.0).unwrap();
        let h = crate::walk::single_ball_history(2, Rational64::from_integer(1), 1).unwrap();
        let expect = 0.5 * (1.0 + (-4.0f64 / 3.0).exp());
        for res in 1..=5 {
            assert!((cylinder_prob_limit(&h, &pr, res).unwrap() - expect).abs() < 1e-14);
        }
        assert!(cylinder_prob_limit(&h, &pr, 0).is_err());
        let all = History::new(
            vec![Rational64::from_integer(0), Rational64::new(1, 2)],
            vec![Ball::whole(2), Ball::whole(2)],
        )
        .unwrap();
        assert!((cylinder_prob_limit(&all, &pr, 3).unwrap() - 1.0).abs() < 1e-14);
        let miss = History::new(
            vec![Rational64::from_integer(0), Rational64::from_integer(1)],
            vec![Ball::new(2, 1, 1).unwrap(), Ball::whole(2)],
        )
        .unwrap();
        assert_eq!(cylinder_prob_limit(&miss, &pr, 2).unwrap(), 0.0);
    }

    #[test]
    fn cache_computes_once_per_key() {
        let cache = KernelCache::new();
        let k = kernel(2, 1.0);
        let a = cache.get(&k, Rational64::new(2, 4), 6);
        let b = cache.get(&k, Rational64::new(1, 2), 6);
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
        let c = cache.get(&k, Rational64::new(1, 2), 7);
        assert!(!Arc::ptr_eq(&a, &c));
        assert!(c.to_csv().starts_with("j,density,ballMass,tailBound\n0,"));
    }
}
