//! The circle-weighted random walk on `G_m`.
//!
//! A step lands on the circle of radius `p^{l-m}` (`l = 1..m`) with probability
//! `c_m p^{-lb}` and is uniform on that circle. Its characteristic function is
//! radial and has a closed form, which makes the law of `S_n` an explicit
//! telescoped sum over balls.

mod moments;
mod sample;
mod time;

pub use moments::{exact_moment, exact_moment_of, moment_bound, moment_constant_c, MomentBound};
pub use sample::{
    sample_embedded_path, sample_endpoint_counts, sample_step, sample_step_counts, PathSample, StepCounts,
};
pub use time::{StepTime, TimeScale};

use num_rational::Rational64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::history::{forward_mass, History};
use crate::kernel::beta;
use crate::padic::{DualElement, RadialProfile, Side};
use crate::params::Params;

/// Tolerance below zero tolerated on per-element probabilities before a run fails.
pub const NEGATIVE_MASS_TOLERANCE: f64 = 1e-12;

/// `c_m = p^{mb}(p^b - 1) / (p^{mb} - 1)`.
pub fn normalizer(params: &Params) -> f64 {
    let pb = params.pow(params.b());
    // Divide through by p^{mb} so large levels do not overflow.
    (pb - 1.0) / (1.0 - params.p_mb().recip())
}

/// Law of a single step.
#[derive(Debug, Clone, Serialize)]
pub struct StepLaw {
    params: Params,
    normalizer: f64,
    circle_prob: Vec<f64>,
    density: RadialProfile,
    #[serde(skip)]
    cdf: Vec<f64>,
}

impl StepLaw {
    pub fn new(params: &Params) -> Self {
        let m = params.m();
        let c = normalizer(params);
        let circle_prob: Vec<f64> = (1..=m).map(|ell| c * params.pow(-(ell as f64) * params.b())).collect();
        let group = params.group();
        let p = params.pf();
        // S_m(l) is the shell of valuation m - l, with volume (1 - 1/p) p^{-(m-l)}.
        let density = RadialProfile::from_fn(group, Side::Group, |v| {
            if v == m {
                0.0
            } else {
                circle_prob[(m - v - 1) as usize] / ((1.0 - 1.0 / p) * p.powi(-(v as i32)))
            }
        });
        let mut acc = 0.0;
        let cdf = circle_prob
            .iter()
            .map(|q| {
                acc += q;
                acc
            })
            .collect();
        StepLaw { params: *params, normalizer: c, circle_prob, density, cdf }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// `Prob(X in S_m(l))` for `l` in `1..=m`.
    pub fn circle_prob(&self, ell: u32) -> f64 {
        self.circle_prob[(ell - 1) as usize]
    }

    pub fn circle_probs(&self) -> &[f64] {
        &self.circle_prob
    }

    /// Density with respect to the normalized Haar measure on `G_m`.
    pub fn density(&self) -> &RadialProfile {
        &self.density
    }

    /// Probability of each individual element.
    pub fn pmf(&self) -> RadialProfile {
        self.density.to_pmf()
    }

    pub(crate) fn cdf(&self) -> &[f64] {
        &self.cdf
    }
}

/// Closed form of `phi_X` on the dual class of norm `p^k`, written as
/// `1 - beta(|y|^b (1 + p^{-mb}) - 1/beta) / p^{mb} + (1 - beta |y|^b / p^{mb}) / (p^{mb}(p^{mb} - 1))`.
pub fn phi_closed_at(k: u32, params: &Params) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let bt = beta(params.p(), params.b());
    let pmb = params.p_mb();
    let yb = params.pow(k as f64 * params.b());
    1.0 - bt * (yb * (1.0 + 1.0 / pmb) - 1.0 / bt) / pmb + (1.0 - bt * yb / pmb) / (pmb * (pmb - 1.0))
}

pub fn phi_closed(y: &DualElement, params: &Params) -> Result<f64> {
    check_level(y, params)?;
    Ok(phi_closed_at(y.norm_exp().unwrap_or(0), params))
}

/// The compact form `p^{mb}/(p^{mb} - 1) (1 - beta |y|^b / p^{mb})`, `1` at `k = 0`.
pub fn phi_compact_at(k: u32, params: &Params) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let bt = beta(params.p(), params.b());
    let x = bt * params.pow((k as f64 - params.m() as f64) * params.b());
    (1.0 - x) / (1.0 - params.p_mb().recip())
}

/// `sum_x pmf(x) chi(x y)` over all of `G_m`.
pub fn phi_dft_oracle(y: &DualElement, params: &Params) -> Result<f64> {
    check_level(y, params)?;
    let group = params.group();
    let pmf = StepLaw::new(params).pmf().to_dense();
    Ok(crate::oracle::dense_characteristic(&group, &pmf, y.residue()).re)
}

fn check_level(y: &DualElement, params: &Params) -> Result<()> {
    if y.group() != params.group() {
        return Err(Error::LevelMismatch(format!(
            "dual element of level {} against parameters of level {}",
            y.group().m(),
            params.m()
        )));
    }
    Ok(())
}

/// `phi(0..=m)`, the characteristic function on dual classes by norm exponent.
pub fn phi_ladder(params: &Params) -> Vec<f64> {
    (0..=params.m()).map(|k| phi_compact_at(k, params)).collect()
}

/// `phi(k)^n`, computed in the log domain so that large `n` stays accurate.
pub fn phi_pow(k: u32, n: u64, params: &Params) -> f64 {
    if k == 0 || n == 0 {
        return 1.0;
    }
    let bt = beta(params.p(), params.b());
    let x = bt * params.pow((k as f64 - params.m() as f64) * params.b());
    let log_ratio = -(-params.p_mb().recip()).ln_1p();
    let (log_mag, negative) = if x < 1.0 {
        ((-x).ln_1p(), false)
    } else if x > 1.0 {
        ((x - 1.0).ln(), true)
    } else {
        return 0.0;
    };
    let mag = (n as f64 * (log_ratio + log_mag)).exp();
    if negative && n % 2 == 1 {
        -mag
    } else {
        mag
    }
}

/// Law of `S_n` as a density on `G_m`:
/// `sum_{i=0}^{m} (phi(i)^n - phi(i+1)^n) p^i 1_{val >= i}` with `phi(m+1)^n = 0`.
///
/// The last term carries the full weight `p^m` of the zero class, so `n = 0`
/// gives the point mass at `[0]`.
pub fn nstep_density(n: u64, params: &Params) -> Result<RadialProfile> {
    let m = params.m();
    let p = params.pf();
    let mut powers: Vec<f64> = (0..=m).map(|k| phi_pow(k, n, params)).collect();
    powers.push(0.0);
    let mut partial = Vec::with_capacity(m as usize + 1);
    let mut acc = 0.0;
    for i in 0..=m as usize {
        acc += (powers[i] - powers[i + 1]) * p.powi(i as i32);
        partial.push(acc);
    }
    let scale = 1.0 / params.modulus() as f64;
    let mut out = Vec::with_capacity(partial.len());
    for (v, d) in partial.into_iter().enumerate() {
        if d < 0.0 {
            if d * scale < -NEGATIVE_MASS_TOLERANCE {
                return Err(Error::Numerical(format!(
                    "n-step mass {:e} at valuation class {v} is negative beyond tolerance",
                    d * scale
                )));
            }
            out.push(0.0);
        } else {
            out.push(d);
        }
    }
    Ok(RadialProfile::from_fn(params.group(), Side::Group, |v| out[v as usize]))
}

/// Per-element probabilities of `S_n`.
pub fn nstep_pmf(n: u64, params: &Params) -> Result<RadialProfile> {
    Ok(nstep_density(n, params)?.to_pmf())
}

/// Level thresholds above which the moment and scaling estimates apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// `M(p,b) = 1 + ceil((1/b) log_p((p^{b+1} - 1)/(p^b - 1)))`.
    pub moment: u32,
    /// `M'(p,b) = (1/b) log_p(2 sqrt(2) p^b)`.
    pub scaling: f64,
    /// `N(p,b) = max(M, M')`.
    pub combined: f64,
}

impl Thresholds {
    /// Smallest integer level `m >= N(p,b)`.
    pub fn first_level(&self) -> u32 {
        ceil_guarded(self.combined) as u32
    }
}

pub fn thresholds(p: u64, b: f64) -> Thresholds {
    let pf = p as f64;
    let pb = pf.powf(b);
    let inner = ((pb * pf - 1.0) / (pb - 1.0)).ln() / pf.ln() / b;
    let moment = 1 + ceil_guarded(inner) as u32;
    let scaling = (2.0 * std::f64::consts::SQRT_2 * pb).ln() / pf.ln() / b;
    Thresholds { moment, scaling, combined: (moment as f64).max(scaling) }
}

// Values within rounding of an integer are treated as that integer.
fn ceil_guarded(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// `P_m(C(h))`: forward recursion over `G_m`, convolving with the law of the
/// steps taken between epochs and masking by each route ball.
pub fn cylinder_prob_discrete(h: &History, params: &Params, scale: &TimeScale) -> Result<f64> {
    let m = params.m();
    if let Some(ball) = h.route().iter().find(|b| b.radius_exp() > m) {
        return crate::error::precondition(format!("route ball {ball} is finer than level {m}"));
    }
    if h.route()[0].p() != params.p() {
        return domain("history and parameters use different primes");
    }
    let steps: Vec<u64> = h.epochs().iter().map(|t| scale.steps_at(t)).collect::<Result<_>>()?;
    forward_mass(&params.group(), h, |i| nstep_pmf(steps[i] - steps[i - 1], params))
}

/// `P(S_n in B)` for a ball given at the walk's level, from the radial law.
pub fn ball_prob(n: u64, radius_exp: u32, params: &Params) -> Result<f64> {
    if radius_exp > params.m() {
        return domain("ball finer than the walk's level");
    }
    let masses = nstep_density(n, params)?.class_masses();
    Ok(masses[radius_exp as usize..].iter().sum())
}

/// Convenience: single-epoch history `((0, Z_p), (t, B(0, p^{-j})))`.
pub fn single_ball_history(p: u64, t: Rational64, radius_exp: u32) -> Result<History> {
    History::new(
        vec![Rational64::from_integer(0), t],
        vec![crate::padic::Ball::whole(p), crate::padic::Ball::new(p, 0, radius_exp)?],
    )
}
