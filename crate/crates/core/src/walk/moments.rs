use serde::Serialize;
use statrs::function::gamma::gamma;

use super::{nstep_density, thresholds};
use crate::error::{domain, precondition, Result};
use crate::kernel::beta;
use crate::padic::{RadialProfile, Side};
use crate::params::Params;

fn check_order(r: f64, params: &Params) -> Result<()> {
    if !(r > 0.0 && r < params.b()) {
        return domain(format!("moment order r = {r} must lie in (0, b) = (0, {})", params.b()));
    }
    Ok(())
}

/// `E[|S_n|^r]` from the exact law of `S_n`.
pub fn exact_moment(n: u64, r: f64, params: &Params) -> Result<f64> {
    check_order(r, params)?;
    exact_moment_of(&nstep_density(n, params)?, r)
}

/// `sum over shells of mass * p^{-v r}` for a density on `G_m`.
pub fn exact_moment_of(density: &RadialProfile, r: f64) -> Result<f64> {
    if density.side() != Side::Group {
        return domain("moments are taken of densities on G_m");
    }
    let p = density.group().p() as f64;
    let masses = density.class_masses();
    Ok((0..density.level() as usize).map(|v| masses[v] * p.powf(-(v as f64) * r)).sum())
}

/// `c(m) = beta (p^b - 1)(1 + p^{-mb} + p^{-mb} / (p^{mb} - 1))`.
pub fn moment_constant_c(params: &Params) -> f64 {
    let pmb = params.p_mb();
    beta(params.p(), params.b()) * (params.pow(params.b()) - 1.0) * (1.0 + 1.0 / pmb + 1.0 / (pmb * (pmb - 1.0)))
}

/// The two-term upper bound on `E[|S_n|^r]` and its pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentBound {
    /// `K = c(m) p^r (p-1) p^b beta^{(r-b)/b} Gamma(1 - r/b) / ((p^b - 1)(p^{r+1} - 1))`.
    pub k: f64,
    /// `K n^{r/b} p^{-mr} ((n + (b-r)/b) / n)^{r/b}`.
    pub small_jumps: f64,
    /// `(1 - (1 - beta p^b (1 + p^{-mb}) / p^{mb})^n) p^r (p-1) / (p^{r+1} - 1)`.
    pub large_jumps: f64,
    pub value: f64,
    /// `c(m) p^r (p-1) beta^{(r-b)/b} / (p^b (p^b - 1)(p^{r+1} - 1))`, the constant
    /// as usually displayed. It is smaller than `k` by `p^{2b} Gamma(1 - r/b)` and
    /// does not bound the moment for small `n`.
    pub displayed_k: f64,
    /// The bound with `displayed_k` in place of `k`.
    pub displayed_value: f64,
}

/// Upper bound on `E[|S_n|^r]` for `m > M(p,b)` and `0 < r < b`, with `c(m)`
/// evaluated at the given level.
///
/// The small-jump sum is a Riemann sum for `n int_0^1 x^{-r/b} (1-x)^{n-1} dx
/// = Gamma(1 - r/b) Gamma(n+1) / Gamma(n+1-r/b)`, at most
/// `Gamma(1 - r/b) (n + 1 - r/b)^{r/b}` by Wendel's inequality. Each mesh
/// width is `beta (p^b - 1) p^{ib} / p^{(m+1)b}`, so the jump weights
/// `p^{ib}/p^{mb}` contribute `p^b / (beta (p^b - 1))` per unit length.
pub fn moment_bound(n: u64, r: f64, params: &Params) -> Result<MomentBound> {
    check_order(r, params)?;
    let th = thresholds(params.p(), params.b());
    if params.m() <= th.moment {
        return precondition(format!("moment bound needs m > M(p,b) = {}, got m = {}", th.moment, params.m()));
    }
    let (p, b) = (params.pf(), params.b());
    let bt = beta(params.p(), b);
    let pb = p.powf(b);
    let pmb = params.p_mb();
    let s = r / b;
    let a = p.powf(r) * (p - 1.0) / (p.powf(r + 1.0) - 1.0);
    let displayed_k = moment_constant_c(params) * a * bt.powf((r - b) / b) / (pb * (pb - 1.0));
    let k = displayed_k * pb * pb * gamma(1.0 - s);
    let (growth, large_jumps) = if n == 0 {
        (0.0, 0.0)
    } else {
        let nf = n as f64;
        let growth = nf.powf(s) * p.powf(-(params.m() as f64) * r) * ((nf + (b - r) / b) / nf).powf(s);
        let base = 1.0 - bt * pb * (1.0 + 1.0 / pmb) / pmb;
        let decay = if base > 0.0 { (nf * (base - 1.0).ln_1p()).exp() } else { base.powf(nf) };
        (growth, (1.0 - decay) * a)
    };
    Ok(MomentBound {
        k,
        small_jumps: k * growth,
        large_jumps,
        value: k * growth + large_jumps,
        displayed_k,
        displayed_value: displayed_k * growth + large_jumps,
    })
}
