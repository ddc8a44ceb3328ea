use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::kernel::beta;
use crate::params::Params;

/// Relative width of the band around an integer inside which a floating-point
/// `t * lambda` snaps to that integer. Only used when `lambda` is irrational.
pub const FLOOR_GUARD: f64 = 4.0 * f64::EPSILON;

/// Time scaling of the embedded walk: `sigma = D / beta`, `lambda = sigma p^{mb}`,
/// `tau = 1 / lambda`.
#[derive(Debug, Clone, Serialize)]
pub struct TimeScale {
    pub sigma: f64,
    pub lambda: f64,
    pub tau: f64,
    #[serde(skip)]
    exact_lambda: Option<BigRational>,
}

impl TimeScale {
    pub fn new(params: &Params) -> Self {
        let sigma = params.diffusion() / beta(params.p(), params.b());
        let lambda = (sigma.ln() + params.m() as f64 * params.b() * params.pf().ln()).exp();
        let exact_lambda = params.integral_b().and_then(|b| exact_lambda(params, b));
        TimeScale { sigma, lambda, tau: 1.0 / lambda, exact_lambda }
    }

    /// `lambda` as an exact rational when `b` is a whole number.
    pub fn exact_lambda(&self) -> Option<&BigRational> {
        self.exact_lambda.as_ref()
    }

    /// `floor(t lambda)`, the number of steps taken by time `t`.
    pub fn steps_at(&self, t: &Rational64) -> Result<u64> {
        if *t.numer() < 0 {
            return domain(format!("negative time {t}"));
        }
        if let Some(lambda) = &self.exact_lambda {
            let t = BigRational::new(BigInt::from(*t.numer()), BigInt::from(*t.denom()));
            let n = (t * lambda).floor().to_integer();
            return n
                .to_u64()
                .ok_or_else(|| crate::error::Error::Domain(format!("step count {n} does not fit in 64 bits")));
        }
        let x = t.to_f64().unwrap_or(f64::NAN) * self.lambda;
        if !x.is_finite() || x >= u64::MAX as f64 {
            return domain(format!("step count for t = {t} does not fit in 64 bits"));
        }
        let nearest = x.round();
        let n = if (x - nearest).abs() <= FLOOR_GUARD * x.abs() { nearest } else { x.floor() };
        Ok(n as u64)
    }

    /// Time of the `n`-th jump, `n tau`.
    pub fn time_of_step(&self, n: u64) -> StepTime {
        match &self.exact_lambda {
            Some(lambda) => StepTime::Exact(BigRational::from_integer(BigInt::from(n)) / lambda),
            None => StepTime::Float(n as f64 * self.tau),
        }
    }
}

// lambda = D p^{mb} p^b (p - 1) / (p^{b+1} - 1) for integral b.
fn exact_lambda(params: &Params, b: u32) -> Option<BigRational> {
    let d = BigRational::from_float(params.diffusion())?;
    let p = BigInt::from(params.p());
    let pmb = num_traits::pow(p.clone(), (params.m() * b) as usize);
    let pb = num_traits::pow(p.clone(), b as usize);
    let num: BigInt = pmb * &pb * (&p - 1);
    let den: BigInt = pb * &p - 1;
    if den.is_zero() {
        return None;
    }
    Some(d * BigRational::new(num, den))
}

/// A jump time, exact when the time scale is rational.
#[derive(Debug, Clone, PartialEq)]
pub enum StepTime {
    Exact(BigRational),
    Float(f64),
}

impl StepTime {
    pub fn to_f64(&self) -> f64 {
        match self {
            StepTime::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            StepTime::Float(x) => *x,
        }
    }
}

impl std::fmt::Display for StepTime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepTime::Exact(r) if r.is_integer() => write!(f, "{}", r.numer()),
            StepTime::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            StepTime::Float(x) => write!(f, "{x}"),
        }
    }
}
