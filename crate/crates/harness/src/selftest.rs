//! Oracle-equivalence and invariant suite run by `padic-walk selftest`.

use std::time::{Duration, Instant};

use num_rational::Rational64;
use padic_walk::convergence::{fdd_gap, run_convergence, standard_histories, ConvergenceConfig, Status};
use padic_walk::kernel::cylinder_prob_limit;
use padic_walk::oracle::dense_convolution_power;
use padic_walk::walk::{
    exact_moment, moment_bound, nstep_pmf, phi_dft_oracle, sample_step_counts, single_ball_history, thresholds, StepLaw,
};
use padic_walk::{Ball, History, LimitKernel, Params};

/// Closed-form characteristic function by dual norm exponent.
pub type PhiFn = fn(u32, &Params) -> f64;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

fn timed(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> CheckOutcome {
    let start = Instant::now();
    let (pass, detail) = match f() {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    CheckOutcome { name, pass, detail, elapsed: start.elapsed() }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: padic_walk::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

const PRIMES: [u64; 3] = [2, 3, 5];
const EXPONENTS: [f64; 3] = [0.5, 1.0, 2.0];
const LEVELS: [u32; 3] = [2, 3, 4];

fn grid() -> impl Iterator<Item = Params> {
    PRIMES.into_iter().flat_map(|p| {
        EXPONENTS
            .into_iter()
            .flat_map(move |b| LEVELS.into_iter().map(move |m| Params::new(p, m, b, 1.0).expect("grid params")))
    })
}

fn spectral(phi: PhiFn) -> Result<String, String> {
    let mut worst = 0.0f64;
    for pr in grid() {
        let g = pr.group();
        for y in g.dual_elements() {
            let closed = phi(y.norm_exp().unwrap_or(0), &pr);
            let oracle = lib(phi_dft_oracle(&y, &pr))?;
            worst = worst.max((closed - oracle).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("closed form differs from the character sum by {worst:e}"))?;
    let pr = Params::new(2, 2, 1.0, 1.0).expect("reference params");
    let hand = [1.0, 1.0 / 3.0, -2.0 / 3.0];
    for (k, h) in hand.iter().enumerate() {
        let v = phi(k as u32, &pr);
        ensure((v - h).abs() <= 1e-15, || format!("phi({k}) = {v}, expected {h}"))?;
    }
    Ok(format!("max |closed - oracle| = {worst:e}"))
}

fn convolution() -> Result<String, String> {
    let mut worst = 0.0f64;
    for pr in grid() {
        let step = StepLaw::new(&pr).pmf().to_dense();
        for n in 0..=8 {
            let dense = dense_convolution_power(&step, n);
            let fast = lib(nstep_pmf(n, &pr))?.to_dense();
            for (a, b) in fast.iter().zip(&dense) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("radial law differs from convolution by {worst:e}"))?;
    let pr = Params::new(2, 2, 1.0, 1.0).expect("reference params");
    let pinned = [0.5, 2.0 / 9.0, 1.0 / 18.0, 2.0 / 9.0];
    let got = lib(nstep_pmf(2, &pr))?.to_dense();
    for (a, b) in got.iter().zip(pinned) {
        ensure((a - b).abs() <= 1e-15, || format!("pmf of S_2 is {got:?}"))?;
    }
    Ok(format!("max |radial - dense| = {worst:e}"))
}

fn normalization() -> Result<String, String> {
    let mut count = 0;
    for pr in grid() {
        for n in [0u64, 1, 2, 5, 64, 1000, 1_000_000] {
            let pmf = lib(nstep_pmf(n, &pr))?;
            let total: f64 = pmf.to_dense().iter().sum();
            ensure((total - 1.0).abs() <= 1e-12, || format!("pmf sums to {total} at {pr:?}, n = {n}"))?;
            ensure(pmf.classes().iter().all(|&x| x >= -1e-12), || format!("negative pmf at {pr:?}, n = {n}"))?;
            count += 1;
        }
        let k = LimitKernel::new(&pr);
        for t in [0.01, 0.5, 1.0, 10.0] {
            ensure(k.ball_mass(0, t) == 1.0, || format!("ball_mass(0, {t}) = {}", k.ball_mass(0, t)))?;
            for j in 0..=30 {
                let d = k.radial_density(j, t);
                ensure(d >= -1e-12, || format!("kernel density {d} at j = {j}, t = {t}"))?;
            }
        }
    }
    Ok(format!("{count} laws checked"))
}

fn moments() -> Result<String, String> {
    let mut checked = 0;
    for p in PRIMES {
        for b in EXPONENTS {
            let first = thresholds(p, b).moment + 1;
            for m in first..first + 3 {
                let pr = lib(Params::new(p, m, b, 1.0))?;
                for q in [0.25, 0.5, 0.75] {
                    let r = q * b;
                    for n in 1..=64 {
                        let exact = lib(exact_moment(n, r, &pr))?;
                        let bound = lib(moment_bound(n, r, &pr))?.value;
                        ensure(exact <= bound, || format!("p={p} b={b} m={m} r={r} n={n}: {exact} > {bound}"))?;
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{checked} grid points, no violations"))
}

fn convergence_report() -> Result<String, String> {
    let report = lib(run_convergence(&ConvergenceConfig::default()))?;
    let failures: Vec<String> =
        report.assertions.iter().filter(|a| a.status == Status::Fail).map(|a| a.name.clone()).collect();
    ensure(failures.is_empty(), || format!("failed: {}", failures.join("; ")))?;
    ensure(report.equilibrium.tv < 1e-4, || format!("equilibrium TV {}", report.equilibrium.tv))?;
    Ok(format!("{} assertions, equilibrium TV {:e}", report.assertions.len(), report.equilibrium.tv))
}

fn fdd() -> Result<String, String> {
    let reference = single_ball_history(2, Rational64::from_integer(1), 1).map_err(|e| e.to_string())?;
    let gap = lib(fdd_gap(&reference, &Params::new(2, 2, 1.0, 1.0).expect("params")))?.gap;
    let expect = (5.0 / 9.0 - 0.5 * (1.0 + (-4.0f64 / 3.0).exp())).abs();
    ensure((gap - expect).abs() <= 1e-12, || format!("m = 2 gap {gap}, expected {expect}"))?;
    for (name, h) in lib(standard_histories(2))? {
        let gaps: Vec<f64> = (3..=10)
            .map(|m| fdd_gap(&h, &Params::new(2, m, 1.0, 1.0).expect("params")).map(|r| r.gap))
            .collect::<padic_walk::Result<_>>()
            .map_err(|e| e.to_string())?;
        ensure(gaps.windows(2).all(|w| w[1] < w[0]), || format!("{name}: {gaps:?}"))?;
    }
    Ok(format!("m = 2 gap {gap:.6}"))
}

fn monte_carlo() -> Result<String, String> {
    let pr = Params::new(2, 3, 1.0, 1.0).expect("params");
    let law = StepLaw::new(&pr);
    let seed = padic_walk::rng::DEFAULT_SEED;
    let counts = sample_step_counts(&law, 1_000_000, seed);
    ensure(counts == sample_step_counts(&law, 1_000_000, seed), || "rerun differs".into())?;
    let z = padic_walk::convergence::binomial_z_scores(&counts.per_class, law.density());
    ensure(z.iter().all(|z| z.abs() < 4.0), || format!("z-scores {z:?}"))?;
    let chi = lib(padic_walk::convergence::mc_goodness_of_fit(&counts.per_class, law.density()))?;
    ensure(!chi.rejected, || format!("chi-square rejected, p = {}", chi.p_value))?;
    Ok(format!("p-value {:.4}", chi.p_value))
}

fn semigroup() -> Result<String, String> {
    let pr = Params::new(2, 4, 1.0, 1.0).expect("params");
    let k = LimitKernel::new(&pr);
    for kk in 0..6 {
        let (a, b) = (k.char_function(0.5, kk) * k.char_function(0.25, kk), k.char_function(0.75, kk));
        let tol = 8.0 * f64::EPSILON * (1.0 + b.ln().abs()) * b;
        ensure((a - b).abs() <= tol, || format!("multiplicativity at k = {kk}: {a} vs {b}"))?;
    }
    let r = |a, b| Rational64::new(a, b);
    let one = single_ball_history(2, r(1, 1), 2).map_err(|e| e.to_string())?;
    let two = History::new(
        vec![r(0, 1), r(1, 2), r(1, 1)],
        vec![Ball::whole(2), Ball::whole(2), Ball::new(2, 0, 2).expect("ball")],
    )
    .map_err(|e| e.to_string())?;
    let (a, b) = (lib(cylinder_prob_limit(&one, &pr, 3))?, lib(cylinder_prob_limit(&two, &pr, 3))?);
    ensure((a - b).abs() <= 1e-12, || format!("one epoch {a}, two epochs {b}"))?;
    Ok(format!("P = {a:.12}"))
}

/// Runs every check with `phi` standing in for the closed-form characteristic function.
pub fn run_suite(phi: PhiFn) -> Vec<CheckOutcome> {
    vec![
        timed("spectral identity", || spectral(phi)),
        timed("convolution identity", convolution),
        timed("normalization and positivity", normalization),
        timed("moment bound", moments),
        timed("convergence report", convergence_report),
        timed("fdd convergence", fdd),
        timed("monte carlo step law", monte_carlo),
        timed("semigroup", semigroup),
    ]
}
