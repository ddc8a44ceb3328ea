//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use num_rational::Rational64;
use padic_walk::convergence::{
    fdd_gap, mc_goodness_of_fit, run_convergence, standard_histories, ConvergenceConfig, Status,
};
use padic_walk::kernel::cylinder_prob_limit;
use padic_walk::oracle::{dense_characteristic, dense_convolution_power};
use padic_walk::rng::DEFAULT_SEED;
use padic_walk::walk::{
    exact_moment, moment_bound, nstep_density, phi_closed, phi_dft_oracle, sample_step_counts, single_ball_history,
    thresholds, StepLaw,
};
use padic_walk::{Ball, History, LimitKernel, Params};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

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

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))
}

fn grid() -> Vec<Params> {
    let mut out = Vec::new();
    for p in [2, 3, 5] {
        for b in [0.5, 1.0, 2.0] {
            for m in [2, 3, 4] {
                out.push(Params::new(p, m, b, 1.0).expect("grid params"));
            }
        }
    }
    out
}

fn reference() -> Params {
    Params::new(2, 2, 1.0, 1.0).expect("reference params")
}

fn at_level(m: u32) -> Params {
    Params::new(2, m, 1.0, 1.0).expect("params")
}

fn spectral_identity() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut count = 0;
    for pr in grid() {
        let group = pr.group();
        let step = StepLaw::new(&pr).pmf().to_dense();
        for y in group.dual_elements() {
            let closed = lib(phi_closed(&y, &pr))?;
            let oracle = lib(phi_dft_oracle(&y, &pr))?;
            // Second, independent character sum over the dense pmf.
            let dense: Complex64 = dense_characteristic(&group, &step, y.residue());
            worst = worst.max((closed - oracle).abs()).max((closed - dense.re).abs()).max(dense.im.abs());
            count += 1;
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    let pr = reference();
    let group = pr.group();
    for (residue, expect) in [(0, 1.0), (2, 1.0 / 3.0), (1, -2.0 / 3.0)] {
        let v = lib(phi_closed(&lib(group.dual_element(residue))?, &pr))?;
        ensure((v - expect).abs() <= 1e-15, || format!("phi at dual residue {residue} is {v}, expected {expect}"))?;
    }
    within(Duration::from_secs(10), start)?;
    Ok(format!("{count} dual elements, max deviation {worst:.1e}"))
}

fn convolution_identity() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for pr in grid() {
        let step = StepLaw::new(&pr).pmf().to_dense();
        for n in 0..=8 {
            let dense = dense_convolution_power(&step, n);
            let fast = lib(nstep_density(n, &pr))?.to_pmf().to_dense();
            for (a, b) in fast.iter().zip(&dense) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    let pinned = [0.5, 2.0 / 9.0, 1.0 / 18.0, 2.0 / 9.0];
    let got = lib(nstep_density(2, &reference()))?.to_pmf().to_dense();
    for (a, b) in got.iter().zip(pinned) {
        ensure((a - b).abs() <= 1e-15, || format!("two-step pmf {got:?}"))?;
    }
    within(Duration::from_secs(20), start)?;
    Ok(format!("n <= 8 on 27 parameter sets, max deviation {worst:.1e}"))
}

fn normalization() -> Outcome {
    let mut laws = 0;
    for pr in grid() {
        for n in [0, 1, 2, 3, 8, 64, 4096, 1 << 20] {
            let pmf = lib(nstep_density(n, &pr))?.to_pmf().to_dense();
            let total: f64 = pmf.iter().sum();
            ensure((total - 1.0).abs() <= 1e-12, || format!("{pr:?} n={n}: total {total}"))?;
            let min = pmf.iter().cloned().fold(f64::INFINITY, f64::min);
            ensure(min >= -1e-12, || format!("{pr:?} n={n}: min {min}"))?;
            laws += 1;
        }
        let kernel = LimitKernel::new(&pr);
        for t in [1e-3, 0.1, 0.5, 1.0, 2.0, 10.0] {
            ensure(kernel.ball_mass(0, t) == 1.0, || format!("ball mass at t={t}"))?;
            for j in 0..=40 {
                let d = kernel.radial_density(j, t);
                ensure(d >= -1e-12, || format!("{pr:?}: density {d} at j={j}, t={t}"))?;
            }
        }
    }
    Ok(format!("{laws} step laws and 27 kernels"))
}

fn moment_bound_grid() -> Outcome {
    let start = Instant::now();
    let (mut points, mut violations) = (0, Vec::new());
    for p in [2, 3, 5] {
        for b in [0.5, 1.0, 2.0] {
            let first = thresholds(p, b).moment + 1;
            for m in first..=first + 2 {
                let pr = lib(Params::new(p, m, b, 1.0))?;
                for r in [b / 4.0, b / 2.0, 3.0 * b / 4.0] {
                    for n in 1..=64 {
                        let exact = lib(exact_moment(n, r, &pr))?;
                        let bound = lib(moment_bound(n, r, &pr))?.value;
                        if exact > bound {
                            violations.push(format!("p={p} b={b} m={m} r={r} n={n}"));
                        }
                        points += 1;
                    }
                }
            }
        }
    }
    ensure(violations.is_empty(), || format!("{} violations, first {}", violations.len(), violations[0]))?;
    within(Duration::from_secs(30), start)?;
    Ok(format!("{points} grid points, zero violations"))
}

// First verified run at (p=2, b=1, D=1); rows m = 3..8, columns t = 1/2, 1, 2.
#[allow(clippy::excessive_precision)]
const EPSILON_PINNED: [[f64; 3]; 6] = [
    [1.42532317248777329e0, 3.91526055806262763e-1, 5.22965426501299097e-2],
    [5.84658673211639002e-1, 7.86951505399976492e-2, 2.21113250540609235e-2],
    [1.10880193511384451e-1, 4.09441019679696247e-2, 1.00453983169607325e-2],
    [6.53313906425678770e-2, 1.62929695340520882e-2, 5.82793129094579584e-3],
    [2.27498467636550808e-2, 1.05002685139194332e-2, 2.55559616784295637e-3],
    [1.67021386905401650e-2, 4.09951076858542599e-3, 1.47623038963477565e-3],
];

fn l1_decay() -> Outcome {
    let n = thresholds(2, 1.0).first_level();
    let config = ConvergenceConfig { m_range: n..=n + 5, ..ConvergenceConfig::default() };
    let report = lib(run_convergence(&config))?;
    let times = [Rational64::new(1, 2), Rational64::new(1, 1), Rational64::new(2, 1)];
    for (col, t) in times.iter().enumerate() {
        let eps: Vec<f64> = (n..=n + 5)
            .map(|m| report.per_m.iter().find(|g| g.m == m && g.t == *t).map(|g| g.eps_l1).ok_or("missing row"))
            .collect::<Result<_, _>>()?;
        ensure(eps.windows(2).all(|w| w[1] < w[0]), || format!("t={t}: {eps:?}"))?;
        for (row, e) in eps.iter().enumerate() {
            let pin = EPSILON_PINNED[row][col];
            ensure(((e - pin) / pin).abs() <= 1e-9, || format!("m={} t={t}: {e:e}, pinned {pin:e}", n as usize + row))?;
        }
    }
    for g in &report.per_m {
        ensure(g.sup_density_gap <= g.eps_l1 + 1e-12, || {
            format!("m={} t={}: sup gap {} > {}", g.m, g.t, g.sup_density_gap, g.eps_l1)
        })?;
    }
    Ok(format!("m = {n}..{} strictly decreasing, sup gap below epsilon on {} points", n + 5, report.per_m.len()))
}

fn fdd_convergence() -> Outcome {
    let start = Instant::now();
    let h = lib(single_ball_history(2, Rational64::from_integer(1), 1))?;
    let gap = lib(fdd_gap(&h, &reference()))?.gap;
    let derived = (5.0 / 9.0 - 0.5 * (1.0 + (-4.0f64 / 3.0).exp())).abs();
    ensure((gap - derived).abs() <= 1e-4, || format!("m=2 gap {gap}, derived {derived}"))?;
    ensure((gap - 0.0762).abs() <= 1e-4, || format!("m=2 gap {gap}"))?;
    let mut summary = Vec::new();
    for (name, h) in lib(standard_histories(2))? {
        let gaps: Vec<f64> = (3..=10)
            .map(|m| fdd_gap(&h, &at_level(m)).map(|r| r.gap))
            .collect::<padic_walk::Result<_>>()
            .map_err(|e| e.to_string())?;
        ensure(gaps.windows(2).all(|w| w[1] < w[0]), || format!("{name}: {gaps:?}"))?;
        summary.push(format!("{name} {:.2e} -> {:.2e}", gaps[0], gaps[7]));
    }
    within(Duration::from_secs(30), start)?;
    Ok(format!("m=2 gap {gap:.6}; {}", summary.join(", ")))
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let pr = Params::new(2, 3, 1.0, 1.0).expect("params");
    let law = StepLaw::new(&pr);
    let draws = 1_000_000;
    let counts = sample_step_counts(&law, draws, DEFAULT_SEED);
    ensure(counts == sample_step_counts(&law, draws, DEFAULT_SEED), || "rerun differs".into())?;
    let n = draws as f64;
    let mut worst = 0.0f64;
    for ell in 1..=pr.m() {
        let q = law.circle_prob(ell);
        let expect_q = law.normalizer() * 2f64.powi(-(ell as i32));
        ensure((q - expect_q).abs() <= 1e-15, || format!("circle {ell}: {q} vs {expect_q}"))?;
        let observed = counts.per_class[(pr.m() - ell) as usize] as f64;
        let z = (observed - n * q) / (n * q * (1.0 - q)).sqrt();
        worst = worst.max(z.abs());
    }
    ensure(worst < 4.0, || format!("max |z| = {worst}"))?;
    ensure(counts.per_class[pr.m() as usize] == 0, || "zero step sampled".into())?;
    let chi = lib(mc_goodness_of_fit(&counts.per_class, law.density()))?;
    ensure(!chi.rejected && chi.alpha == 1e-3, || format!("chi-square p = {}", chi.p_value))?;
    within(Duration::from_secs(10), start)?;
    Ok(format!("max |z| {worst:.2}, chi-square p {:.3}", chi.p_value))
}

fn semigroup() -> Outcome {
    let mut worst = 0.0f64;
    for pr in grid() {
        let k = LimitKernel::new(&pr);
        for j in 0..8 {
            for (s, t) in [(0.25, 0.5), (1.0, 1.0), (0.1, 3.0)] {
                let (lhs, rhs) = (k.char_function(s, j) * k.char_function(t, j), k.char_function(s + t, j));
                if rhs > 1e-250 {
                    worst = worst.max((lhs - rhs).abs() / (rhs * (1.0 + rhs.ln().abs())));
                }
            }
        }
    }
    ensure(worst <= 8.0 * f64::EPSILON, || format!("relative defect {worst:e}"))?;
    let r = Rational64::new;
    let pr = Params::new(2, 4, 1.0, 1.0).expect("params");
    let one = lib(single_ball_history(2, r(1, 1), 2))?;
    let two = lib(History::new(
        vec![r(0, 1), r(1, 2), r(1, 1)],
        vec![Ball::whole(2), Ball::whole(2), lib(Ball::new(2, 0, 2))?],
    ))?;
    let (a, b) = (lib(cylinder_prob_limit(&one, &pr, 4))?, lib(cylinder_prob_limit(&two, &pr, 4))?);
    ensure((a - b).abs() <= 1e-12, || format!("one epoch {a}, two epochs {b}"))?;
    Ok(format!("relative multiplicativity defect {worst:.1e}, cylinder {a:.12}"))
}

fn scaling_certificates() -> Outcome {
    let report = lib(run_convergence(&ConvergenceConfig::default()))?;
    let all =
        [("holder", &report.holder), ("scaling", &report.moments.scaling), ("chentsov", &report.moments.chentsov)];
    for (name, rows) in all {
        ensure(!rows.is_empty(), || format!("no {name} checks ran"))?;
        if let Some(c) = rows.iter().find(|c| !c.pass) {
            return Err(format!("{name} failed at m={} t={}: {} > {}", c.m, c.t, c.lhs, c.rhs));
        }
    }
    let failed: Vec<&str> =
        report.assertions.iter().filter(|a| a.status == Status::Fail).map(|a| a.name.as_str()).collect();
    ensure(failed.is_empty(), || format!("report assertions failed: {failed:?}"))?;
    let eq = &report.equilibrium;
    ensure(eq.t == 10.0 && eq.tv < 1e-4, || format!("equilibrium TV {} at t={}", eq.tv, eq.t))?;
    let prediction = (-40.0f64 / 3.0).exp();
    ensure((eq.spectral_gap_prediction - prediction).abs() <= 1e-3 * prediction, || {
        format!("spectral-gap prediction {}", eq.spectral_gap_prediction)
    })?;
    Ok(format!(
        "{} holder, {} scaling, {} chentsov checks; equilibrium TV {:.2e}",
        report.holder.len(),
        report.moments.scaling.len(),
        report.moments.chentsov.len(),
        eq.tv
    ))
}

fn selftest_binary() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_padic-walk");
    let start = Instant::now();
    let run = Command::new(bin).arg("selftest").output().map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(run.status.code() == Some(0), || {
        format!("exit {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stdout))
    })?;
    ensure(took < Duration::from_secs(60), || format!("took {took:.2?}"))?;
    let mutant = Command::new(bin).args(["selftest", "--inject-sign-flip"]).output().map_err(|e| e.to_string())?;
    ensure(mutant.status.code() == Some(1), || format!("mutant exit {:?}", mutant.status.code()))?;
    Ok(format!("exit 0 in {took:.2?}; sign-flip mutant rejected"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("spectral identity", spectral_identity),
        ("convolution identity", convolution_identity),
        ("normalization and positivity", normalization),
        ("moment bound", moment_bound_grid),
        ("L1 decay", l1_decay),
        ("fdd convergence", fdd_convergence),
        ("monte carlo consistency", monte_carlo),
        ("semigroup", semigroup),
        ("scaling certificates", scaling_certificates),
        ("selftest", selftest_binary),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
