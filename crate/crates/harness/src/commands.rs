use num_rational::Rational64;
use padic_walk::convergence::{run_convergence, ConvergenceConfig, ConvergenceReport};
use padic_walk::kernel::KernelCache;
use padic_walk::padic::Digits;
use padic_walk::walk::{
    exact_moment, moment_bound, nstep_density, phi_closed_at, phi_dft_oracle, sample_embedded_path, StepLaw, TimeScale,
};
use padic_walk::{LimitKernel, Params};
use serde_json::Value;

use crate::config::RunConfig;
use crate::output::{Cell, Emission, Table};
use crate::CliError;

/// Largest `p^m` for which the brute-force characteristic function is tabulated.
pub const ORACLE_LIMIT: u64 = 1 << 20;

fn times_or(cfg: &RunConfig, default: &[Rational64]) -> Vec<Rational64> {
    cfg.times.clone().unwrap_or_else(|| default.to_vec())
}

fn positive_times(times: &[Rational64]) -> Result<(), CliError> {
    match times.iter().find(|t| *t.numer() <= 0) {
        Some(t) => Err(CliError::Config(format!("--time values must be positive, got {t}"))),
        None => Ok(()),
    }
}

fn meta_params(e: &mut Emission, pr: &Params) {
    e.meta.insert("params".into(), serde_json::to_value(pr).expect("params serialize"));
}

pub fn step_law(cfg: &RunConfig) -> Result<Emission, CliError> {
    let pr = cfg.params()?;
    let law = StepLaw::new(&pr);
    let m = pr.m();
    let mut circles = Table::new("step_law", &["ell", "circleProb", "densityValue", "pmfPerElement"]);
    let pmf = law.pmf();
    for ell in 1..=m {
        circles.push(vec![
            ell.into(),
            law.circle_prob(ell).into(),
            law.density().at_class(m - ell).into(),
            pmf.at_class(m - ell).into(),
        ]);
    }
    let mut phi = Table::new("step_law_phi", &["dualNormExp", "phiClosed", "phiOracle", "absDiff"]);
    let group = pr.group();
    for k in 0..=m {
        let closed = phi_closed_at(k, &pr);
        let (oracle, diff) = if pr.modulus() <= ORACLE_LIMIT {
            // A representative of norm p^k is the residue p^{m-k}.
            let y = group.dual_element(pr.p().pow(m - k) % pr.modulus())?;
            let o = phi_dft_oracle(&y, &pr)?;
            (Cell::from(o), Cell::from((closed - o).abs()))
        } else {
            (Cell::from(""), Cell::from(""))
        };
        phi.push(vec![k.into(), closed.into(), oracle, diff]);
    }
    let mut e = Emission::new("step-law");
    meta_params(&mut e, &pr);
    e.meta.insert("normalizer".into(), law.normalizer().into());
    e.tables = vec![circles, phi];
    Ok(e)
}

pub fn walk(cfg: &RunConfig) -> Result<Emission, CliError> {
    let pr = cfg.params()?;
    let times = times_or(cfg, &[Rational64::from_integer(1)]);
    positive_times(&times)?;
    let horizon = times[0];
    let law = StepLaw::new(&pr);
    let scale = TimeScale::new(&pr);
    let paths = cfg.samples.unwrap_or(1);
    let mut e = Emission::new("walk");
    meta_params(&mut e, &pr);
    e.meta.insert("seed".into(), cfg.seed.into());
    e.meta.insert("horizon".into(), horizon.to_string().into());
    e.meta.insert("lambda".into(), scale.lambda.into());
    for stream in 0..paths {
        let path = sample_embedded_path(&horizon, &scale, &law, cfg.seed, stream)?;
        let mut t = Table::new(format!("walk_{stream}"), &["stepIndex", "time", "residue", "digitString"]);
        for (n, (&s, time)) in path.steps().iter().zip(path.times()).enumerate() {
            let digits = Digits::from_residue(s, pr.p(), pr.m()).to_digit_string();
            t.push(vec![(n as u64).into(), time.to_string().into(), s.into(), digits.into()]);
        }
        e.tables.push(t);
    }
    Ok(e)
}

pub fn pmf(cfg: &RunConfig) -> Result<Emission, CliError> {
    let pr = cfg.params()?;
    let steps = cfg.steps.clone().unwrap_or_else(|| vec![1]);
    let mut t = Table::new("pmf", &["n", "valuationClass", "norm", "densityValue", "pmfPerElement", "classMass"]);
    for &n in &steps {
        let d = nstep_density(n, &pr)?;
        let pmf = d.to_pmf();
        let masses = d.class_masses();
        for v in 0..=pr.m() {
            let norm = if v == pr.m() { 0.0 } else { pr.pow(-(v as f64)) };
            t.push(vec![
                n.into(),
                v.into(),
                norm.into(),
                d.at_class(v).into(),
                pmf.at_class(v).into(),
                masses[v as usize].into(),
            ]);
        }
    }
    let mut e = Emission::new("pmf");
    meta_params(&mut e, &pr);
    e.tables.push(t);
    Ok(e)
}

pub fn kernel(cfg: &RunConfig) -> Result<Emission, CliError> {
    let pr = cfg.params()?;
    let times = times_or(cfg, &[Rational64::from_integer(1)]);
    positive_times(&times)?;
    let k = LimitKernel::with_convention(&pr, cfg.convention);
    let cache = KernelCache::new();
    let mut t = Table::new("kernel", &["t", "j", "density", "ballMass", "tailBound"]);
    for &time in &times {
        let table = cache.get(&k, time, pr.m());
        for (j, d) in table.density.iter().enumerate() {
            t.push(vec![
                time.to_string().into(),
                (j as u64).into(),
                (*d).into(),
                table.ball_mass[j].into(),
                table.ball_mass[j + 1].into(),
            ]);
        }
    }
    let mut e = Emission::new("kernel");
    meta_params(&mut e, &pr);
    e.meta.insert("convention".into(), serde_json::to_value(cfg.convention).expect("convention serializes"));
    e.meta.insert("beta".into(), k.beta().into());
    e.tables.push(t);
    Ok(e)
}

/// Returns the emission and whether every row passed.
pub fn moments(cfg: &RunConfig) -> Result<(Emission, bool), CliError> {
    let pr = cfg.params()?;
    let steps = cfg.steps.clone().unwrap_or_else(|| (1..=64).collect());
    let orders = cfg.r.clone().unwrap_or_else(|| vec![pr.b() / 2.0]);
    let mut t = Table::new("moments", &["n", "r", "exactMoment", "bound", "pass", "displayedBound"]);
    let mut all = true;
    for &r in &orders {
        for &n in &steps {
            let exact = exact_moment(n, r, &pr)?;
            let bound = moment_bound(n, r, &pr)?;
            let pass = exact <= bound.value;
            all &= pass;
            t.push(vec![
                n.into(),
                r.into(),
                exact.into(),
                bound.value.into(),
                pass.into(),
                bound.displayed_value.into(),
            ]);
        }
    }
    let mut e = Emission::new("moments");
    meta_params(&mut e, &pr);
    e.tables.push(t);
    Ok((e, all))
}

pub fn converge_config(cfg: &RunConfig) -> Result<ConvergenceConfig, CliError> {
    let mut c = ConvergenceConfig {
        p: cfg.p,
        b: cfg.b,
        diffusion: cfg.diffusion,
        convention: cfg.convention,
        seed: cfg.seed,
        ..ConvergenceConfig::default()
    };
    if let Some(range) = &cfg.m_range {
        c.m_range = range.clone();
    }
    if let Some(times) = &cfg.times {
        positive_times(times)?;
        c.times = times.clone();
    }
    if let Some(n) = cfg.samples {
        c.samples = n;
    }
    if let Some(tol) = cfg.tol {
        c.tol = tol;
    }
    if let Some(r) = &cfg.r {
        c.moment_orders = r.iter().map(|r| r / cfg.b).collect();
    }
    if let Some(s) = &cfg.s {
        c.holder_exponents = s.clone();
    }
    Ok(c)
}

pub fn converge(cfg: &RunConfig) -> Result<(Emission, ConvergenceReport), CliError> {
    let report = run_convergence(&converge_config(cfg)?)?;
    let mut e = Emission::new("converge");
    e.document = Some(serde_json::to_value(&report).expect("report serializes"));

    let mut per_m = Table::new("per_m", &["m", "t", "steps", "epsL1", "zeroTerm", "tailBound", "supGap"]);
    for g in &report.per_m {
        per_m.push(vec![
            g.m.into(),
            g.t.to_string().into(),
            g.steps.into(),
            g.eps_l1.into(),
            g.zero_term.into(),
            g.tail_bound.into(),
            g.sup_density_gap.into(),
        ]);
    }
    let mut fdd = Table::new("fdd", &["history", "m", "discrete", "limit", "gap"]);
    for r in &report.fdd {
        fdd.push(vec![r.history.as_str().into(), r.m.into(), r.discrete.into(), r.limit.into(), r.gap.into()]);
    }
    let mut tv = Table::new("tv", &["m", "t", "resolution", "tv"]);
    for r in &report.tv {
        tv.push(vec![r.m.into(), r.t.to_string().into(), r.resolution.into(), r.tv.into()]);
    }
    let checks = |name: &str, rows: &[padic_walk::convergence::BoundCheck]| {
        let mut t = Table::new(name, &["m", "t", "order", "lhs", "rhs", "pass"]);
        for c in rows {
            t.push(vec![c.m.into(), c.t.into(), c.order.into(), c.lhs.into(), c.rhs.into(), c.pass.into()]);
        }
        t
    };
    let mut mc = Table::new("mc", &["m", "seed", "samples", "statistic", "df", "pValue", "rejected", "maxAbsZ"]);
    for r in &report.mc {
        let c = &r.chi_square;
        mc.push(vec![
            r.m.into(),
            r.seed.into(),
            c.samples.into(),
            c.statistic.into(),
            c.df.into(),
            c.p_value.into(),
            c.rejected.into(),
            r.max_abs_z.into(),
        ]);
    }
    let mut assertions = Table::new("assertions", &["name", "status", "detail"]);
    for a in &report.assertions {
        let status = serde_json::to_value(a.status).expect("status serializes");
        assertions.push(vec![
            a.name.as_str().into(),
            status.as_str().unwrap_or_default().into(),
            a.detail.as_str().into(),
        ]);
    }
    e.tables = vec![
        per_m,
        fdd,
        tv,
        checks("holder", &report.holder),
        checks("moment_scaling", &report.moments.scaling),
        checks("chentsov", &report.moments.chentsov),
        mc,
        assertions,
    ];
    e.meta.insert("seed".into(), Value::from(report.seed));
    Ok((e, report))
}
