use std::fmt::Write as _;

use num_rational::Rational64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{StepLaw, StepTime, TimeScale};
use crate::error::{domain, Result};
use crate::padic::{Digits, Group, GroupElement};
use crate::rng::stream;

/// Draws per random stream in the chunked Monte Carlo samplers.
pub const CHUNK: u64 = 1 << 16;

impl StepLaw {
    /// One step as a residue: inverse-CDF over circles, then uniform on the circle.
    pub fn sample_residue<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let m = self.params().m();
        let p = self.params().p();
        let u: f64 = rng.gen();
        let cdf = self.cdf();
        let ell = cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1) as u32 + 1;
        // Valuation m - l: that digit uniform in 1..p-1, the l - 1 digits above it uniform.
        let low = p.pow(m - ell);
        let lead = rng.gen_range(1..p);
        let high = rng.gen_range(0..p.pow(ell - 1));
        low * (lead + p * high)
    }
}

/// One step `X` of the walk.
pub fn sample_step<R: Rng + ?Sized>(law: &StepLaw, rng: &mut R) -> GroupElement {
    let residue = law.sample_residue(rng);
    law.params().group().element(residue).expect("sampled residue is reduced")
}

/// Frequencies of sampled steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepCounts {
    pub draws: u64,
    /// Counts per valuation class, zero class last.
    pub per_class: Vec<u64>,
    /// Counts per residue; empty when `p^m` is too large to tabulate.
    pub per_element: Vec<u64>,
}

const TABULATE_LIMIT: u64 = 1 << 16;

impl StepCounts {
    fn empty(group: &Group) -> Self {
        let per_element =
            if group.modulus() <= TABULATE_LIMIT { vec![0; group.modulus() as usize] } else { Vec::new() };
        StepCounts { draws: 0, per_class: vec![0; group.m() as usize + 1], per_element }
    }

    fn record(&mut self, group: &Group, residue: u64) {
        self.draws += 1;
        self.per_class[group.class_of(residue) as usize] += 1;
        if !self.per_element.is_empty() {
            self.per_element[residue as usize] += 1;
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.draws += other.draws;
        for (a, b) in self.per_class.iter_mut().zip(other.per_class) {
            *a += b;
        }
        for (a, b) in self.per_element.iter_mut().zip(other.per_element) {
            *a += b;
        }
        self
    }
}

fn chunked_counts(
    group: Group,
    total: u64,
    seed: u64,
    draw: impl Fn(&mut crate::rng::StreamRng) -> u64 + Sync,
) -> StepCounts {
    let chunks = total.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, c);
            let mut counts = StepCounts::empty(&group);
            let len = CHUNK.min(total - c * CHUNK);
            for _ in 0..len {
                counts.record(&group, draw(&mut rng));
            }
            counts
        })
        // Integer addition is associative, so the split does not affect the result.
        .reduce(|| StepCounts::empty(&group), StepCounts::merge)
}

/// Tallies `draws` independent steps. Chunk `c` uses stream `(seed, c)`.
pub fn sample_step_counts(law: &StepLaw, draws: u64, seed: u64) -> StepCounts {
    chunked_counts(law.params().group(), draws, seed, |rng| law.sample_residue(rng))
}

/// Tallies the endpoint `S_n` of `samples` independent walks.
pub fn sample_endpoint_counts(law: &StepLaw, n: u64, samples: u64, seed: u64) -> StepCounts {
    let q = law.params().modulus();
    chunked_counts(law.params().group(), samples, seed, |rng| {
        (0..n).fold(0u64, |s, _| ((s as u128 + law.sample_residue(rng) as u128) % q as u128) as u64)
    })
}

/// A sampled walk `S_0..S_n` and its embedding into `Z_p` under the time scale.
#[derive(Debug, Clone)]
pub struct PathSample {
    pub seed: u64,
    pub stream: u64,
    group: Group,
    steps: Vec<u64>,
    times: Vec<StepTime>,
}

impl PathSample {
    pub fn group(&self) -> Group {
        self.group
    }

    /// Partial sums `S_0 = 0, S_1, ..., S_n` as residues.
    pub fn steps(&self) -> &[u64] {
        &self.steps
    }

    /// Jump times `n tau` of the embedded path.
    pub fn times(&self) -> &[StepTime] {
        &self.times
    }

    /// `Y_t = Gamma_m(S_{floor(t lambda)})`.
    pub fn embedded_at(&self, t: &Rational64, scale: &TimeScale) -> Result<Digits> {
        let n = scale.steps_at(t)? as usize;
        match self.steps.get(n) {
            Some(&s) => Ok(Digits::from_residue(s, self.group.p(), self.group.m())),
            None => domain(format!("time {t} lies beyond the sampled horizon")),
        }
    }

    /// CSV with columns `stepIndex,time,residue,digitString`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stepIndex,time,residue,digitString\n");
        for (n, (&s, t)) in self.steps.iter().zip(&self.times).enumerate() {
            let digits = Digits::from_residue(s, self.group.p(), self.group.m());
            let _ = writeln!(out, "{n},{t},{s},{}", digits.to_digit_string());
        }
        out
    }
}

/// Samples `S_0..S_{floor(T lambda)}` on stream `(seed, stream_index)`.
pub fn sample_embedded_path(
    horizon: &Rational64,
    scale: &TimeScale,
    law: &StepLaw,
    seed: u64,
    stream_index: u64,
) -> Result<PathSample> {
    if *horizon.numer() <= 0 {
        return domain(format!("horizon must be positive, got {horizon}"));
    }
    let n = scale.steps_at(horizon)?;
    let group = law.params().group();
    let q = group.modulus();
    let mut rng = stream(seed, stream_index);
    let mut steps = Vec::with_capacity(n as usize + 1);
    steps.push(0);
    let mut s = 0u64;
    for _ in 0..n {
        s = ((s as u128 + law.sample_residue(&mut rng) as u128) % q as u128) as u64;
        steps.push(s);
    }
    let times = (0..=n).map(|k| scale.time_of_step(k)).collect();
    Ok(PathSample { seed, stream: stream_index, group, steps, times })
}
