//! Event-driven simulation of the bivariate compound Poisson process
//! `(N_t, Y_t)` with jumps `(1,0)`, `(0,1)`, `(1,1)` at rates `u`, `v`, `w`.
//!
//! A path is simulated jump by jump until `N` has jumped `horizon` times,
//! accumulating `int c^{-N_{s-}} dY_s`, which is a finite sum between jumps.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mu::{mu_mean, mu_sample, SeriesSampler};
use crate::params::{normalize, RawRates, Scale};
use crate::rho::{default_kmax, rho_pmf, DEFAULT_TAIL};
use crate::stats::{chi_squared, ks_two_sample, mean_and_stderr, seeded_rng, tv_distance, ChiSquaredResult, KsResult};

/// Minimum sample size for the validation reports.
pub const MIN_VALIDATION_SAMPLES: usize = 10_000;

/// Random stream of the series sampler in [`validate_series_equivalence`];
/// paths use streams `0, 1, 2, ...`.
const SERIES_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mark {
    /// `(1, 0)`: only `N` jumps.
    N,
    /// `(0, 1)`: only `Y` jumps.
    Y,
    /// `(1, 1)`: both jump.
    Both,
}

impl Mark {
    pub fn jumps_n(self) -> bool {
        matches!(self, Mark::N | Mark::Both)
    }

    pub fn jumps_y(self) -> bool {
        matches!(self, Mark::Y | Mark::Both)
    }
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mark::N => "(1,0)",
            Mark::Y => "(0,1)",
            Mark::Both => "(1,1)",
        })
    }
}

/// One jump of a path and the state right after it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpRecord {
    pub time: f64,
    pub mark: Mark,
    pub n: u64,
    pub y: u64,
    pub integral: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathResult {
    /// `Y` at the first jump time `T` of `N`.
    pub y_at_t: u64,
    /// `sum c^{-N_{s-}}` over the `Y` jumps before `N` reaches the horizon.
    pub partial_integral: f64,
    pub jumps_used: u64,
    pub y_jumps: u64,
    pub end_time: f64,
    /// Expected size of the neglected remainder, `E[rho] c^{-horizon} c / (c - 1)`.
    pub truncation_bound: f64,
}

struct PathSimulator {
    total_rate: f64,
    p: f64,
    pq: f64,
    inv_c: f64,
}

impl PathSimulator {
    fn new(raw: &RawRates, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 1.0) {
            return Err(Error::InvalidC(c.to_string()));
        }
        let (p, q, _) = raw.mark_probabilities();
        Ok(PathSimulator { total_rate: raw.total(), p, pq: p + q, inv_c: 1.0 / c })
    }

    fn mark(&self, rng: &mut ChaCha8Rng) -> Mark {
        let u: f64 = rng.random();
        if u < self.p {
            Mark::N
        } else if u < self.pq {
            Mark::Y
        } else {
            Mark::Both
        }
    }

    fn waiting_time(&self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        -u.ln() / self.total_rate
    }

    fn run(&self, horizon: u64, rng: &mut ChaCha8Rng, mut trace: Option<&mut Vec<JumpRecord>>) -> PathResult {
        let (mut time, mut n, mut y) = (0.0, 0u64, 0u64);
        let mut weight = 1.0; // c^{-N_{s-}}
        let mut integral = 0.0;
        let mut y_at_t = None;
        let mut jumps = 0u64;
        while n < horizon {
            time += self.waiting_time(rng);
            let mark = self.mark(rng);
            jumps += 1;
            if mark.jumps_y() {
                y += 1;
                integral += weight;
            }
            if mark.jumps_n() {
                if n == 0 {
                    y_at_t = Some(y);
                }
                n += 1;
                weight *= self.inv_c;
            }
            if let Some(trace) = trace.as_deref_mut() {
                trace.push(JumpRecord { time, mark, n, y, integral });
            }
        }
        PathResult {
            y_at_t: y_at_t.unwrap_or(y),
            partial_integral: integral,
            jumps_used: jumps,
            y_jumps: y,
            end_time: time,
            truncation_bound: 0.0,
        }
    }
}

fn remainder_bound(raw: &RawRates, c: f64, horizon: u64) -> f64 {
    let (p, q, r) = raw.mark_probabilities();
    // E[rho] = (q + r) / (1 - q) = (q + r) / (p + r)
    let mean = (q + r) / (p + r);
    mean * c.powf(-(horizon as f64)) * c / (c - 1.0)
}

/// Simulates one path on random stream `stream` of `seed`, optionally
/// recording every jump.
pub fn simulate_path_on_stream(
    raw: &RawRates,
    c: f64,
    horizon: u64,
    seed: u64,
    stream: u64,
    trace: Option<&mut Vec<JumpRecord>>,
) -> Result<PathResult> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("the horizon must be >= 1 jumps of N".into()));
    }
    let sim = PathSimulator::new(raw, c)?;
    let mut rng = seeded_rng(seed, stream);
    let mut result = sim.run(horizon, &mut rng, trace);
    result.truncation_bound = remainder_bound(raw, c, horizon);
    Ok(result)
}

/// Simulates a path until `N` has jumped `horizon` times.
///
/// `r = 1` (`u = v = 0`) is accepted here as a diagnostic, although no
/// [`crate::params::ModelParams`] exists for it.
pub fn simulate_path(raw: &RawRates, c: f64, horizon: u64, seed: u64) -> Result<PathResult> {
    simulate_path_on_stream(raw, c, horizon, seed, 0, None)
}

/// `(N_t, Y_t)` at a fixed time `t`.
pub fn counts_at_time(raw: &RawRates, t: f64, seed: u64, stream: u64) -> Result<(u64, u64)> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t = {t} must be finite and >= 0")));
    }
    let sim = PathSimulator::new(raw, 2.0)?;
    let mut rng = seeded_rng(seed, stream);
    let (mut time, mut n, mut y) = (0.0, 0, 0);
    loop {
        time += sim.waiting_time(&mut rng);
        if time > t {
            return Ok((n, y));
        }
        let mark = sim.mark(&mut rng);
        n += u64::from(mark.jumps_n());
        y += u64::from(mark.jumps_y());
    }
}

/// Number of `N` jumps needed for the series remainder to drop below
/// `1e-12 max(1, E[rho])`: the series depth plus one.
pub fn default_horizon(raw: &RawRates, c: f64) -> u64 {
    let (p, q, r) = raw.mark_probabilities();
    let mean = (q + r) / (p + r);
    ((1e12 * mean.max(1.0)).ln() / c.ln()).ceil().max(1.0) as u64 + 1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnovationReport {
    pub nsamples: usize,
    /// `counts[k]` paths had `Y_T = k`.
    pub counts: Vec<u64>,
    pub tv_distance: f64,
    pub chi_squared: ChiSquaredResult,
    pub empirical_p0: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

fn check_samples(nsamples: usize) -> Result<()> {
    if nsamples < MIN_VALIDATION_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "nsamples = {nsamples} is below the minimum of {MIN_VALIDATION_SAMPLES}"
        )));
    }
    Ok(())
}

/// Compares the law of `Y_T` over `nsamples` simulated paths with `rho_{q,r}`.
pub fn validate_innovation_law(raw: &RawRates, c: f64, nsamples: usize, seed: u64) -> Result<InnovationReport> {
    check_samples(nsamples)?;
    let params = normalize(raw, Scale::float(c)?)?;
    let mut counts: Vec<u64> = Vec::new();
    for i in 0..nsamples {
        let y = simulate_path_on_stream(raw, c, 1, seed, i as u64, None)?.y_at_t as usize;
        if y >= counts.len() {
            counts.resize(y + 1, 0);
        }
        counts[y] += 1;
    }
    let kmax = default_kmax(params.q(), DEFAULT_TAIL).max(counts.len());
    let pmf = rho_pmf(&params, kmax);
    Ok(InnovationReport {
        nsamples,
        tv_distance: tv_distance(&counts, &pmf),
        chi_squared: chi_squared(&counts, &pmf),
        empirical_p0: counts[0] as f64 / nsamples as f64,
        counts,
        p: params.p(),
        q: params.q(),
        r: params.r(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesReport {
    pub nsamples: usize,
    pub horizon: u64,
    pub ks: KsResult,
    pub path_mean: f64,
    pub path_stderr: f64,
    pub series_mean: f64,
    pub series_stderr: f64,
    /// `E[mu] = E[rho] c / (c - 1)`.
    pub mu_mean: f64,
}

/// Compares path integrals over a deep horizon with draws of the random
/// series `sum c^{-n} U_n` by a two-sample Kolmogorov-Smirnov test.
pub fn validate_series_equivalence(raw: &RawRates, c: f64, nsamples: usize, seed: u64) -> Result<SeriesReport> {
    check_samples(nsamples)?;
    let horizon = default_horizon(raw, c);
    let paths: Vec<f64> = (0..nsamples)
        .map(|i| simulate_path_on_stream(raw, c, horizon, seed, i as u64, None).map(|r| r.partial_integral))
        .collect::<Result<_>>()?;
    let depth = horizon as usize - 1;
    let (series, mean) = match normalize(raw, Scale::float(c)?) {
        Ok(params) => {
            let sampler = SeriesSampler::new(&params, seed).with_depth(depth)?.with_stream(SERIES_STREAM);
            (mu_sample(&sampler, nsamples), mu_mean(&params))
        }
        Err(Error::DegenerateModel) => {
            // rho = delta_1: the series is deterministic.
            let value = (0..=depth).rev().fold(0.0, |acc, _| 1.0 + acc / c);
            (vec![value; nsamples], c / (c - 1.0))
        }
        Err(e) => return Err(e),
    };
    let (path_mean, path_stderr) = mean_and_stderr(&paths);
    let (series_mean, series_stderr) = mean_and_stderr(&series);
    Ok(SeriesReport {
        nsamples,
        horizon,
        ks: ks_two_sample(&paths, &series),
        path_mean,
        path_stderr,
        series_mean,
        series_stderr,
        mu_mean: mean,
    })
}
