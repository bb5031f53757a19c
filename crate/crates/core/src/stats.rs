//! Seeded random streams and the goodness-of-fit statistics used to validate
//! samplers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::rho::DiscretePmf;

/// A ChaCha8 generator for `(seed, stream)`; distinct streams are independent.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        // The alternating series converges slowly here; the value is 1 to
        // double precision anyway.
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
///
/// Ties (within and across samples) are handled by stepping both empirical
/// distribution functions past a common value before comparing.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty(), "KS test needs two nonempty samples");
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n1, n2) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n1 && j < n2 {
        let v = x[i].min(y[j]);
        while i < n1 && x[i] <= v {
            i += 1;
        }
        while j < n2 && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    let sqrt_ne = ne.sqrt();
    let lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
    KsResult { statistic: d, p_value: kolmogorov_sf(lambda), n1, n2 }
}

/// Total variation distance between empirical frequencies and a pmf,
/// `counts[k]` being the number of observations equal to `shift + k`.
pub fn tv_distance(counts: &[u64], pmf: &DiscretePmf) -> f64 {
    let n: u64 = counts.iter().sum();
    let n = n as f64;
    let len = counts.len().max(pmf.masses().len());
    let mut total = 0.0;
    for k in 0..len {
        let f = counts.get(k).copied().unwrap_or(0) as f64 / n;
        total += (f - pmf.mass(k)).abs();
    }
    0.5 * (total + pmf.tail())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquaredResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of cells with expected count at least 5 (the rest are pooled).
    pub cells: usize,
}

/// Pearson chi-squared test of `counts` against `pmf`. Cells with expected
/// count below 5 are pooled into one remainder cell.
pub fn chi_squared(counts: &[u64], pmf: &DiscretePmf) -> ChiSquaredResult {
    let n: u64 = counts.iter().sum();
    let n = n as f64;
    let len = counts.len().max(pmf.masses().len());
    let (mut statistic, mut cells) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp) = (0.0, pmf.tail() * n);
    for k in 0..len {
        let obs = counts.get(k).copied().unwrap_or(0) as f64;
        let exp = pmf.mass(k) * n;
        if exp >= 5.0 {
            statistic += (obs - exp).powi(2) / exp;
            cells += 1;
        } else {
            pooled_obs += obs;
            pooled_exp += exp;
        }
    }
    if pooled_exp >= 5.0 {
        statistic += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    }
    let dof = cells.saturating_sub(1);
    let p_value = if dof == 0 { 1.0 } else { ChiSquared::new(dof as f64).map(|d| d.sf(statistic)).unwrap_or(f64::NAN) };
    ChiSquaredResult { statistic, dof, p_value, cells }
}

/// Sample mean and the standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}
