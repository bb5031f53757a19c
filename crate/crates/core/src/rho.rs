//! The innovation law `rho_{q,r}`: the law of `Y` at the first jump time of `N`.
//!
//! For `q > 0` it is the signed mixture `(1 + r/q) sigma_q - (r/q) delta_0` of
//! a geometric law `sigma_q` and a point mass, with
//!
//! ```text
//! P(Y_T = 0) = p,    P(Y_T = k) = q^(k-1) (r + q p)   (k >= 1),
//! ```
//!
//! and for `q = 0` it is Bernoulli with parameter `r`. Its characteristic
//! function is `(p + r e^{iz}) / (1 - q e^{iz})`.
//!
//! When `rho` is infinitely divisible (`p = 0`, or `r <= pq`) the convolution
//! powers `rho^{t*}` are available for every real `t > 0`.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Geometric tails are enumerated until they fall below this mass.
pub const DEFAULT_TAIL: f64 = 1e-14;

/// Upper limit on the number of enumerated atoms.
pub const MAX_ATOMS: usize = 10_000_000;

/// A probability mass function on `shift + {0, 1, 2, ...}`.
///
/// `masses[k]` is the mass of `shift + k`; `tail` is the mass beyond the last
/// enumerated atom, kept explicitly rather than dropped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretePmf {
    masses: Vec<f64>,
    tail: f64,
    shift: f64,
}

impl DiscretePmf {
    /// Builds a pmf from enumerated masses; the tail is whatever is missing.
    pub fn from_masses(masses: Vec<f64>) -> Result<Self> {
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidArgument("masses must be finite and nonnegative".into()));
        }
        let total: f64 = masses.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!("masses sum to {total} > 1")));
        }
        Ok(DiscretePmf { masses, tail: (1.0 - total).max(0.0), shift: 0.0 })
    }

    fn with_tail(masses: Vec<f64>, tail: f64) -> Self {
        DiscretePmf { masses, tail, shift: 0.0 }
    }

    /// Mass of the atom `shift + k` (0 beyond the enumerated range).
    pub fn mass(&self, k: usize) -> f64 {
        self.masses.get(k).copied().unwrap_or(0.0)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Largest enumerated index.
    pub fn kmax(&self) -> usize {
        self.masses.len().saturating_sub(1)
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Location of the atom with index 0. Nonzero only for the drifted powers
    /// of the shifted geometric law (`p = 0`).
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// `(location, mass)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.masses.iter().enumerate().map(move |(k, &m)| (self.shift + k as f64, m))
    }

    pub fn enumerated_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `-sum m log m` over the enumerated atoms (natural log).
    pub fn entropy(&self) -> f64 {
        self.masses.iter().map(|&m| neg_xlogx(m)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(x, m)| x * m).sum()
    }

    /// Convolution of the enumerated parts. Shifts add.
    pub fn convolve(&self, other: &DiscretePmf) -> DiscretePmf {
        let n = self.masses.len() + other.masses.len() - 1;
        let mut out = vec![0.0; n];
        for (i, &a) in self.masses.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.masses.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        let total: f64 = out.iter().sum();
        DiscretePmf { masses: out, tail: (1.0 - total).max(0.0), shift: self.shift + other.shift }
    }

    /// `sum_k mass(k) e^{i (shift + k) z}`.
    pub fn fourier(&self, z: f64) -> Complex64 {
        self.iter().map(|(x, m)| Complex64::from_polar(m, x * z)).sum()
    }
}

/// `-x ln x` with the convention `0 ln 0 = 0`.
pub(crate) fn neg_xlogx(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.ln()
    } else {
        0.0
    }
}

/// Smallest `kmax` with `q^kmax < tail` (1 when `q = 0`).
pub fn default_kmax(q: f64, tail: f64) -> usize {
    if q <= 0.0 {
        return 1;
    }
    let k = (tail.ln() / q.ln()).ceil();
    if k.is_finite() {
        (k as usize).clamp(1, MAX_ATOMS)
    } else {
        MAX_ATOMS
    }
}

/// The pmf of `rho_{q,r}` on `0..=kmax`.
pub fn rho_pmf(params: &ModelParams, kmax: usize) -> DiscretePmf {
    let (p, q, r) = (params.p(), params.q(), params.r());
    if q == 0.0 {
        // Bernoulli(r).
        return if kmax == 0 { DiscretePmf::with_tail(vec![p], r) } else { DiscretePmf::with_tail(vec![p, r], 0.0) };
    }
    let step = r + q * p;
    let mut masses = Vec::with_capacity(kmax + 1);
    masses.push(p);
    let mut qk = 1.0;
    for _ in 1..=kmax {
        masses.push(qk * step);
        qk *= q;
    }
    // sum_{k > kmax} q^(k-1) (r + qp) = q^kmax (r + qp) / (1 - q)
    let tail = qk * step / (1.0 - q);
    DiscretePmf::with_tail(masses, tail)
}

/// Draws from `rho_{q,r}` by inversion.
///
/// `Y = K + B` with `K` geometric (`P(K >= k) = q^k`) and an independent
/// `B ~ Bernoulli(r / (p + r))`; for `q = 0` this is `Bernoulli(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoSampler {
    ln_q: f64,
    shift_prob: f64,
}

impl RhoSampler {
    pub fn new(params: &ModelParams) -> Self {
        let (p, q, r) = (params.p(), params.q(), params.r());
        RhoSampler { ln_q: q.ln(), shift_prob: r / (p + r) }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let k = if self.ln_q == f64::NEG_INFINITY {
            0
        } else {
            // 1 - U is uniform on (0, 1], so the logarithm is finite.
            let u: f64 = 1.0 - rng.random::<f64>();
            (u.ln() / self.ln_q).floor() as u64
        };
        k + u64::from(rng.random::<f64>() < self.shift_prob)
    }
}

/// A characteristic function `z -> E e^{izX}`.
pub trait CharacteristicFunction {
    fn eval(&self, z: f64) -> Complex64;
}

/// `z -> (p + r e^{iz}) / (1 - q e^{iz})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoCf {
    p: f64,
    q: f64,
    r: f64,
}

impl CharacteristicFunction for RhoCf {
    fn eval(&self, z: f64) -> Complex64 {
        let e = Complex64::cis(z);
        (self.p + self.r * e) / (1.0 - self.q * e)
    }
}

impl<F: Fn(f64) -> Complex64> CharacteristicFunction for F {
    fn eval(&self, z: f64) -> Complex64 {
        self(z)
    }
}

pub fn rho_cf(params: &ModelParams) -> RhoCf {
    RhoCf { p: params.p(), q: params.q(), r: params.r() }
}

/// Entropy of `rho_{q,r}` in nats:
///
/// ```text
/// H = (q + r) (log 1/(1-q) + 1/(1-q) log 1/q - log (q+r)/q) + p log 1/p
/// ```
///
/// and the binary entropy of `r` when `q = 0`.
pub fn rho_entropy(params: &ModelParams) -> f64 {
    let (p, q, r) = (params.p(), params.q(), params.r());
    if q == 0.0 {
        return neg_xlogx(p) + neg_xlogx(r);
    }
    let s = q + r;
    s * ((1.0 / (1.0 - q)).ln() + (1.0 / q).ln() / (1.0 - q) - (s / q).ln()) + neg_xlogx(p)
}

/// Levy coefficients `a_k = q^k (1 - (-r/(pq))^k) / k` of an infinitely
/// divisible `rho` with `p > 0`, for `k = 1..=kmax` (index 0 holds `a_1`).
fn id_levy_coefficients(p: f64, q: f64, r: f64, kmax: usize) -> Vec<f64> {
    let neg_f = -r / (p * q);
    let mut out = Vec::with_capacity(kmax);
    let (mut qk, mut fk) = (1.0, 1.0);
    for k in 1..=kmax {
        qk *= q;
        fk *= neg_f;
        out.push(qk * (1.0 - fk) / k as f64);
    }
    out
}

/// Convolution power `rho^{t*}` on `0..=kmax` (or on `t + {0..=kmax}` when `p = 0`).
///
/// Uses the negative binomial closed form when `r = 0` (and, shifted by `t`,
/// when `p = 0`), and otherwise the compound Poisson recursion
/// `n p_n = t sum_{k=1}^n k a_k p_{n-k}` started from `p_0 = p^t`.
pub fn rho_power_pmf(params: &ModelParams, t: f64, kmax: usize) -> Result<DiscretePmf> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!("t = {t} must be a finite positive real")));
    }
    if !params.is_infinitely_divisible() {
        return Err(Error::NotInfinitelyDivisible { r: params.r(), pq: params.p() * params.q() });
    }
    let (p, q, r) = (params.p(), params.q(), params.r());
    let mut pmf = if params.p_is_zero() {
        let mut nb = negative_binomial(t, 1.0 - q, kmax);
        nb.shift = t;
        nb
    } else if r == 0.0 {
        negative_binomial(t, p, kmax)
    } else {
        // k a_k <= 2 q^k, so terms past q^k < 1e-20 change no mass at double precision.
        let terms = default_kmax(q, 1e-20).min(kmax);
        compound_poisson(t, p, &id_levy_coefficients(p, q, r, terms), kmax)
    };
    pmf.tail = (1.0 - pmf.enumerated_mass()).max(0.0);
    Ok(pmf)
}

/// `binom(-t, k) success^t (success - 1)^k` via the product
/// `prod_{j<k} (t + j) q / (j + 1)`, in log space so large `t` does not underflow.
fn negative_binomial(t: f64, success: f64, kmax: usize) -> DiscretePmf {
    let q = 1.0 - success;
    let mut masses = Vec::with_capacity(kmax + 1);
    let mut log_mass = t * success.ln();
    masses.push(log_mass.exp());
    let log_q = q.ln();
    for j in 0..kmax {
        log_mass += (t + j as f64).ln() + log_q - ((j + 1) as f64).ln();
        masses.push(log_mass.exp());
    }
    DiscretePmf::with_tail(masses, 0.0)
}

/// Panjer-type recursion for a compound Poisson law on the integers with
/// Levy masses `levy[k-1] = a_k` (zero beyond the slice), total intensity `t sum a_k`, and
/// `p_0 = p^t`. The recursion is linear, so it runs on a rescaled vector to
/// survive large `t`.
fn compound_poisson(t: f64, p: f64, levy: &[f64], kmax: usize) -> DiscretePmf {
    let weighted: Vec<f64> = levy.iter().enumerate().map(|(i, a)| (i + 1) as f64 * a).collect();
    let mut scaled = Vec::with_capacity(kmax + 1);
    let mut log_scale = 0.0f64;
    scaled.push(1.0f64);
    for n in 1..=kmax {
        let acc: f64 = (1..=n.min(weighted.len())).map(|k| weighted[k - 1] * scaled[n - k]).sum();
        let value = t * acc / n as f64;
        scaled.push(value);
        if value > 1e250 {
            scaled.iter_mut().for_each(|x| *x *= 1e-250);
            log_scale += 250.0 * std::f64::consts::LN_10;
        }
    }
    let base = t * p.ln() + log_scale;
    let masses = scaled.iter().map(|&x| if x > 0.0 { (x.ln() + base).exp() } else { 0.0 }).collect();
    DiscretePmf::with_tail(masses, 0.0)
}

/// `rho^{t*}` enumerated until the missing mass is below `tail`.
pub fn rho_power_pmf_to_tail(params: &ModelParams, t: f64, tail: f64) -> Result<DiscretePmf> {
    let q = params.q();
    let mean = params.innovation_mean();
    let var = 2.0 * q / ((1.0 - q) * (1.0 - q)) + mean;
    let mut kmax =
        (t * mean + 12.0 * (t * var).sqrt() + default_kmax(q, tail) as f64 + 16.0).min(MAX_ATOMS as f64) as usize;
    loop {
        let pmf = rho_power_pmf(params, t, kmax)?;
        if pmf.tail() < tail || kmax >= MAX_ATOMS {
            return Ok(pmf);
        }
        kmax = (kmax * 2).min(MAX_ATOMS);
    }
}

/// Entropy of `rho^{t*}` with, when available, the closed-form upper bound
/// for the independent case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerEntropy {
    pub t: f64,
    pub entropy: f64,
    /// Mass not enumerated when summing the entropy.
    pub tail: f64,
    /// `t [ (1/p)(1 + 2 log 1/p) + (q/p) log 1/t ]`, valid for `r = 0`, `0 < t <= 1`.
    pub upper_bound: Option<f64>,
}

pub fn rho_power_entropy(params: &ModelParams, t: f64) -> Result<PowerEntropy> {
    let pmf = rho_power_pmf_to_tail(params, t, DEFAULT_TAIL)?;
    let (p, q) = (params.p(), params.q());
    let upper_bound = (params.r() == 0.0 && p > 0.0 && q > 0.0 && t <= 1.0)
        .then(|| t * ((1.0 + 2.0 * (1.0 / p).ln()) / p + q / p * (1.0 / t).ln()));
    Ok(PowerEntropy { t, entropy: pmf.entropy(), tail: pmf.tail(), upper_bound })
}
