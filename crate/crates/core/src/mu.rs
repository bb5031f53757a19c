//! The stationary law `mu_{c,q,r}` of `int_0^inf c^{-N_{s-}} dY_s`.
//!
//! It is the unique solution of `mu^(z) = rho^(z) mu^(z/c)`, i.e.
//! `mu^(z) = prod_{n >= 0} rho^(c^{-n} z)`, and the law of
//! `sum_{n >= 0} c^{-n} U_n` with `U_n` i.i.d. `rho`.
//!
//! When `p > r` the innovation law has the (possibly signed) Levy measure
//! `sum_m a_m delta_m`, so `mu` has `nu = sum_{n, m} a_m delta_{c^{-n} m}`.
//! For rational `c` several pairs `(n, m)` land on the same point and their
//! weights have to be aggregated before the signs can be read off.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::divisibility::levy_coefficients_a;
use crate::error::{Error, Result};
use crate::params::{to_f64, ModelParams};
use crate::rho::{rho_cf, CharacteristicFunction, RhoSampler};
use crate::stats::seeded_rng;

/// Number of factors `rho^(c^{-n} z)`, `n = 0..=N`, that `mu_cf` multiplies.
///
/// Beyond `N` each factor is within `E[rho] |zeta|` of 1, so the remainder
/// deviates from 1 by at most `E[rho] |z| c^{-(N+1)} / (1 - 1/c)`.
pub fn mu_cf_depth(params: &ModelParams, z: f64, tol: f64) -> usize {
    let c = params.c_value();
    let scale = params.innovation_mean() * z.abs() / (1.0 - 1.0 / c);
    if scale < tol {
        return 0;
    }
    // smallest N with scale c^{-(N+1)} < tol
    let n = ((scale / tol).ln() / c.ln()).floor() as usize;
    n.max(1)
}

/// `prod_{n=0}^{N} rho^(c^{-n} z)`, truncated once the remaining factors
/// multiply to within `tol` of 1.
pub fn mu_cf(params: &ModelParams, z: f64, tol: f64) -> Complex64 {
    let depth = mu_cf_depth(params, z, tol.max(f64::MIN_POSITIVE));
    let cf = rho_cf(params);
    let c = params.c_value();
    let mut zeta = z;
    let mut product = Complex64::new(1.0, 0.0);
    for _ in 0..=depth {
        product *= cf.eval(zeta);
        zeta /= c;
    }
    product
}

/// `|mu^(z)| = exp(-sum_{n=0}^{nmax-1} sum_{m=1}^{mmax} (1 - cos(m c^{-n} z)) a_m)`.
///
/// Requires nonnegative `a_m`: `p > 0` with `r <= pq`, or `p = 0`, where
/// `rho` is a shifted geometric law and `a_m = q^m / m` (the shift only
/// changes the phase).
pub fn mu_cf_modulus_exp(params: &ModelParams, z: f64, nmax: usize, mmax: usize) -> Result<f64> {
    let a = if params.p_is_zero() {
        let q = params.q();
        (1..=mmax).map(|m| q.powi(m as i32) / m as f64).collect()
    } else if params.r_le_pq() {
        levy_coefficients_a(params, mmax)?
    } else {
        return Err(Error::NotApplicable("the coefficients a_m change sign when r > pq; use mu_cf".into()));
    };
    let c = params.c_value();
    let mut zeta = z;
    let mut exponent = 0.0;
    for _ in 0..nmax {
        exponent += a.iter().enumerate().map(|(i, am)| (1.0 - ((i + 1) as f64 * zeta).cos()) * am).sum::<f64>();
        zeta /= c;
    }
    Ok((-exponent).exp())
}

/// `E[mu] = E[rho] c / (c - 1)`.
pub fn mu_mean(params: &ModelParams) -> f64 {
    let c = params.c_value();
    params.innovation_mean() * c / (c - 1.0)
}

/// Location of an atom of a signed point measure.
#[derive(Debug, Clone, PartialEq)]
pub enum AtomLocation {
    Exact(BigRational),
    Float(f64),
}

impl AtomLocation {
    pub fn value(&self) -> f64 {
        match self {
            AtomLocation::Exact(x) => to_f64(x),
            AtomLocation::Float(x) => *x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub location: AtomLocation,
    pub weight: f64,
}

impl Serialize for Atom {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(3))?;
        match &self.location {
            AtomLocation::Exact(x) => {
                map.serialize_entry("location_num", &x.numer().to_string())?;
                map.serialize_entry("location_den", &x.denom().to_string())?;
            }
            AtomLocation::Float(x) => map.serialize_entry("location_float", x)?,
        }
        map.serialize_entry("weight", &self.weight)?;
        map.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationMode {
    /// Locations keyed by exact rationals; coinciding points are merged.
    ExactRational,
    /// Every pair `(n, m)` is its own atom (no collisions assumed).
    FloatDistinct,
}

/// The truncation `sum_{n < nmax} sum_{m <= mmax} a_m delta_{c^{-n} m}` of
/// the Levy measure of `mu`, with atoms sorted by location.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignedPointMeasure {
    pub atoms: Vec<Atom>,
    pub aggregation_mode: AggregationMode,
    pub nmax: usize,
    pub mmax: usize,
    /// `sum |weight|` over the truncated atoms.
    pub total_variation: f64,
    #[serde(skip)]
    c: f64,
    #[serde(skip)]
    q: f64,
    #[serde(skip)]
    s: f64,
}

impl SignedPointMeasure {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The atom at (numerically) `x`, if any.
    pub fn atom_near(&self, x: f64) -> Option<&Atom> {
        self.atoms.iter().find(|a| (a.location.value() - x).abs() <= 1e-12 * x.abs().max(1.0))
    }

    /// Bound on the total weight the truncation dropped from the point `x`.
    ///
    /// The dropped pairs `(n, m)` with `c^{-n} m = x` have distinct
    /// `m >= m_lo = min(mmax + 1, x c^nmax)` and `|a_m| <= (q^m + s^m) / m`
    /// with `s = r/p < 1`.
    pub fn tail_bound_at(&self, x: f64) -> f64 {
        let reach = (x * self.c.powi(self.nmax as i32) * (1.0 - 1e-12)).floor();
        let m_lo = (self.mmax as f64 + 1.0).min(reach.max(1.0));
        let geometric = |b: f64| {
            if b <= 0.0 {
                0.0
            } else {
                (m_lo * b.ln()).exp() / (1.0 - b)
            }
        };
        (geometric(self.q) + geometric(self.s)) / m_lo
    }

    /// `exp(sum_atoms w (e^{ixz} - 1))`, the characteristic function of the
    /// infinitely divisible law with this (truncated) Levy measure.
    pub fn cf(&self, z: f64) -> Complex64 {
        let log: Complex64 = self.atoms.iter().map(|a| a.weight * (Complex64::cis(a.location.value() * z) - 1.0)).sum();
        log.exp()
    }
}

/// Builds the truncated Levy measure of `mu`.
///
/// Integer and rational `c` aggregate exactly; float and algebraic `c` keep
/// `nmax * mmax` distinct atoms.
pub fn mu_levy_measure(params: &ModelParams, nmax: usize, mmax: usize) -> Result<SignedPointMeasure> {
    if nmax == 0 || mmax == 0 {
        return Err(Error::InvalidArgument("nmax and mmax must be >= 1".into()));
    }
    if params.p_is_zero() {
        return Err(Error::PZero);
    }
    let (p, r) = (params.p(), params.r());
    if r >= p {
        return Err(Error::DivergentLevySeries { ratio: r / p });
    }
    let a = levy_coefficients_a(params, mmax)?;
    let c = params.c_value();
    let (atoms, aggregation_mode) = match params.c().as_ratio() {
        Some((num, den)) => {
            let num = BigInt::from(num);
            let den = BigInt::from(den);
            let mut merged: BTreeMap<BigRational, f64> = BTreeMap::new();
            let mut scale = BigRational::one();
            for _ in 0..nmax {
                for (i, am) in a.iter().enumerate() {
                    let key = &scale * BigInt::from(i + 1);
                    *merged.entry(key).or_insert(0.0) += am;
                }
                scale *= BigRational::new(den.clone(), num.clone());
            }
            let atoms =
                merged.into_iter().map(|(x, weight)| Atom { location: AtomLocation::Exact(x), weight }).collect();
            (atoms, AggregationMode::ExactRational)
        }
        None => {
            let mut atoms = Vec::with_capacity(nmax * mmax);
            let mut scale = 1.0;
            for _ in 0..nmax {
                for (i, am) in a.iter().enumerate() {
                    atoms.push(Atom { location: AtomLocation::Float((i + 1) as f64 * scale), weight: *am });
                }
                scale /= c;
            }
            atoms.sort_by(|x, y| x.location.value().total_cmp(&y.location.value()));
            (atoms, AggregationMode::FloatDistinct)
        }
    };
    let total_variation = atoms.iter().map(|a: &Atom| a.weight.abs()).sum();
    Ok(SignedPointMeasure { atoms, aggregation_mode, nmax, mmax, total_variation, c, q: params.q(), s: r / p })
}

/// The sign of one atom of the full Levy measure, certified against the
/// truncation tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomCertificate {
    pub location: f64,
    pub weight: f64,
    pub tail_bound: f64,
    pub negative: bool,
}

/// Certifies the sign of the full measure's weight at `x`.
///
/// Fails with [`Error::TruncationTooSmall`] when the truncated weight is not
/// separated from 0 by the tail bound.
pub fn certify_atom(measure: &SignedPointMeasure, x: f64) -> Result<AtomCertificate> {
    let weight = measure.atom_near(x).map_or(0.0, |a| a.weight);
    let tail_bound = measure.tail_bound_at(x);
    if weight.abs() <= tail_bound {
        return Err(Error::TruncationTooSmall { weight, tail_bound });
    }
    Ok(AtomCertificate { location: x, weight, tail_bound, negative: weight < 0.0 })
}

/// Samples `sum_{j=0}^{N} c^{-j} U_j` with `U_j` i.i.d. `rho`.
#[derive(Debug, Clone)]
pub struct SeriesSampler {
    params: ModelParams,
    depth: usize,
    seed: u64,
    stream: u64,
}

impl SeriesSampler {
    /// Depth `N = ceil(ln(1e12 max(1, E[rho])) / ln c)`.
    pub fn new(params: &ModelParams, seed: u64) -> Self {
        let scale = 1e12 * params.innovation_mean().max(1.0);
        let depth = (scale.ln() / params.c().ln()).ceil().max(1.0) as usize;
        SeriesSampler { params: params.clone(), depth, seed, stream: 0 }
    }

    pub fn with_depth(mut self, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidArgument("truncation depth must be >= 1".into()));
        }
        self.depth = depth;
        Ok(self)
    }

    /// The same sampler on an independent random stream.
    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Bound on the dropped remainder `sum_{j > N} c^{-j} U_j`: almost sure
    /// when `q = 0` (then `U_j <= 1`), in expectation otherwise.
    pub fn truncation_bound(&self) -> f64 {
        let c = self.params.c_value();
        let step = if self.params.q_is_zero() { 1.0 } else { self.params.innovation_mean() };
        step * c.powi(-(self.depth as i32)) / (c - 1.0)
    }

    /// An endless, deterministic stream of draws.
    pub fn iter(&self) -> SeriesIter {
        SeriesIter {
            rng: seeded_rng(self.seed, self.stream),
            rho: RhoSampler::new(&self.params),
            inv_c: 1.0 / self.params.c_value(),
            buffer: vec![0; self.depth + 1],
        }
    }
}

pub struct SeriesIter {
    rng: ChaCha8Rng,
    rho: RhoSampler,
    inv_c: f64,
    buffer: Vec<u64>,
}

impl Iterator for SeriesIter {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        for u in self.buffer.iter_mut() {
            *u = self.rho.sample(&mut self.rng);
        }
        // Horner from the deepest term keeps the small terms accurate.
        let x = self.buffer.iter().rev().fold(0.0, |acc, &u| u.to_f64().unwrap_or(f64::MAX) + acc * self.inv_c);
        Some(x)
    }
}

/// `n` draws from `sampler`.
pub fn mu_sample(sampler: &SeriesSampler, n: usize) -> Vec<f64> {
    sampler.iter().take(n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Scale;
    use crate::stats::mean_and_stderr;

    fn params(c: u64, p: f64, q: f64, r: f64) -> ModelParams {
        ModelParams::new(Scale::integer(c).unwrap(), p, q, r).unwrap()
    }

    #[test]
    fn cf_normalised_and_bounded() {
        let m = params(2, 0.3, 0.5, 0.2);
        assert_eq!(mu_cf(&m, 0.0, 1e-12), Complex64::new(1.0, 0.0));
        for k in 0..100 {
            assert!(mu_cf(&m, 0.37 * k as f64, 1e-12).norm() <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn functional_equation() {
        let tol = 1e-12;
        for m in [params(2, 0.3, 0.5, 0.2), params(3, 0.5, 0.0, 0.5), params(5, 0.0, 0.6, 0.4)] {
            let cf = rho_cf(&m);
            let c = m.c_value();
            for k in 0..200 {
                let z = -20.0 + 0.2 * k as f64;
                let residual = (mu_cf(&m, z, tol) - cf.eval(z) * mu_cf(&m, z / c, tol)).norm();
                assert!(residual < 3.0 * tol, "z = {z}: {residual}");
            }
        }
    }

    #[test]
    fn real_zero_when_p_equals_r() {
        let m = params(2, 0.25, 0.5, 0.25);
        assert!(mu_cf(&m, std::f64::consts::PI, 1e-12).norm() < 1e-15);
    }

    #[test]
    fn modulus_from_levy_double_sum() {
        let m = params(2, 0.5, 0.5, 0.0);
        for k in 0..=60 {
            let z = 0.5 * k as f64;
            let product = mu_cf(&m, z, 1e-13).norm();
            let double_sum = mu_cf_modulus_exp(&m, z, 60, 60).unwrap();
            assert!((product - double_sum).abs() < 1e-8, "z = {z}");
        }
        assert_eq!(mu_cf_modulus_exp(&m, 0.0, 10, 10).unwrap(), 1.0);
        let shifted = params(3, 0.0, 0.6, 0.4);
        let z = 1.3;
        let double_sum = mu_cf_modulus_exp(&shifted, z, 60, 100).unwrap();
        assert!((mu_cf(&shifted, z, 1e-13).norm() - double_sum).abs() < 1e-8);
        assert!(matches!(mu_cf_modulus_exp(&params(2, 0.3, 0.5, 0.2), 1.0, 5, 5), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn modulus_does_not_decay_along_integer_powers() {
        let m = params(2, 0.5, 0.5, 0.0);
        let first = mu_cf(&m, 2.0 * std::f64::consts::PI, 1e-12).norm();
        assert!(first > 0.05);
        for k in 1..=20 {
            let z = 2.0 * std::f64::consts::PI * 2f64.powi(k);
            assert!((mu_cf(&m, z, 1e-12).norm() - first).abs() < 1e-9);
        }
    }

    #[test]
    fn aggregated_atom_at_two_is_negative() {
        let m = params(2, 0.3, 0.5, 0.2);
        let nu = mu_levy_measure(&m, 12, 4096).unwrap();
        assert_eq!(nu.aggregation_mode, AggregationMode::ExactRational);
        // Oracle: sum_{j >= 0} a_{2^(j+1)}, every index even so every a negative.
        let a = levy_coefficients_a(&m, 4096).unwrap();
        let oracle: f64 = (0..12).map(|j| a[(1usize << (j + 1)) - 1]).sum();
        let atom = nu.atom_near(2.0).unwrap();
        assert!((atom.weight - oracle).abs() < 1e-15);
        let cert = certify_atom(&nu, 2.0).unwrap();
        assert!(cert.negative);
        assert!(cert.tail_bound < 1e-6);
    }

    #[test]
    fn certification_reports_small_truncation() {
        let m = params(2, 0.3, 0.5, 0.2);
        // With mmax = 1 the point 2 gets no contribution at all.
        let nu = mu_levy_measure(&m, 1, 1).unwrap();
        assert!(matches!(certify_atom(&nu, 2.0), Err(Error::TruncationTooSmall { .. })));
    }

    #[test]
    fn float_scale_keeps_atoms_distinct() {
        let m = ModelParams::new(Scale::float(std::f64::consts::E).unwrap(), 0.3, 0.5, 0.2).unwrap();
        let nu = mu_levy_measure(&m, 10, 20).unwrap();
        assert_eq!(nu.aggregation_mode, AggregationMode::FloatDistinct);
        assert_eq!(nu.len(), 10 * 20);
    }

    #[test]
    fn measure_reproduces_cf_when_id() {
        let m = params(2, 0.5, 0.5, 0.0);
        let nu = mu_levy_measure(&m, 50, 80).unwrap();
        assert!(nu.atoms.iter().all(|a| a.weight > 0.0));
        for k in 0..40 {
            let z = 0.25 * k as f64;
            assert!((nu.cf(z) - mu_cf(&m, z, 1e-13)).norm() < 1e-6, "z = {z}");
        }
        let m = params(3, 0.6, 0.3, 0.1);
        let nu = mu_levy_measure(&m, 40, 80).unwrap();
        assert!(nu.atoms.iter().all(|a| a.weight >= 0.0));
        assert!((nu.cf(2.0) - mu_cf(&m, 2.0, 1e-13)).norm() < 1e-6);
    }

    #[test]
    fn divergent_series_rejected() {
        let m = params(2, 0.2, 0.5, 0.3);
        assert!(matches!(mu_levy_measure(&m, 3, 3), Err(Error::DivergentLevySeries { .. })));
        assert_eq!(mu_levy_measure(&params(2, 0.0, 0.5, 0.5), 3, 3), Err(Error::PZero));
    }

    #[test]
    fn atom_json_shape() {
        let m = params(2, 0.5, 0.5, 0.0);
        let nu = mu_levy_measure(&m, 2, 1).unwrap();
        let json = serde_json::to_value(&nu.atoms[0]).unwrap();
        assert_eq!(json["location_num"], "1");
        assert_eq!(json["location_den"], "2");
    }

    #[test]
    fn means() {
        assert!((mu_mean(&params(2, 0.5, 0.0, 0.5)) - 1.0).abs() < 1e-15);
        assert!((mu_mean(&params(2, 0.25, 0.5, 0.25)) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_samples_are_bounded() {
        let m = params(2, 0.5, 0.0, 0.5);
        let xs = mu_sample(&SeriesSampler::new(&m, 1), 10_000);
        assert!(xs.iter().all(|&x| (0.0..=2.0).contains(&x)));
    }

    #[test]
    fn sample_mean_and_cf() {
        let m = params(2, 0.25, 0.5, 0.25);
        let n = 100_000;
        let xs = mu_sample(&SeriesSampler::new(&m, 11), n);
        let (mean, se) = mean_and_stderr(&xs);
        assert!((mean - mu_mean(&m)).abs() < 4.0 * se);
        let empirical: Complex64 = xs.iter().map(|&x| Complex64::cis(x)).sum::<Complex64>() / n as f64;
        assert!((empirical - mu_cf(&m, 1.0, 1e-12)).norm() < 5.0 / (n as f64).sqrt());
    }

    #[test]
    fn sampler_is_deterministic_and_streams_split() {
        let m = params(3, 0.3, 0.5, 0.2);
        let s = SeriesSampler::new(&m, 5);
        assert_eq!(mu_sample(&s, 100), mu_sample(&s, 100));
        assert_ne!(mu_sample(&s, 10), mu_sample(&s.clone().with_stream(1), 10));
        assert!(s.clone().with_depth(0).is_err());
        assert!(s.truncation_bound() < 1e-11);
    }
}
