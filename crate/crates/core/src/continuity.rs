//! Continuous-singular or absolutely continuous?
//!
//! `mu_{c,q,r}` with `q > 0` is one or the other. This module collects the
//! computable sufficient conditions for singularity:
//!
//! * `c` a Pisot (P.V.) number, backed by a [`PisotCertificate`];
//! * the Hausdorff dimension bound `dim mu <= H(rho) / log c` being below 1;
//! * for the convolution powers `mu^{t*}`, the same bound with `H(rho^{t*})`,
//!   which gives a lower bound `t_low` on the singularity threshold in `t`.
//!
//! Absolute continuity is never decided: it needs `c^{-1}` to be a P.S.
//! number with known constants, and no such number is known explicitly.

use std::f64::consts::{LN_2, PI};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::divisibility::{sym_coefficients, sym_mmax};
use crate::error::{Error, Result};
use crate::mu::mu_cf;
use crate::params::{ModelParams, Scale};
use crate::rho::{rho_cf, rho_entropy, rho_power_entropy, CharacteristicFunction};

/// The named Pisot numbers besides the integers: `(name, monic polynomial)`,
/// coefficients from the leading one down.
pub const PISOT_CATALOGUE: [(&str, &[i64]); 2] = [("golden ratio", &[1, -1, -1]), ("plastic number", &[1, 0, -1, -1])];

/// Slack allowed between the given `c` and the certified root.
pub const C_MATCH_RELATIVE: f64 = 1e-12;

const NEWTON_STEPS: usize = 60;

/// A root enclosure `|z - centre| <= radius` containing exactly one root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifiedRoot {
    pub re: f64,
    pub im: f64,
    pub radius: f64,
}

impl CertifiedRoot {
    fn centre(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    fn modulus(&self) -> f64 {
        self.centre().norm()
    }
}

/// Proof that `c` is a Pisot number: `c` is a simple root of the monic
/// integer polynomial `poly` and every other root lies inside the unit disc.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PisotCertificate {
    /// Coefficients from the leading one (which is 1) down to the constant.
    pub poly: Vec<i64>,
    pub value: f64,
    pub roots: Vec<CertifiedRoot>,
    pub principal_root_index: usize,
    /// Upper bound on the moduli of the conjugates (0 for integers).
    pub delta: f64,
}

/// Check of one power sum `sum_j alpha_j^n` against its integer value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSumCheck {
    pub n: usize,
    pub exact: String,
    pub numeric: f64,
    pub radius: f64,
    pub ok: bool,
}

impl PisotCertificate {
    pub fn degree(&self) -> usize {
        self.poly.len() - 1
    }

    pub fn principal(&self) -> &CertifiedRoot {
        &self.roots[self.principal_root_index]
    }

    /// Whether the certified root is (within its radius) the value `c`.
    pub fn matches(&self, c: f64) -> bool {
        (self.principal().re - c).abs() <= self.principal().radius + C_MATCH_RELATIVE * c
    }

    fn conjugates(&self) -> impl Iterator<Item = &CertifiedRoot> {
        let principal = self.principal_root_index;
        self.roots.iter().enumerate().filter(move |(i, _)| *i != principal).map(|(_, r)| r)
    }

    /// `sum_{j >= 2} alpha_j^n`, a real number with `c^n + (this)` an integer.
    pub fn conjugate_power_sum(&self, n: usize) -> f64 {
        self.conjugates().map(|r| r.centre().powu(n as u32)).sum::<Complex64>().re
    }

    /// Compares the numerical power sums of the enclosed roots with the exact
    /// integers from Newton's identities, for `n = 1..=nmax`.
    pub fn power_sum_checks(&self, nmax: usize) -> Vec<PowerSumCheck> {
        let exact = integer_power_sums(&self.poly, nmax);
        (1..=nmax)
            .map(|n| {
                let numeric: Complex64 = self.roots.iter().map(|r| r.centre().powu(n as u32)).sum();
                let enclosure: f64 = self
                    .roots
                    .iter()
                    .map(|r| (r.modulus() + r.radius).powi(n as i32) - r.modulus().powi(n as i32))
                    .sum();
                let magnitude: f64 = self.roots.iter().map(|r| r.modulus().powi(n as i32)).sum();
                let radius = enclosure + 8.0 * n as f64 * f64::EPSILON * magnitude.max(1.0);
                let target = exact[n - 1].to_f64().unwrap_or(f64::INFINITY);
                let ok = (numeric.re - target).abs() <= radius && numeric.im.abs() <= radius;
                PowerSumCheck { n, exact: exact[n - 1].to_string(), numeric: numeric.re, radius, ok }
            })
            .collect()
    }
}

/// `s_n = sum_j alpha_j^n` for `n = 1..=nmax` over the roots of the monic
/// polynomial `poly` (leading coefficient first), by Newton's identities.
pub fn integer_power_sums(poly: &[i64], nmax: usize) -> Vec<BigInt> {
    let degree = poly.len().saturating_sub(1);
    let a: Vec<BigInt> = poly.iter().map(|&x| BigInt::from(x)).collect();
    let mut s: Vec<BigInt> = Vec::with_capacity(nmax);
    for n in 1..=nmax {
        let mut value = BigInt::zero();
        for i in 1..n.min(degree + 1) {
            value -= &a[i] * &s[n - i - 1];
        }
        if n <= degree {
            value -= &a[n] * BigInt::from(n);
        }
        s.push(value);
    }
    s
}

fn normalise_poly(poly: &[i64]) -> Result<Vec<i64>> {
    let start = poly
        .iter()
        .position(|&x| x != 0)
        .ok_or_else(|| Error::InvalidPolynomial("the zero polynomial has no roots to certify".into()))?;
    let poly = &poly[start..];
    if poly.len() < 2 {
        return Err(Error::InvalidPolynomial("degree must be at least 1".into()));
    }
    let content = poly.iter().fold(0i64, |g, &x| g.gcd(&x));
    let sign = poly[0].signum();
    let out: Vec<i64> = poly.iter().map(|&x| sign * x / content).collect();
    if out[0] != 1 {
        return Err(Error::NotPisot(format!(
            "polynomial {poly:?} is not monic after normalisation, so its roots need not be algebraic integers"
        )));
    }
    Ok(out)
}

fn horner(poly: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut value = Complex64::new(0.0, 0.0);
    let mut deriv = Complex64::new(0.0, 0.0);
    for &a in poly {
        deriv = deriv * z + value;
        value = value * z + a;
    }
    (value, deriv)
}

fn roots_by_companion(poly: &[f64]) -> Vec<Complex64> {
    let n = poly.len() - 1;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -poly[j + 1];
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues().iter().copied().collect()
}

fn polish(poly: &[f64], mut z: Complex64) -> Complex64 {
    for _ in 0..NEWTON_STEPS {
        let (value, deriv) = horner(poly, z);
        if deriv.norm() == 0.0 {
            break;
        }
        let step = value / deriv;
        z -= step;
        if step.norm() <= 4.0 * f64::EPSILON * z.norm() {
            break;
        }
    }
    z
}

/// Root enclosures from the Weierstrass corrections
/// `W_i = p(z_i) / prod_{j != i} (z_i - z_j)`: every root lies in the union of
/// the discs `|z - z_i| <= n |W_i|`, and a union of `k` discs disjoint from
/// the others contains exactly `k` roots.
fn enclose_roots(poly: &[f64], approx: &[Complex64]) -> Vec<CertifiedRoot> {
    let n = approx.len();
    approx
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let (value, _) = horner(poly, z);
            let magnitude: f64 = poly.iter().fold(0.0, |acc, a| acc * z.norm() + a.abs());
            let rounding = 4.0 * (2 * n) as f64 * f64::EPSILON * magnitude;
            let denominator: Complex64 =
                approx.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &w)| z - w).product();
            let w = (value.norm() + rounding) / denominator.norm() * (1.0 + 8.0 * n as f64 * f64::EPSILON);
            let radius = if w.is_finite() { n as f64 * w } else { f64::INFINITY };
            CertifiedRoot { re: z.re, im: z.im, radius }
        })
        .collect()
}

/// Certifies that `c` is a Pisot number with minimal-polynomial multiple `poly`
/// (coefficients from the leading one down; normalised by content and sign).
pub fn certify_pisot(c: &Scale, poly: &[i64]) -> Result<PisotCertificate> {
    let poly = normalise_poly(poly)?;
    if let Scale::Rational { num, den } = c {
        return Err(Error::NotPisot(format!(
            "{num}/{den} is rational but not an integer, hence not an algebraic integer"
        )));
    }
    let value = c.value();
    let coeffs: Vec<f64> = poly.iter().map(|&x| x as f64).collect();
    let approx: Vec<Complex64> = roots_by_companion(&coeffs).into_iter().map(|z| polish(&coeffs, z)).collect();
    let roots = enclose_roots(&coeffs, &approx);

    let overlapping = (0..roots.len()).any(|i| {
        (i + 1..roots.len())
            .any(|j| (roots[i].centre() - roots[j].centre()).norm() <= roots[i].radius + roots[j].radius)
    });
    if overlapping {
        return Err(Error::UncertifiedRoots("root enclosures overlap (multiple or clustered roots)".into()));
    }
    let principal = roots
        .iter()
        .position(|r| (r.centre() - Complex64::new(value, 0.0)).norm() <= r.radius + C_MATCH_RELATIVE * value)
        .ok_or_else(|| Error::NotPisot(format!("c = {value} is not a root of {poly:?}")))?;
    if roots[principal].modulus() - roots[principal].radius <= 1.0 {
        return Err(Error::UncertifiedRoots("the root near c is not separated from the unit circle".into()));
    }
    let mut delta = 0.0f64;
    for (i, r) in roots.iter().enumerate() {
        if i == principal {
            continue;
        }
        if r.modulus() - r.radius >= 1.0 {
            return Err(Error::NotPisot(format!("conjugate root {} + {}i has modulus >= 1", r.re, r.im)));
        }
        if r.modulus() + r.radius >= 1.0 {
            return Err(Error::UncertifiedRoots(format!(
                "conjugate root {} + {}i cannot be separated from the unit circle",
                r.re, r.im
            )));
        }
        delta = delta.max(r.modulus() + r.radius);
    }
    Ok(PisotCertificate { poly, value, roots, principal_root_index: principal, delta })
}

/// Certificate from the built-in catalogue: integers, the tagged algebraic
/// scales, and floats equal (to 1e-12) to a catalogue number.
pub fn catalogue_certificate(c: &Scale) -> Option<PisotCertificate> {
    match c {
        Scale::Integer { value } => certify_pisot(c, &[1, -(i64::try_from(*value).ok()?)]).ok(),
        Scale::Algebraic { poly, .. } => certify_pisot(c, poly).ok(),
        Scale::Float { .. } => PISOT_CATALOGUE.iter().find_map(|(_, poly)| certify_pisot(c, poly).ok()),
        Scale::Rational { .. } => None,
    }
}

/// `H(rho_{q,r}) / log c`, an upper bound on the Hausdorff dimension of `mu`.
pub fn dim_bound(params: &ModelParams) -> Result<f64> {
    if params.q_is_zero() {
        return Err(Error::QZero);
    }
    Ok(rho_entropy(params) / params.c().ln())
}

/// `q <= 1 - log 2 / log c`, sufficient for singularity when `r = 0`.
pub fn small_q_condition(q: f64, c: f64) -> bool {
    q > 0.0 && q <= 1.0 - LN_2 / c.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ContinuityDecision {
    ContinuousSingular,
    AbsolutelyContinuous,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContinuityRule {
    /// `c` is a certified Pisot number and `q > 0`.
    PisotNumber,
    /// `H(rho) / log c < 1`.
    EntropyDimension,
    /// The hypotheses of the absolute-continuity theorem have the right shape,
    /// but its threshold `epsilon(c)` is unknown. The threshold involves the
    /// constant `K = k |log(2 p_0 - 1)| / 2` of a concrete pair `(p_0, k)`
    /// witnessing that `1/c` is a P.S. number; no such pair is known, so `K`
    /// is never computed.
    PsAssumption,
    /// `q = 0`: an infinite Bernoulli convolution, an open problem.
    BernoulliConvolution,
    /// No criterion applies.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityVerdict {
    pub decision: ContinuityDecision,
    pub rule: ContinuityRule,
    /// `H(rho_{q,r})` in nats.
    pub entropy: f64,
    pub log_c: f64,
    /// `H(rho) / log c`; absent when `q = 0`.
    pub dim_bound: Option<f64>,
    /// `q <= 1 - log 2 / log c`; only meaningful (and reported) when `r = 0`.
    pub small_q_condition: Option<bool>,
    pub pisot_certified: bool,
}

/// Classifies `mu_{c,q,r}`; the rules are tried in the order of
/// [`ContinuityRule`]. A certificate for a different `c` is ignored.
pub fn classify_continuity(
    params: &ModelParams,
    pisot: Option<&PisotCertificate>,
    ps_assumption: bool,
) -> ContinuityVerdict {
    let entropy = rho_entropy(params);
    let log_c = params.c().ln();
    let dim = dim_bound(params).ok();
    let pisot_certified = pisot.is_some_and(|cert| cert.matches(params.c_value()));
    let small_q = (params.r() == 0.0).then(|| small_q_condition(params.q(), params.c_value()));
    let q_positive = !params.q_is_zero();

    let (decision, rule) = if q_positive && pisot_certified {
        (ContinuityDecision::ContinuousSingular, ContinuityRule::PisotNumber)
    } else if dim.is_some_and(|d| d < 1.0) {
        (ContinuityDecision::ContinuousSingular, ContinuityRule::EntropyDimension)
    } else if ps_assumption && q_positive && params.is_infinitely_divisible() {
        (ContinuityDecision::Undetermined, ContinuityRule::PsAssumption)
    } else if !q_positive {
        (ContinuityDecision::Undetermined, ContinuityRule::BernoulliConvolution)
    } else {
        (ContinuityDecision::Undetermined, ContinuityRule::Inconclusive)
    };
    ContinuityVerdict { decision, rule, entropy, log_c, dim_bound: dim, small_q_condition: small_q, pisot_certified }
}

/// Bracket for the bisection in `t`.
pub const T_LOW_START: f64 = 1e-6;
pub const T_HIGH_CAP: f64 = 65536.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// `c` is Pisot: every `mu^{t*}` is continuous-singular.
    PisotNumber,
    /// `t_low` solves `H(rho^{t*}) = log c`.
    EntropyBisection,
    /// `H(rho^{t*}) < log c` up to the cap: undetermined.
    CapReached,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BisectionStep {
    pub t: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerThreshold {
    /// `mu^{t*}` is continuous-singular for every `t < t_low`.
    pub t_low: f64,
    pub rule: ThresholdRule,
    pub log_c: f64,
    /// `H(rho^{t_low *})` for the bisection result.
    pub entropy_at_t_low: Option<f64>,
    pub trace: Vec<BisectionStep>,
}

/// `t_low = sup { t > 0 : H(rho^{t*}) < log c }`, a lower bound for the
/// singularity threshold of `mu^{t*}`, or `+inf` for a certified Pisot `c`.
pub fn power_singularity_threshold(params: &ModelParams, pisot: Option<&PisotCertificate>) -> Result<PowerThreshold> {
    if !params.is_infinitely_divisible() {
        return Err(Error::NotInfinitelyDivisible { r: params.r(), pq: params.p() * params.q() });
    }
    let log_c = params.c().ln();
    if pisot.is_some_and(|cert| cert.matches(params.c_value())) && !params.q_is_zero() {
        return Ok(PowerThreshold {
            t_low: f64::INFINITY,
            rule: ThresholdRule::PisotNumber,
            log_c,
            entropy_at_t_low: None,
            trace: Vec::new(),
        });
    }
    let mut trace = Vec::new();
    let mut entropy = |t: f64| -> Result<f64> {
        let h = rho_power_entropy(params, t)?.entropy;
        trace.push(BisectionStep { t, entropy: h });
        Ok(h)
    };

    let mut lo = T_LOW_START;
    while entropy(lo)? >= log_c {
        lo /= 2.0;
        if lo < 1e-15 {
            return Err(Error::InvalidArgument(format!("H(rho^(t*)) >= log c even for t = {lo}")));
        }
    }
    let mut hi = lo.max(1.0);
    while entropy(hi)? < log_c {
        lo = hi;
        hi *= 2.0;
        if hi > T_HIGH_CAP {
            return Ok(PowerThreshold {
                t_low: f64::INFINITY,
                rule: ThresholdRule::CapReached,
                log_c,
                entropy_at_t_low: None,
                trace,
            });
        }
    }
    let mut mid = 0.5 * (lo + hi);
    let mut h_mid = f64::NAN;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        h_mid = entropy(mid)?;
        if (h_mid - log_c).abs() < 1e-12 || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        if h_mid < log_c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(PowerThreshold {
        t_low: mid,
        rule: ThresholdRule::EntropyBisection,
        log_c,
        entropy_at_t_low: Some(h_mid),
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessBranch {
    /// `p > 0, r <= pq`: nonnegative `a_m`, `sum a_m m^2 = q/(1-q)^2 + s/(1+s)^2`, `s = r/p`.
    LevyCoefficients,
    /// `p = 0`: `a_m = q^m / m`.
    ShiftedGeometric,
    /// `p > 0, r > pq`: positive parts `E_m^+` of the symmetrised coefficients.
    SymmetrisedPositivePart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessValue {
    pub k: usize,
    /// `|mu^(2 pi c^k)|`.
    pub modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErdosWitness {
    pub values: Vec<WitnessValue>,
    /// Lower bound on `|mu^(2 pi c^k)|` uniform in `k`, when `c` is certified.
    pub lower_bound: Option<f64>,
    pub branch: Option<WitnessBranch>,
}

/// Upper bound on `sum_m E_m^+ m^2`.
fn positive_sym_moment(params: &ModelParams) -> Result<f64> {
    let mmax = sym_mmax(params, 1e-14)?;
    let sym = sym_coefficients(params, mmax, 1e-14)?;
    let head: f64 = sym.e.iter().enumerate().map(|(i, e)| e.max(0.0) * ((i + 1) * (i + 1)) as f64).sum();
    let m = mmax as f64;
    let mut tail = m * m * m * sym.coefficient_error;
    // sum_{k > mmax} (k/2)(A^k + B^k)
    let big = sym.a.max(sym.b);
    let mut k = mmax + 1;
    loop {
        let term = 0.5 * k as f64 * (sym.a.powi(k as i32) + sym.b.powi(k as i32));
        tail += term;
        if term < 1e-18 * (1.0 - big) || k > 100 * mmax + 10_000 {
            break;
        }
        k += 1;
    }
    Ok(head + tail)
}

/// Evaluates `|mu^(2 pi c^k)|` for `k = 1..=kmax`.
///
/// With a certificate, `2 pi c^j` is reduced modulo `2 pi` exactly through
/// `c^j = s_j - sum_{i >= 2} alpha_i^j` (`s_j` an integer and `rho^` being
/// `2 pi`-periodic), and the uniform lower bound
/// `exp(-2 pi^2 M ((N-1)^2 / (1 - delta^2) + 1 / (c^2 - 1)))`
/// is attached, `M` being `sum a_m m^2` (or `sum E_m^+ m^2`).
pub fn erdos_witness(params: &ModelParams, cert: Option<&PisotCertificate>, kmax: usize) -> Result<ErdosWitness> {
    let c = params.c_value();
    if let Some(cert) = cert {
        if !cert.matches(c) {
            return Err(Error::InvalidArgument(format!("certificate is for {}, not for c = {c}", cert.value)));
        }
    }
    let tol = 1e-14;
    let values: Vec<WitnessValue> = match cert {
        Some(cert) => {
            let cf = rho_cf(params);
            let mut modulus = mu_cf(params, 2.0 * PI / c, tol).norm();
            (1..=kmax)
                .map(|k| {
                    modulus *= cf.eval(2.0 * PI * cert.conjugate_power_sum(k)).norm();
                    WitnessValue { k, modulus }
                })
                .collect()
        }
        None => (1..=kmax)
            .map(|k| WitnessValue { k, modulus: mu_cf(params, 2.0 * PI * c.powi(k as i32), tol).norm() })
            .collect(),
    };

    let (lower_bound, branch) = match cert {
        Some(cert) if !params.q_is_zero() => {
            let q = params.q();
            let (moment, branch) = if params.p_is_zero() {
                (q / ((1.0 - q) * (1.0 - q)), WitnessBranch::ShiftedGeometric)
            } else if params.r_le_pq() {
                let s = params.r() / params.p();
                (q / ((1.0 - q) * (1.0 - q)) + s / ((1.0 + s) * (1.0 + s)), WitnessBranch::LevyCoefficients)
            } else if params.p_eq_r() {
                // A = 1: the symmetrised expansion diverges and no bound follows.
                return Ok(ErdosWitness { values, lower_bound: None, branch: None });
            } else {
                (positive_sym_moment(params)?, WitnessBranch::SymmetrisedPositivePart)
            };
            let conjugates = cert.degree() as f64 - 1.0;
            let spread = conjugates * conjugates / (1.0 - cert.delta * cert.delta) + 1.0 / (c * c - 1.0);
            (Some((-2.0 * PI * PI * moment * spread).exp()), Some(branch))
        }
        _ => (None, None),
    };
    Ok(ErdosWitness { values, lower_bound, branch })
}
