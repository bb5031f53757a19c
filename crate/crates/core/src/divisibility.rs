//! Infinite divisibility of `rho`, `mu` and their symmetrisations.
//!
//! The closed-form criteria:
//!
//! * `p = 0`: `rho` is a shifted geometric law, so `rho` and `mu` are
//!   infinitely divisible.
//! * `p > 0, q > 0`: `mu` is infinitely divisible iff `rho` is iff `r <= pq`
//!   (independently of `c`).
//! * `p > 0, q > 0, r > pq`: the symmetrisations of `mu` and `rho` are
//!   infinitely divisible iff `p <= qr`.
//! * `q = 0`: none of the four laws is infinitely divisible.
//!
//! Two numerical witnesses back them: Katti's recursion on the pmf of `rho`,
//! and the Levy-type coefficients `a_m` and `E_m` whose signs decide the
//! question.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::rho::DiscretePmf;

/// Katti coefficients below this are treated as negative.
pub const KATTI_NEGATIVE_THRESHOLD: f64 = -1e-12;

/// Default tolerance for the `D_k`/`E_m` series.
pub const DEFAULT_SYM_TOL: f64 = 1e-12;

const MAX_SERIES_TERMS: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    Yes,
    No,
    Undetermined,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Decision::Yes => "Yes",
            Decision::No => "No",
            Decision::Undetermined => "Undetermined",
        };
        f.write_str(s)
    }
}

/// The criterion a verdict rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `p = 0`: shifted geometric innovation law.
    ShiftedGeometric,
    /// `q = 0`: Bernoulli innovations, bounded non-degenerate support.
    BoundedSupport,
    /// `p, q > 0`: infinitely divisible iff `r <= pq`.
    RLePq,
    /// `mu` is infinitely divisible iff `rho` is, for every `c > 1`.
    EquivalentToInnovation,
    /// The symmetrisation inherits infinite divisibility from the law itself.
    InheritedFromLaw,
    /// `p = r`: the characteristic function vanishes at `z = pi`.
    RealZero,
    /// `p, q > 0, r > pq`: the symmetrisation is infinitely divisible iff `p <= qr`.
    PLeQr,
}

impl Rule {
    pub fn describe(&self) -> &'static str {
        match self {
            Rule::ShiftedGeometric => "p = 0: rho is a geometric law shifted by 1, hence infinitely divisible",
            Rule::BoundedSupport => "q = 0: rho is Bernoulli, the laws have bounded non-degenerate support",
            Rule::RLePq => "p > 0, q > 0: infinitely divisible iff r <= pq",
            Rule::EquivalentToInnovation => "mu is infinitely divisible iff rho is; independent of c",
            Rule::InheritedFromLaw => "infinite divisibility of the law implies that of its symmetrisation",
            Rule::RealZero => "p = r: the characteristic function has a real zero at z = pi",
            Rule::PLeQr => "p, q > 0 and r > pq: the symmetrisation is infinitely divisible iff p <= qr",
        }
    }
}

/// The quantities a verdict compared.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    /// e.g. `"r <= pq"`.
    pub inequality: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// Whether the comparison was carried out in exact rational arithmetic.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub decision: Decision,
    pub rule: Rule,
    /// For derived verdicts, the rule of the verdict they were derived from.
    pub basis: Option<Rule>,
    pub witness: Option<Comparison>,
}

impl Verdict {
    fn new(decision: Decision, rule: Rule, witness: Option<Comparison>) -> Self {
        Verdict { decision, rule, basis: None, witness }
    }

    pub fn is_yes(&self) -> bool {
        self.decision == Decision::Yes
    }
}

fn r_le_pq_witness(params: &ModelParams) -> Comparison {
    Comparison {
        inequality: "r <= pq",
        lhs: params.r(),
        rhs: params.p() * params.q(),
        exact: params.exact_triple().is_some(),
    }
}

/// Infinite divisibility of `rho_{q,r}`.
pub fn classify_rho_id(params: &ModelParams) -> Verdict {
    if params.p_is_zero() {
        return Verdict::new(Decision::Yes, Rule::ShiftedGeometric, None);
    }
    if params.q_is_zero() {
        return Verdict::new(Decision::No, Rule::BoundedSupport, None);
    }
    let decision = if params.r_le_pq() { Decision::Yes } else { Decision::No };
    Verdict::new(decision, Rule::RLePq, Some(r_le_pq_witness(params)))
}

/// Infinite divisibility of `mu_{c,q,r}`; the same decision as for `rho`.
pub fn classify_mu_id(params: &ModelParams) -> Verdict {
    let inner = classify_rho_id(params);
    Verdict {
        decision: inner.decision,
        rule: Rule::EquivalentToInnovation,
        basis: Some(inner.rule),
        witness: inner.witness,
    }
}

/// Infinite divisibility of the symmetrisations of `rho` and `mu` (the two
/// always agree).
pub fn classify_sym_id(params: &ModelParams) -> Verdict {
    let law = classify_rho_id(params);
    if law.is_yes() {
        return Verdict {
            decision: Decision::Yes,
            rule: Rule::InheritedFromLaw,
            basis: Some(law.rule),
            witness: law.witness,
        };
    }
    if params.q_is_zero() {
        return Verdict::new(Decision::No, Rule::BoundedSupport, None);
    }
    let witness = Comparison {
        inequality: "p <= qr",
        lhs: params.p(),
        rhs: params.q() * params.r(),
        exact: params.exact_triple().is_some(),
    };
    if params.p_eq_r() {
        return Verdict::new(Decision::No, Rule::RealZero, Some(witness));
    }
    let decision = if params.p_le_qr() { Decision::Yes } else { Decision::No };
    Verdict::new(decision, Rule::PLeQr, Some(witness))
}

/// Canonical sequence of Katti's recursion `n p_n = sum_{k=1}^n k q_k p_{n-k}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KattiSequence {
    /// `coefficients[n - 1] = q_n`.
    pub coefficients: Vec<f64>,
    /// Least `n` with `q_n` below [`KATTI_NEGATIVE_THRESHOLD`].
    pub first_negative_index: Option<usize>,
    pub first_negative_value: Option<f64>,
    /// Largest relative residual of the defining equations.
    pub max_residual: f64,
}

impl KattiSequence {
    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.coefficients.get(i)).copied()
    }
}

/// Solves Katti's equations for `q_1, ..., q_nmax` by forward substitution.
pub fn katti(pmf: &DiscretePmf, nmax: usize) -> Result<KattiSequence> {
    if nmax == 0 {
        return Err(Error::InvalidArgument("nmax must be >= 1".into()));
    }
    if pmf.shift() != 0.0 {
        return Err(Error::InvalidArgument("Katti's recursion needs a pmf on 0, 1, 2, ...".into()));
    }
    if nmax > pmf.kmax() && pmf.tail() > 0.0 {
        return Err(Error::InvalidArgument(format!("pmf enumerated only up to {} but nmax = {nmax}", pmf.kmax())));
    }
    let p0 = pmf.mass(0);
    if p0 <= 0.0 {
        return Err(Error::ZeroAtOrigin);
    }
    let mut coefficients: Vec<f64> = Vec::with_capacity(nmax);
    for n in 1..=nmax {
        let known: f64 = (1..n).map(|k| k as f64 * coefficients[k - 1] * pmf.mass(n - k)).sum();
        coefficients.push((n as f64 * pmf.mass(n) - known) / (n as f64 * p0));
    }

    let mut max_residual = 0.0f64;
    for n in 1..=nmax {
        let terms = (1..=n).map(|k| k as f64 * coefficients[k - 1] * pmf.mass(n - k));
        let (sum, scale) = terms.fold((0.0, 0.0), |(s, a), x: f64| (s + x, a + x.abs()));
        let residual = (n as f64 * pmf.mass(n) - sum).abs() / scale.max(1.0);
        max_residual = max_residual.max(residual);
    }

    let first_negative = coefficients.iter().position(|&x| x < KATTI_NEGATIVE_THRESHOLD);
    Ok(KattiSequence {
        first_negative_index: first_negative.map(|i| i + 1),
        first_negative_value: first_negative.map(|i| coefficients[i]),
        coefficients,
        max_residual,
    })
}

/// `a_m = (q^m - (-r/p)^m) / m` for `m = 1..=mmax` (index 0 holds `a_1`).
///
/// These are the masses of the (possibly signed) Levy measure of `rho`,
/// equal to `q^m (1 - (-r/(pq))^m) / m`. All are nonnegative iff `r <= pq`.
pub fn levy_coefficients_a(params: &ModelParams, mmax: usize) -> Result<Vec<f64>> {
    if params.p_is_zero() {
        return Err(Error::PZero);
    }
    let (p, q, r) = (params.p(), params.q(), params.r());
    let ratio = -r / p;
    let (mut qm, mut sm) = (1.0, 1.0);
    Ok((1..=mmax)
        .map(|m| {
            qm *= q;
            sm *= ratio;
            (qm - sm) / m as f64
        })
        .collect())
}

/// Coefficients of `log |rho^(z)|^2 = 2 sum_m E_m (cos mz - 1)`.
///
/// With `A = 2pr/(p^2 + r^2)`, `B = 2q/(1 + q^2)`, `C = (p^2 + r^2)/(1 + q^2)`:
///
/// ```text
/// D_k = k^-1 2^-k (-(-A)^k + B^k),    E_m = sum_{h >= 0} D_{m+2h} binom(m+2h, h).
/// ```
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `d[k - 1] = D_k` for `k = 1..=kmax`.
    pub d: Vec<f64>,
    /// `e[m - 1] = E_m` for `m = 1..=mmax`.
    pub e: Vec<f64>,
    /// Every computed `E_m` is within this of its exact value.
    pub coefficient_error: f64,
    /// Bound on `sum_{m >= 1} |E_m - computed E_m|`, counting the omitted
    /// `m > mmax` as computed zeros.
    pub truncation_error: f64,
}

impl SymCoefficients {
    pub fn get(&self, m: usize) -> Option<f64> {
        m.checked_sub(1).and_then(|i| self.e.get(i)).copied()
    }

    /// Smallest `E_m` over even `m`.
    pub fn min_even(&self) -> Option<f64> {
        self.e.iter().skip(1).step_by(2).copied().reduce(f64::min)
    }

    /// `exp(2 sum_m E_m (cos mz - 1))`, the truncated reconstruction of `|rho^(z)|^2`.
    pub fn reconstruct(&self, z: f64) -> f64 {
        let s: f64 = self.e.iter().enumerate().map(|(i, e)| e * (((i + 1) as f64 * z).cos() - 1.0)).sum();
        (2.0 * s).exp()
    }
}

fn sym_constants(params: &ModelParams) -> Result<(f64, f64, f64)> {
    if params.q_is_zero() {
        return Err(Error::QZero);
    }
    if params.p_is_zero() {
        return Err(Error::PZero);
    }
    if params.p_eq_r() {
        return Err(Error::DegenerateAB);
    }
    let (p, q, r) = (params.p(), params.q(), params.r());
    let a = 2.0 * p * r / (p * p + r * r);
    let b = 2.0 * q / (1.0 + q * q);
    let c = (p * p + r * r) / (1.0 + q * q);
    Ok((a, b, c))
}

/// `sum_{k > m} (A^k + B^k)`, which bounds `sum_{m' > m} |E_m'|`.
fn e_tail_bound(a: f64, b: f64, m: usize) -> f64 {
    let geometric = |x: f64| if x > 0.0 { x.powi(m as i32 + 1) / (1.0 - x) } else { 0.0 };
    geometric(a) + geometric(b)
}

/// Smallest `mmax` for which the omitted coefficients `E_m`, `m > mmax`,
/// have total size below `tol`.
pub fn sym_mmax(params: &ModelParams, tol: f64) -> Result<usize> {
    let (a, b, _) = sym_constants(params)?;
    let mut m = 1;
    while e_tail_bound(a, b, m) >= tol && m < MAX_SERIES_TERMS {
        m *= 2;
    }
    let (mut lo, mut hi) = (m / 2, m);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if e_tail_bound(a, b, mid) < tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.max(1))
}

/// Computes `A, B, C`, `D_k` and `E_1..E_mmax`, summing each `E_m` until the
/// remaining terms are below `tol`.
pub fn sym_coefficients(params: &ModelParams, mmax: usize, tol: f64) -> Result<SymCoefficients> {
    if mmax == 0 {
        return Err(Error::InvalidArgument("mmax must be >= 1".into()));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tol = {tol} must be > 0")));
    }
    let (a, b, c) = sym_constants(params)?;
    let big = a.max(b);
    // |D_k binom(k, h)| <= (A^k + B^k) / k, so the terms of E_m beyond kmax
    // sum to at most (A^(kmax+1) + B^(kmax+1)) / ((kmax + 1)(1 - max(A,B)^2)).
    let term_tail = |k: usize| {
        let k1 = (k + 1) as i32;
        (a.powi(k1) + b.powi(k1)) / ((k + 1) as f64 * (1.0 - big * big))
    };
    let mut kmax = mmax;
    while term_tail(kmax) >= tol && kmax < MAX_SERIES_TERMS {
        kmax = (kmax * 2).min(MAX_SERIES_TERMS);
    }

    let mut d = Vec::with_capacity(kmax);
    let mut e = vec![0.0; mmax];
    let (mut ak, mut bk) = (1.0f64, 1.0f64);
    // central = 2^-k binom(k, floor(k/2))
    let mut central = 1.0f64;
    for k in 1..=kmax {
        let j = (k - 1) / 2;
        if (k - 1) % 2 == 0 {
            central *= (2 * j + 1) as f64 / (2 * (j + 1)) as f64;
        }
        ak *= -a;
        bk *= b;
        let power = (bk - ak) / k as f64;
        d.push(power / 2f64.powi(k as i32).max(f64::MIN_POSITIVE));
        if power == 0.0 {
            continue;
        }
        // Walk h = floor((k-1)/2) downwards, i.e. m = k - 2h upwards from 1 or 2.
        let mut h = (k - 1) / 2;
        let mut weight = if k % 2 == 1 {
            central
        } else {
            let half = k / 2;
            central * half as f64 / (half + 1) as f64
        };
        loop {
            let m = k - 2 * h;
            if m > mmax || weight == 0.0 {
                break;
            }
            e[m - 1] += power * weight;
            if h == 0 {
                break;
            }
            weight *= h as f64 / (k - h + 1) as f64;
            h -= 1;
        }
    }
    let coefficient_error = term_tail(kmax);
    let truncation_error = mmax as f64 * coefficient_error + e_tail_bound(a, b, mmax);
    Ok(SymCoefficients { a, b, c, d, e, coefficient_error, truncation_error })
}
