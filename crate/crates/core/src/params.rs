//! Model parameters.
//!
//! The stationary law is indexed by a scale `c > 1` and the normalised jump
//! masses `(p, q, r)` of the bivariate counting process `(N, Y)` at the points
//! `(1,0)`, `(0,1)` and `(1,1)`. Raw jump rates `(u, v, w)` normalise to
//! `(p, q, r)` by dividing by `u + v + w`.
//!
//! Both the scale and the triple can carry exact rational values. Exact
//! triples make boundary comparisons such as `r <= pq` decidable without
//! rounding; an exact rational scale enables collision-exact aggregation of
//! the signed Levy measure.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance on `p + q + r = 1` for floating-point triples.
pub const FLOAT_SUM_TOLERANCE: f64 = 1e-12;

/// The scale `c > 1` together with how exactly it is known.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scale {
    Integer {
        value: u64,
    },
    /// `num / den` in lowest terms with `den > 1`.
    Rational {
        num: u64,
        den: u64,
    },
    Float {
        value: f64,
    },
    /// A root of the given integer polynomial (coefficients, highest degree
    /// first). Certification happens in [`crate::continuity::certify_pisot`].
    Algebraic {
        value: f64,
        poly: Vec<i64>,
    },
}

impl Scale {
    pub fn integer(value: u64) -> Result<Self> {
        if value < 2 {
            return Err(Error::InvalidC(value.to_string()));
        }
        Ok(Scale::Integer { value })
    }

    /// Reduces `num / den`; collapses to [`Scale::Integer`] when `den` divides `num`.
    pub fn rational(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num <= den {
            return Err(Error::InvalidC(format!("{num}/{den}")));
        }
        let g = num.gcd(&den);
        let (num, den) = (num / g, den / g);
        if den == 1 {
            Scale::integer(num)
        } else {
            Ok(Scale::Rational { num, den })
        }
    }

    pub fn float(value: f64) -> Result<Self> {
        check_c(value)?;
        Ok(Scale::Float { value })
    }

    pub fn algebraic(value: f64, poly: Vec<i64>) -> Result<Self> {
        check_c(value)?;
        if poly.len() < 2 {
            return Err(Error::InvalidPolynomial("degree must be at least 1".into()));
        }
        Ok(Scale::Algebraic { value, poly })
    }

    pub fn value(&self) -> f64 {
        match *self {
            Scale::Integer { value } => value as f64,
            Scale::Rational { num, den } => num as f64 / den as f64,
            Scale::Float { value } | Scale::Algebraic { value, .. } => value,
        }
    }

    pub fn ln(&self) -> f64 {
        self.value().ln()
    }

    /// `(alpha, beta)` with `c = alpha / beta` in lowest terms, when `c` is
    /// known to be rational.
    pub fn as_ratio(&self) -> Option<(u64, u64)> {
        match *self {
            Scale::Integer { value } => Some((value, 1)),
            Scale::Rational { num, den } => Some((num, den)),
            _ => None,
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scale::Integer { value } => write!(f, "{value}"),
            Scale::Rational { num, den } => write!(f, "{num}/{den}"),
            Scale::Float { value } => write!(f, "{value}"),
            Scale::Algebraic { value, poly } => write!(f, "{value} (root of {poly:?})"),
        }
    }
}

fn check_c(c: f64) -> Result<()> {
    if c.is_finite() && c > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidC(c.to_string()))
    }
}

/// Levy-measure masses `u, v, w` of `(N, Y)` at `(1,0)`, `(0,1)`, `(1,1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawRates {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    #[serde(skip)]
    exact: Option<[BigRational; 3]>,
}

impl RawRates {
    pub fn new(u: f64, v: f64, w: f64) -> Result<Self> {
        for (name, x) in [("u", u), ("v", v), ("w", w)] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::InvalidRate(format!("{name} = {x} must be finite and >= 0")));
            }
        }
        if u + w <= 0.0 {
            return Err(Error::InvalidRate("u + w = 0: N never jumps (p + r = 0)".into()));
        }
        if v + w <= 0.0 {
            return Err(Error::InvalidRate("v + w = 0: Y never jumps (q + r = 0)".into()));
        }
        Ok(RawRates { u, v, w, exact: None })
    }

    /// Rates known exactly, e.g. parsed from decimal literals.
    pub fn exact(u: BigRational, v: BigRational, w: BigRational) -> Result<Self> {
        let mut raw = RawRates::new(to_f64(&u), to_f64(&v), to_f64(&w))?;
        raw.exact = Some([u, v, w]);
        Ok(raw)
    }

    /// Rate of the jumps of `N`.
    pub fn a(&self) -> f64 {
        self.u + self.w
    }

    /// Rate of the jumps of `Y`.
    pub fn b(&self) -> f64 {
        self.v + self.w
    }

    pub fn total(&self) -> f64 {
        self.u + self.v + self.w
    }

    /// Mark probabilities `(p, q, r)` without the non-degeneracy check, for
    /// path simulation (which also accepts the diagnostic case `r = 1`).
    pub fn mark_probabilities(&self) -> (f64, f64, f64) {
        let s = self.total();
        (self.u / s, self.v / s, self.w / s)
    }
}

/// Exact rational values of `(p, q, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTriple {
    pub p: BigRational,
    pub q: BigRational,
    pub r: BigRational,
}

impl Serialize for ExactTriple {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.p.to_string(), self.q.to_string(), self.r.to_string()].serialize(s)
    }
}

/// Validated `(c, p, q, r)`.
///
/// Invariants: `p, q, r` in `[0, 1]`, `p + q + r = 1`, `p + r > 0`,
/// `q + r > 0` and `p + q > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelParams {
    c: Scale,
    p: f64,
    q: f64,
    r: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<ExactTriple>,
}

impl ModelParams {
    /// Floating-point triple. The sum must be 1 within
    /// [`FLOAT_SUM_TOLERANCE`]; the triple is then re-normalised by it.
    pub fn new(c: Scale, p: f64, q: f64, r: f64) -> Result<Self> {
        for (name, x) in [("p", p), ("q", q), ("r", r)] {
            if !(x.is_finite() && (0.0..=1.0).contains(&x)) {
                return Err(Error::InvalidProbabilities(format!("{name} = {x} is not in [0, 1]")));
            }
        }
        let sum = p + q + r;
        if (sum - 1.0).abs() > FLOAT_SUM_TOLERANCE {
            return Err(Error::InvalidProbabilities(format!("p + q + r = {sum} != 1")));
        }
        let (p, q, r) = (p / sum, q / sum, r / sum);
        check_support(p > 0.0, q > 0.0, r > 0.0)?;
        Ok(ModelParams { c, p, q, r, exact: None })
    }

    /// `p = 1 - q - r`.
    pub fn from_qr(c: Scale, q: f64, r: f64) -> Result<Self> {
        let p = 1.0 - q - r;
        // Absorb the rounding of 1 - q - r near zero.
        let p = if p.abs() < 1e-15 { 0.0 } else { p };
        ModelParams::new(c, p, q, r)
    }

    /// Exact triple; `p + q + r` must equal 1 exactly.
    pub fn exact(c: Scale, p: BigRational, q: BigRational, r: BigRational) -> Result<Self> {
        let zero = BigRational::zero();
        let one = BigRational::one();
        for (name, x) in [("p", &p), ("q", &q), ("r", &r)] {
            if x < &zero || x > &one {
                return Err(Error::InvalidProbabilities(format!("{name} = {x} is not in [0, 1]")));
            }
        }
        let sum = &p + &q + &r;
        if sum != one {
            return Err(Error::InvalidProbabilities(format!("p + q + r = {sum} != 1")));
        }
        check_support(p.is_positive(), q.is_positive(), r.is_positive())?;
        Ok(ModelParams { c, p: to_f64(&p), q: to_f64(&q), r: to_f64(&r), exact: Some(ExactTriple { p, q, r }) })
    }

    /// Exact triple with `p = 1 - q - r`.
    pub fn exact_qr(c: Scale, q: BigRational, r: BigRational) -> Result<Self> {
        let p = BigRational::one() - &q - &r;
        ModelParams::exact(c, p, q, r)
    }

    pub fn c(&self) -> &Scale {
        &self.c
    }

    pub fn c_value(&self) -> f64 {
        self.c.value()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn exact_triple(&self) -> Option<&ExactTriple> {
        self.exact.as_ref()
    }

    /// Same `(p, q, r)` with another scale.
    pub fn with_scale(&self, c: Scale) -> Self {
        ModelParams { c, ..self.clone() }
    }

    /// `r <= pq`, evaluated exactly when the triple is exact.
    pub fn r_le_pq(&self) -> bool {
        match &self.exact {
            Some(e) => e.r <= &e.p * &e.q,
            None => self.r <= self.p * self.q,
        }
    }

    /// `p <= qr`, evaluated exactly when the triple is exact.
    pub fn p_le_qr(&self) -> bool {
        match &self.exact {
            Some(e) => e.p <= &e.q * &e.r,
            None => self.p <= self.q * self.r,
        }
    }

    pub fn p_eq_r(&self) -> bool {
        match &self.exact {
            Some(e) => e.p == e.r,
            None => self.p == self.r,
        }
    }

    pub fn p_is_zero(&self) -> bool {
        match &self.exact {
            Some(e) => e.p.is_zero(),
            None => self.p == 0.0,
        }
    }

    pub fn q_is_zero(&self) -> bool {
        match &self.exact {
            Some(e) => e.q.is_zero(),
            None => self.q == 0.0,
        }
    }

    /// Whether the innovation law (hence the stationary law) is infinitely
    /// divisible: `p = 0`, or `q > 0` and `r <= pq`.
    pub fn is_infinitely_divisible(&self) -> bool {
        self.p_is_zero() || (!self.q_is_zero() && self.r_le_pq())
    }

    /// Mean of the innovation law: `(q + r) / (1 - q)`.
    pub fn innovation_mean(&self) -> f64 {
        (self.q + self.r) / (1.0 - self.q)
    }
}

fn check_support(p_pos: bool, q_pos: bool, r_pos: bool) -> Result<()> {
    if !(p_pos || r_pos) {
        return Err(Error::InvalidRate("p + r = 0: N never jumps".into()));
    }
    if !(q_pos || r_pos) {
        return Err(Error::InvalidRate("q + r = 0: Y never jumps".into()));
    }
    if !(p_pos || q_pos) {
        return Err(Error::DegenerateModel);
    }
    Ok(())
}

/// Normalises raw rates: `p = u/(u+v+w)`, `q = v/(u+v+w)`, `r = w/(u+v+w)`.
pub fn normalize(raw: &RawRates, c: Scale) -> Result<ModelParams> {
    check_c(c.value())?;
    // Re-validate in case the fields were mutated after construction.
    RawRates::new(raw.u, raw.v, raw.w)?;
    match &raw.exact {
        Some([u, v, w]) => {
            let s = u + v + w;
            ModelParams::exact(c, u / &s, v / &s, w / &s)
        }
        None => {
            let (p, q, r) = raw.mark_probabilities();
            ModelParams::new(c, p, q, r)
        }
    }
}

/// The point `sum_j c^-j = c / (c - 1)` on which the law collapses when `r = 1`.
pub fn degenerate_value(c: f64) -> Result<f64> {
    check_c(c)?;
    Ok(c / (c - 1.0))
}

/// Parses a decimal literal (`"0.1715"`, `"-2"`, `"3.5e-2"`) into an exact rational.
pub fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|ch| ch.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all_digits.parse().ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

pub(crate) fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
