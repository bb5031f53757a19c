//! Turning command-line flags into library parameters.

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use gouq::continuity::PISOT_CATALOGUE;
use gouq::params::{normalize, parse_decimal, ModelParams, RawRates, Scale};
use serde_json::{json, Value};

#[derive(Debug, Clone, Args)]
pub struct ScaleArgs {
    /// Scale c > 1: an integer, a decimal, or one of `e`, `golden`, `plastic`.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    /// Numerator of a rational scale c = c_num / c_den.
    #[arg(long, requires = "c_den", conflicts_with = "c")]
    pub c_num: Option<u64>,
    /// Denominator of a rational scale c = c_num / c_den.
    #[arg(long, requires = "c_num")]
    pub c_den: Option<u64>,
    /// Integer polynomial with root c, leading coefficient first (e.g. "1,-1,-1").
    #[arg(long, allow_hyphen_values = true)]
    pub pisot_poly: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct LawArgs {
    /// Probability of a (0,1) jump.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// Probability of a (1,1) jump.
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<String>,
    /// Probability of a (1,0) jump (defaults to 1 - q - r).
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<String>,
    /// Rate of (1,0) jumps; with --v and --w replaces --p/--q/--r.
    #[arg(long, allow_hyphen_values = true, requires_all = ["v", "w"], conflicts_with_all = ["q", "r", "p"])]
    pub u: Option<String>,
    /// Rate of (0,1) jumps.
    #[arg(long, allow_hyphen_values = true, requires_all = ["u", "w"])]
    pub v: Option<String>,
    /// Rate of (1,1) jumps.
    #[arg(long, allow_hyphen_values = true, requires_all = ["u", "v"])]
    pub w: Option<String>,
}

pub fn parse_poly(s: &str) -> Result<Vec<i64>> {
    s.split(',').map(|x| x.trim().parse::<i64>().with_context(|| format!("bad polynomial coefficient {x:?}"))).collect()
}

fn float(name: &str, s: &str) -> Result<f64> {
    let x: f64 = s.trim().parse().with_context(|| format!("--{name} {s:?} is not a number"))?;
    if !x.is_finite() {
        bail!("--{name} must be finite, got {s}");
    }
    Ok(x)
}

fn catalogue_poly(name: &str) -> Option<&'static [i64]> {
    // "golden ratio" answers to "golden" and "golden-ratio".
    PISOT_CATALOGUE
        .iter()
        .find(|(n, _)| n.replace(' ', "-") == name || n.split(' ').next() == Some(name))
        .map(|(_, p)| *p)
}

/// The largest real root of `poly`, found by bisection above the Cauchy bound.
fn largest_real_root(poly: &[i64]) -> Option<f64> {
    let lead = *poly.first()? as f64;
    if lead == 0.0 {
        return None;
    }
    let eval = |x: f64| poly.iter().fold(0.0, |acc, &a| acc * x + a as f64);
    let bound = 1.0 + poly[1..].iter().map(|&a| (a as f64 / lead).abs()).fold(0.0, f64::max);
    // Scan downwards for the first sign change.
    let steps = 100_000;
    let h = 2.0 * bound / steps as f64;
    let mut hi = bound;
    for _ in 0..steps {
        let lo = hi - h;
        if eval(lo).signum() != eval(hi).signum() || eval(lo) == 0.0 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if eval(m).signum() == eval(a).signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
        hi = lo;
    }
    None
}

impl ScaleArgs {
    pub fn resolve(&self) -> Result<Scale> {
        // A rational c stays rational even with a polynomial: it can only be
        // Pisot if it is an integer, which `Scale::rational` already collapses.
        if let (Some(num), Some(den)) = (self.c_num, self.c_den) {
            return Ok(Scale::rational(num, den)?);
        }
        if let Some(poly) = &self.pisot_poly {
            let poly = parse_poly(poly)?;
            let value = match &self.c {
                Some(c) => named_value(c).map_or_else(|| float("c", c), Ok)?,
                None => largest_real_root(&poly).ok_or_else(|| anyhow!("the polynomial has no real root; pass --c"))?,
            };
            return Ok(Scale::algebraic(value, poly)?);
        }
        let c = self.c.as_deref().ok_or_else(|| anyhow!("missing scale: pass --c or --c-num/--c-den"))?;
        if let Some(poly) = catalogue_poly(c) {
            let value = largest_real_root(poly).expect("catalogue polynomials have a real root");
            return Ok(Scale::algebraic(value, poly.to_vec())?);
        }
        if let Some(value) = named_value(c) {
            return Ok(Scale::float(value)?);
        }
        if let Ok(n) = c.trim().parse::<u64>() {
            return Ok(Scale::integer(n)?);
        }
        Ok(Scale::float(float("c", c)?)?)
    }
}

fn named_value(c: &str) -> Option<f64> {
    match c.trim() {
        "e" => Some(std::f64::consts::E),
        name => catalogue_poly(name).and_then(largest_real_root),
    }
}

impl LawArgs {
    pub fn has_rates(&self) -> bool {
        self.u.is_some()
    }

    pub fn raw_rates(&self) -> Result<RawRates> {
        let (u, v, w) = match (&self.u, &self.v, &self.w) {
            (Some(u), Some(v), Some(w)) => (u, v, w),
            _ => bail!("pass the jump rates --u, --v and --w"),
        };
        match (parse_decimal(u), parse_decimal(v), parse_decimal(w)) {
            (Some(u), Some(v), Some(w)) => Ok(RawRates::exact(u, v, w)?),
            _ => Ok(RawRates::new(float("u", u)?, float("v", v)?, float("w", w)?)?),
        }
    }

    pub fn params(&self, c: Scale) -> Result<ModelParams> {
        if self.has_rates() {
            return Ok(normalize(&self.raw_rates()?, c)?);
        }
        let q = self.q.as_deref().ok_or_else(|| anyhow!("missing --q (or --u/--v/--w)"))?;
        let r = self.r.as_deref().ok_or_else(|| anyhow!("missing --r (or --u/--v/--w)"))?;
        let exact = (parse_decimal(q), parse_decimal(r), self.p.as_deref().map(parse_decimal));
        let params = match exact {
            (Some(q), Some(r), None) => ModelParams::exact_qr(c, q, r)?,
            (Some(q), Some(r), Some(Some(p))) => ModelParams::exact(c, p, q, r)?,
            _ => {
                let (q, r) = (float("q", q)?, float("r", r)?);
                match &self.p {
                    Some(p) => ModelParams::new(c, float("p", p)?, q, r)?,
                    None => ModelParams::from_qr(c, q, r)?,
                }
            }
        };
        Ok(params)
    }
}

pub fn params_json(params: &ModelParams) -> Value {
    let mut v = json!({
        "c": params.c(),
        "p": params.p(),
        "q": params.q(),
        "r": params.r(),
    });
    if let Some(exact) = params.exact_triple() {
        v["exact"] = json!({
            "p": exact.p.to_string(),
            "q": exact.q.to_string(),
            "r": exact.r.to_string(),
        });
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_root() {
        let golden = largest_real_root(&[1, -1, -1]).unwrap();
        assert!((golden - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
        let plastic = largest_real_root(&[1, 0, -1, -1]).unwrap();
        assert!((plastic - 1.324_717_957_244_746).abs() < 1e-14);
        assert!(largest_real_root(&[1, 0, 1]).is_none());
    }

    #[test]
    fn polynomial_parsing() {
        assert_eq!(parse_poly("1, -1,-1").unwrap(), vec![1, -1, -1]);
        assert!(parse_poly("1,x").is_err());
    }
}
