#![allow(dead_code)]

use gouq::params::{ModelParams, Scale};
use proptest::prelude::*;

/// `(q, r)` with `p = 1 - q - r` kept away from 0.
pub fn qr() -> impl Strategy<Value = (f64, f64)> {
    (0.02f64..0.95, 0.0f64..1.0).prop_map(|(q, f)| (q, f * (0.98 - q)))
}

/// Infinitely divisible `(q, r)`: `r <= pq`.
pub fn id_qr() -> impl Strategy<Value = (f64, f64)> {
    qr().prop_map(|(q, r)| {
        let p = 1.0 - q - r;
        if r <= p * q {
            (q, r)
        } else {
            // Move r to a fraction of the boundary r = (1 - q) q / (1 + q).
            let boundary = (1.0 - q) * q / (1.0 + q);
            (q, boundary * (r / (1.0 - q)))
        }
    })
}

pub fn params(c: f64, q: f64, r: f64) -> ModelParams {
    ModelParams::from_qr(Scale::float(c).unwrap(), q, r).unwrap()
}

/// `P(Y = k)` for `Y = K + B`, `K` geometric with ratio `q`, `B` Bernoulli(`r/(p+r)`).
pub fn oracle_pmf(p: f64, q: f64, r: f64, k: usize) -> f64 {
    if k == 0 {
        p
    } else {
        q.powi(k as i32) * p + q.powi(k as i32 - 1) * r
    }
}
