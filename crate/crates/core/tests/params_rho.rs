mod common;

use common::{id_qr, oracle_pmf, params, qr};
use gouq::params::{normalize, ModelParams, RawRates, Scale};
use gouq::rho::{rho_cf, rho_entropy, rho_pmf, rho_power_entropy, rho_power_pmf, CharacteristicFunction, DEFAULT_TAIL};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::{LN_2, PI};

proptest! {
    #[test]
    fn normalize_is_scale_invariant(u in 0.01f64..10.0, v in 0.01f64..10.0, w in 0.0f64..10.0, lambda in 1e-3f64..1e3) {
        let c = Scale::integer(2).unwrap();
        let a = normalize(&RawRates::new(u, v, w).unwrap(), c.clone()).unwrap();
        let b = normalize(&RawRates::new(lambda * u, lambda * v, lambda * w).unwrap(), c).unwrap();
        prop_assert!((a.p() - b.p()).abs() < 1e-14);
        prop_assert!((a.q() - b.q()).abs() < 1e-14);
        prop_assert!((a.r() - b.r()).abs() < 1e-14);
    }

    #[test]
    fn normalize_round_trips((q, r) in qr()) {
        let m = params(2.0, q, r);
        let raw = RawRates::new(m.p(), m.q(), m.r()).unwrap();
        let back = normalize(&raw, m.c().clone()).unwrap();
        prop_assert!((back.p() - m.p()).abs() < 1e-15);
        prop_assert!((back.q() - m.q()).abs() < 1e-15);
        prop_assert!((back.r() - m.r()).abs() < 1e-15);
    }

    #[test]
    fn pmf_is_a_probability((q, r) in qr()) {
        let m = params(2.0, q, r);
        let pmf = rho_pmf(&m, 60);
        prop_assert!(pmf.masses().iter().all(|&x| x >= 0.0));
        prop_assert!((pmf.enumerated_mass() + pmf.tail() - 1.0).abs() < 1e-12);
        for k in 0..=60 {
            prop_assert!((pmf.mass(k) - oracle_pmf(m.p(), q, r, k)).abs() < 1e-15);
        }
    }

    #[test]
    fn cf_is_the_fourier_sum_of_the_pmf((q, r) in qr()) {
        let m = params(2.0, q, r);
        let cf = rho_cf(&m);
        prop_assert!((cf.eval(0.0) - 1.0).norm() < 1e-13);
        for k in 1..=100 {
            let z = 0.1 * k as f64;
            let sum: Complex64 = (0..2000).map(|j| oracle_pmf(m.p(), q, r, j) * Complex64::cis(j as f64 * z)).sum();
            prop_assert!((cf.eval(z) - sum).norm() < 1e-9);
            prop_assert!((cf.eval(-z) - cf.eval(z).conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn entropy_closed_form_matches_direct_sum((q, r) in qr()) {
        let m = params(2.0, q, r);
        let direct: f64 = (0..20_000)
            .map(|k| oracle_pmf(m.p(), q, r, k))
            .filter(|&x| x > 0.0)
            .map(|x| -x * x.ln())
            .sum();
        prop_assert!((rho_entropy(&m) - direct).abs() < 1e-10);
    }

    #[test]
    fn geometric_entropy_below_log2_over_p(q in 0.01f64..0.99) {
        let m = params(2.0, q, 0.0);
        prop_assert!(rho_entropy(&m) < LN_2 / (1.0 - q));
    }

    #[test]
    fn power_pmfs_form_a_semigroup((q, r) in id_qr(), t in 0.05f64..3.0, s in 0.05f64..3.0) {
        let m = params(2.0, q, r);
        let kmax = 200;
        let a = rho_power_pmf(&m, t, kmax).unwrap();
        let b = rho_power_pmf(&m, s, kmax).unwrap();
        let ab = rho_power_pmf(&m, t + s, kmax).unwrap();
        let conv = a.convolve(&b);
        for k in 0..=kmax {
            prop_assert!((conv.mass(k) - ab.mass(k)).abs() < 1e-9, "k = {k}");
        }
    }

    #[test]
    fn power_one_is_rho((q, r) in id_qr()) {
        let m = params(2.0, q, r);
        let one = rho_power_pmf(&m, 1.0, 80).unwrap();
        for k in 0..=80 {
            prop_assert!((one.mass(k) - oracle_pmf(m.p(), q, r, k)).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn power_entropy_strictly_increasing((q, r) in id_qr()) {
        let m = params(2.0, q, r);
        let hs: Vec<f64> = (1..=30).map(|k| rho_power_entropy(&m, 0.1 * k as f64).unwrap().entropy).collect();
        for w in hs.windows(2) {
            prop_assert!(w[1] > w[0] + 1e-12);
        }
    }
}

#[test]
fn real_zero_at_pi_iff_p_equals_r() {
    for i in 1..20 {
        for j in 0..20 - i {
            let q = i as f64 / 20.0;
            let r = j as f64 / 20.0;
            let p = (20 - i - j) as f64 / 20.0;
            if p == 0.0 {
                continue;
            }
            let m = ModelParams::new(Scale::integer(2).unwrap(), p, q, r).unwrap();
            let at_pi = rho_cf(&m).eval(PI).norm();
            assert_eq!(at_pi < 1e-14, 20 - i - j == j, "q = {q}, r = {r}: |rho^(pi)| = {at_pi}");
        }
    }
}

#[test]
fn pmf_tail_is_recorded() {
    let m = params(2.0, 0.9, 0.05);
    let pmf = rho_pmf(&m, 10);
    assert!(pmf.tail() > 0.1);
    let full = gouq::rho::default_kmax(0.9, DEFAULT_TAIL);
    assert!(0.9f64.powi(full as i32) < DEFAULT_TAIL);
}
