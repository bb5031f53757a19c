mod common;

use common::{id_qr, params, qr};
use gouq::divisibility::{
    classify_mu_id, classify_rho_id, classify_sym_id, katti, levy_coefficients_a, sym_coefficients, sym_mmax, Decision,
    DEFAULT_SYM_TOL,
};
use gouq::rho::{rho_cf, rho_pmf, CharacteristicFunction};
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #[test]
    fn katti_solves_its_equations((q, r) in qr()) {
        let m = params(2.0, q, r);
        let pmf = rho_pmf(&m, 120);
        let seq = katti(&pmf, 60).unwrap();
        for n in 1..=60 {
            let terms: Vec<f64> = (1..=n).map(|k| k as f64 * seq.get(k).unwrap() * pmf.mass(n - k)).collect();
            let scale: f64 = terms.iter().map(|t| t.abs()).sum();
            let lhs = n as f64 * pmf.mass(n);
            prop_assert!((lhs - terms.iter().sum::<f64>()).abs() <= 1e-10 * scale.max(1e-300), "n = {n}");
        }
    }

    #[test]
    fn katti_negative_iff_not_id((q, r) in qr()) {
        let m = params(2.0, q, r);
        prop_assume!((r - m.p() * q).abs() > 1e-6);
        let seq = katti(&rho_pmf(&m, 120), 60).unwrap();
        prop_assert_eq!(seq.first_negative_index.is_some(), r > m.p() * q);
    }

    #[test]
    fn levy_exponent_reproduces_cf((q, r) in id_qr()) {
        let m = params(2.0, q, r);
        let a = levy_coefficients_a(&m, 3000).unwrap();
        let cf = rho_cf(&m);
        for k in 1..=40 {
            let z = 0.25 * k as f64;
            let exponent: Complex64 = a
                .iter()
                .enumerate()
                .map(|(i, &am)| am * (Complex64::cis((i + 1) as f64 * z) - 1.0))
                .sum();
            prop_assert!((exponent.exp() - cf.eval(z)).norm() < 1e-9);
        }
    }

    #[test]
    fn verdicts_are_consistent((q, r) in qr()) {
        let m = params(2.0, q, r);
        let rho = classify_rho_id(&m);
        let mu = classify_mu_id(&m);
        let sym = classify_sym_id(&m);
        prop_assert_eq!(rho.decision, mu.decision);
        prop_assert!(rho.decision != Decision::Undetermined);
        if rho.is_yes() {
            prop_assert_eq!(sym.decision, Decision::Yes);
        }
    }
}

proptest! {
    // q near 1 makes the E_m double sum long; the acceptance grid covers q = 20/21.
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sym_constants_and_d_bound((q, r) in qr()) {
        let m = params(2.0, q, r);
        prop_assume!(q <= 0.8 && m.p().min(r) <= 0.9 * m.p().max(r));
        let mmax = sym_mmax(&m, DEFAULT_SYM_TOL).unwrap();
        let s = sym_coefficients(&m, mmax, DEFAULT_SYM_TOL).unwrap();
        prop_assert!(s.a >= 0.0 && s.a <= 1.0);
        prop_assert!(s.b > 0.0 && s.b < 1.0);
        prop_assert!(s.c > 0.0);
        for (i, &d) in s.d.iter().enumerate() {
            let k = (i + 1) as f64;
            prop_assert!(d.abs() <= (s.a.powf(k) + s.b.powf(k)) / (k * 2f64.powf(k)) * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn sym_reconstruction_matches_modulus((q, r) in qr()) {
        let m = params(2.0, q, r);
        prop_assume!(q <= 0.8 && m.p().min(r) <= 0.9 * m.p().max(r));
        let mmax = sym_mmax(&m, DEFAULT_SYM_TOL).unwrap();
        let s = sym_coefficients(&m, mmax, DEFAULT_SYM_TOL).unwrap();
        let tol = (10.0 * s.truncation_error).max(1e-8);
        let cf = rho_cf(&m);
        for k in 1..=50 {
            let z = 0.2 * k as f64;
            prop_assert!((s.reconstruct(z) - cf.eval(z).norm_sqr()).abs() < tol);
        }
    }

    #[test]
    fn sym_coefficients_match_closed_form((q, r) in qr()) {
        let m = params(2.0, q, r);
        let p = m.p();
        prop_assume!(p.min(r) <= 0.9 * p.max(r));
        let alpha = p.min(r) / p.max(r);
        let s = sym_coefficients(&m, 40, DEFAULT_SYM_TOL).unwrap();
        for (i, &e) in s.e.iter().enumerate() {
            let k = (i + 1) as i32;
            let closed = (q.powi(k) - (-alpha).powi(k)) / k as f64;
            prop_assert!((e - closed).abs() < 1e-10, "m = {k}");
        }
    }

    /// With `r > p`, `A <= B` exactly when `p <= qr`.
    #[test]
    fn a_le_b_iff_p_le_qr((q, r) in qr()) {
        let m = params(2.0, q, r);
        let p = m.p();
        prop_assume!(r > p && (p - q * r).abs() > 1e-9);
        let s = sym_coefficients(&m, 1, DEFAULT_SYM_TOL).unwrap();
        prop_assert_eq!(s.a <= s.b, p <= q * r);
    }
}
