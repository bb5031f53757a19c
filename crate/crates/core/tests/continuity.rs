mod common;

use common::{id_qr, params, qr};
use gouq::continuity::{
    catalogue_certificate, certify_pisot, classify_continuity, dim_bound, power_singularity_threshold,
    small_q_condition, ContinuityDecision, ThresholdRule,
};
use gouq::params::Scale;
use gouq::rho::rho_power_entropy;
use proptest::prelude::*;

proptest! {
    #[test]
    fn never_absolutely_continuous((q, r) in qr(), c in 1.05f64..10.0, ps in any::<bool>()) {
        let v = classify_continuity(&params(c, q, r), None, ps);
        prop_assert!(v.decision != ContinuityDecision::AbsolutelyContinuous);
        if v.decision == ContinuityDecision::ContinuousSingular {
            prop_assert!(v.dim_bound.is_some_and(|d| d < 1.0));
        }
    }

    #[test]
    fn singular_verdicts_need_a_certificate_or_the_entropy_bound((q, r) in qr(), c in 2u64..12) {
        let scale = Scale::integer(c).unwrap();
        let cert = certify_pisot(&scale, &[1, -(c as i64)]).unwrap();
        let m = gouq::params::ModelParams::from_qr(scale, q, r).unwrap();
        let v = classify_continuity(&m, Some(&cert), false);
        prop_assert_eq!(v.decision, ContinuityDecision::ContinuousSingular);
        prop_assert!(v.pisot_certified);
    }
}

#[test]
fn small_q_implies_dimension_below_one() {
    for i in 1..=40 {
        let c = 1.1 + 0.25 * i as f64;
        for j in 1..100 {
            let q = j as f64 / 100.0;
            if small_q_condition(q, c) {
                let d = dim_bound(&params(c, q, 0.0)).unwrap();
                assert!(d <= 1.0, "c = {c}, q = {q}: {d}");
            }
        }
    }
}

#[test]
fn integer_and_catalogue_power_sums() {
    for c in 2..=20u64 {
        let cert = certify_pisot(&Scale::integer(c).unwrap(), &[1, -(c as i64)]).unwrap();
        assert!(cert.power_sum_checks(30).iter().all(|chk| chk.ok));
    }
    let golden = Scale::algebraic((1.0 + 5f64.sqrt()) / 2.0, vec![1, -1, -1]).unwrap();
    let cert = catalogue_certificate(&golden).unwrap();
    assert!(cert.power_sum_checks(30).iter().all(|chk| chk.ok));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn threshold_contract((q, r) in id_qr(), c in 1.3f64..8.0) {
        let m = params(c, q, r);
        let th = power_singularity_threshold(&m, None).unwrap();
        prop_assume!(th.rule == ThresholdRule::EntropyBisection);
        let at = rho_power_entropy(&m, th.t_low).unwrap().entropy;
        prop_assert!((at - c.ln()).abs() < 1e-9);
        prop_assert!(rho_power_entropy(&m, th.t_low / 2.0).unwrap().entropy < c.ln());
    }

    #[test]
    fn threshold_increases_with_c((q, r) in id_qr(), c in 1.3f64..6.0, dc in 0.05f64..2.0) {
        let lo = power_singularity_threshold(&params(c, q, r), None).unwrap();
        let hi = power_singularity_threshold(&params(c + dc, q, r), None).unwrap();
        prop_assume!(lo.rule == ThresholdRule::EntropyBisection && hi.rule == ThresholdRule::EntropyBisection);
        prop_assert!(hi.t_low > lo.t_low + 1e-12);
    }
}
