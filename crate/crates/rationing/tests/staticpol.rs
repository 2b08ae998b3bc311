mod common;

use common::*;
use rand::Rng;
use rationing::chain::average_profit;
use rationing::staticpol::*;
use rationing::{Error, SystemParams};

#[test]
fn threshold_shapes() {
    let s = example1(1.0);
    assert_eq!(build_static(&s, 1).unwrap().policy, rationing::Policy::ones(15));
    assert_eq!(build_static(&s, 16).unwrap().policy, rationing::Policy::zeros(15));
    let mid = build_static(&s, 4).unwrap().policy;
    assert!(mid.is_threshold());
    assert_eq!(mid.as_slice()[..4], [0, 0, 0, 1]);
    assert!(matches!(build_static(&s, 0), Err(Error::ThetaOutOfRange { theta: 0, max: 16 })));
    assert!(matches!(build_static(&s, 17), Err(Error::ThetaOutOfRange { theta: 17, .. })));
    assert!(matches!(static_profit_closed_form(&s, 17), Err(Error::ThetaOutOfRange { .. })));
}

#[test]
fn closed_form_matches_generic_route() {
    let mut r = rng(51);
    let mut count = 0;
    for _ in 0..300 {
        let n = r.random_range(1..=40);
        let k = r.random_range(1..=n);
        let p = r.random_range(0.0..30.0);
        let s = random_params(&mut r, n, k, p);
        for theta in 1..=k + 1 {
            let cf = static_profit_closed_form(&s, theta).unwrap();
            let generic = average_profit(&s, &build_static(&s, theta).unwrap().policy).unwrap();
            assert!(rel_close(cf.eta, generic, 1e-9), "N={n} K={k} theta={theta}: {} vs {generic}", cf.eta);
            count += 1;
        }
    }
    assert!(count > 1000);
}

#[test]
fn closed_form_with_threshold_at_capacity() {
    let mut r = rng(52);
    for _ in 0..50 {
        let n = r.random_range(1..=20);
        let s = random_params(&mut r, n, n, 5.0);
        for theta in 1..=n + 1 {
            let cf = static_profit_closed_form(&s, theta).unwrap();
            assert!(rel_close(cf.eta, eta_oracle(&s, &build_static(&s, theta).unwrap().policy), 1e-9));
        }
    }
}

#[test]
fn unit_ratio_falls_back_to_summation() {
    // lambda = mu1 makes alpha exactly one
    let s = SystemParams { lambda: 4.0, ..example1(2.0) };
    let cf = static_profit_closed_form(&s, 5).unwrap();
    assert!(matches!(cf.fallback, Some(Error::DegenerateRatio { .. })));
    let generic = average_profit(&s, &build_static(&s, 5).unwrap().policy).unwrap();
    assert_eq!(cf.eta, generic);
    assert!(optimal_static_threshold(&s).unwrap().fallback_used);
    // a ratio just outside the guard still uses the geometric sums accurately
    let s = SystemParams { lambda: 4.0 + 1e-6, ..example1(2.0) };
    let cf = static_profit_closed_form(&s, 5).unwrap();
    assert!(cf.fallback.is_none());
    let generic = average_profit(&s, &build_static(&s, 5).unwrap().policy).unwrap();
    assert!(rel_close(cf.eta, generic, 1e-9), "{} vs {generic}", cf.eta);
    for lambda in [3.97, 4.02, 5.99, 6.0 + 1e-7] {
        let s = SystemParams { lambda, ..example1(2.0) };
        for theta in [1, 5, 16] {
            let cf = static_profit_closed_form(&s, theta).unwrap();
            let generic = average_profit(&s, &build_static(&s, theta).unwrap().policy).unwrap();
            assert!(rel_close(cf.eta, generic, 1e-9), "lambda={lambda} theta={theta}");
        }
    }
}

#[test]
fn optimum_matches_exhaustive_threshold_search() {
    let mut r = rng(53);
    for _ in 0..100 {
        let n = r.random_range(1..=30);
        let k = r.random_range(1..=n);
        let p = r.random_range(0.0..30.0);
        let s = random_params(&mut r, n, k, p);
        let opt = optimal_static_threshold(&s).unwrap();
        assert_eq!(opt.sweep.len(), k + 1);
        let best =
            (1..=k + 1).map(|t| eta_oracle(&s, &build_static(&s, t).unwrap().policy)).fold(f64::NEG_INFINITY, f64::max);
        assert!(rel_close(opt.eta, best, 1e-9));
    }
}

#[test]
fn ties_go_to_the_smaller_threshold() {
    // at P = 1.4 both unit thresholds earn 4.6
    let opt = optimal_static_threshold(&unit(1.4)).unwrap();
    assert!((opt.sweep[0].1 - opt.sweep[1].1).abs() < 1e-12);
    assert_eq!(opt.theta, 1);
}

#[test]
fn example1_static_optima() {
    let high = optimal_static_threshold(&example1(10.0)).unwrap();
    assert_eq!(high.theta, 16);
    assert!((high.eta - 21.094).abs() < 1e-3);
    let low = optimal_static_threshold(&example1(0.1)).unwrap();
    assert_eq!(low.theta, 5);
    assert!((low.eta - 21.545).abs() < 1e-3);
}

#[test]
fn sign_conditions_hold_at_the_best_threshold() {
    let mut r = rng(54);
    for _ in 0..150 {
        let n = r.random_range(1..=25);
        let k = r.random_range(1..=n);
        let p = r.random_range(0.0..30.0);
        let s = random_params(&mut r, n, k, p);
        let rep = theorem12_check(&s).unwrap();
        assert!(rep.holds, "{rep:?}");
        let interior = rep.theta_star > 1 && rep.theta_star <= k;
        assert_eq!(
            rep.conditions.len(),
            if interior {
                4
            } else if k == 0 {
                0
            } else {
                2
            }
        );
        assert_eq!(rep.neighbor_undefined.is_some(), !interior);
    }
}

#[test]
fn sign_conditions_detect_a_poor_threshold() {
    // at P = 0.1 serving class 2 early pays, so theta = K+1 is far from best
    let s = example1(0.1);
    let rep = theorem12_check_at(&s, 16).unwrap();
    assert!(!rep.holds);
    assert!(matches!(rep.neighbor_undefined, Some(Error::NeighborUndefined { theta: 16 })));
    let rep = theorem12_check(&s).unwrap();
    assert_eq!(rep.theta_star, 5);
    assert!(rep.holds);
    assert!(rep.neighbor_undefined.is_none());
}
