mod common;

use common::*;
use rand::Rng;
use rationing::chain::average_profit;
use rationing::model::{enumerate_policies, Policy};
use rationing::poisson::realization_factors_recurrence;
use rationing::sensitivity::*;
use rationing::{Error, SystemParams};

/// An instance above the critical penalty of all-zeros where the policy
/// (0,0,1,1) still profits from serving class 2 at position 3.
fn class_counterexample() -> SystemParams {
    SystemParams {
        lambda: 1.18139,
        mu1: 0.66321,
        mu2: 2.04890,
        capacity_n: 8,
        threshold_k: 4,
        c_hold: 6.1524,
        c_lost1: 7.4246,
        c_lost2: 1.13115,
        c_buy: 3.37214,
        c_opp: 0.30811,
        price_r: 4.48653,
        penalty_p: 24.0109,
    }
}

#[test]
fn unit_single_flip_difference() {
    // eta(1) - eta(0) = (5 - 2P/7) - 4.6 = (2/7)(1.4 - P)
    for p in [0.0, 1.0, 1.4, 10.0, 100.0] {
        let s = unit(p);
        let expected = 2.0 / 7.0 * (1.4 - p);
        let one = difference_one_position(&s, &pol(&[0]), &pol(&[1]), 1).unwrap();
        let gen = difference_general(&s, &pol(&[0]), &pol(&[1])).unwrap();
        assert!((one - expected).abs() < 1e-12, "P={p}: {one}");
        assert!((gen - expected).abs() < 1e-12, "P={p}: {gen}");
    }
    let prof = penalty_roots(&unit(0.0), &pol(&[0])).unwrap();
    assert!((prof.roots[0] - 1.4).abs() < 1e-12);
    assert!((prof.p_high - 1.4).abs() < 1e-12);
}

#[test]
fn single_flip_requires_exactly_one_difference() {
    let s = unit(0.0);
    assert!(matches!(difference_one_position(&s, &pol(&[0]), &pol(&[0]), 1), Err(Error::NotSingleFlip { size: 0 })));
    let s = example1(1.0);
    let a = Policy::zeros(15);
    assert!(matches!(difference_one_position(&s, &a, &a.flipped(2), 3), Err(Error::NotSingleFlip { .. })));
}

#[test]
fn general_difference_matches_direct_profits_exhaustively() {
    let mut r = rng(41);
    for k in 1..=6usize {
        let n = r.random_range(k..=12);
        let base = random_params(&mut r, n, k, 0.0);
        let all: Vec<Policy> = enumerate_policies(k).unwrap().collect();
        // every pair for small K, every partner of a few anchors otherwise
        let anchors: Vec<Policy> =
            if k <= 4 { all.clone() } else { (0..4).map(|_| random_policy(&mut r, k)).collect() };
        for p in [0.0, 1.0, 10.0, 100.0] {
            let s = base.with_penalty(p);
            let eta: Vec<f64> = all.iter().map(|d| average_profit(&s, d).unwrap()).collect();
            for d in &anchors {
                let ed = average_profit(&s, d).unwrap();
                for (c, ec) in all.iter().zip(&eta) {
                    let diff = difference_general(&s, d, c).unwrap();
                    assert!(
                        (diff - (ec - ed)).abs() <= 1e-9 * ed.abs().max(ec.abs()).max(1.0),
                        "K={k} P={p} d={d} c={c}: {diff} vs {}",
                        ec - ed
                    );
                }
            }
        }
    }
}

#[test]
fn single_flip_formula_matches_direct_profits() {
    let mut r = rng(42);
    for _ in 0..60 {
        let n = r.random_range(1..=12);
        let k = r.random_range(1..=n.min(6));
        let p = [0.0, 1.0, 10.0, 100.0][r.random_range(0..4)];
        let s = random_params(&mut r, n, k, p);
        let d = random_policy(&mut r, k);
        let ed = average_profit(&s, &d).unwrap();
        for i in 1..=k {
            let c = d.flipped(i);
            let ec = average_profit(&s, &c).unwrap();
            let one = difference_one_position(&s, &d, &c, i).unwrap();
            assert!((one - (ec - ed)).abs() <= 1e-9 * ed.abs().max(ec.abs()).max(1.0));
        }
    }
}

#[test]
fn roots_zero_the_shifted_factor() {
    let mut r = rng(43);
    let mut checked = 0;
    for _ in 0..100 {
        let n = r.random_range(1..=20);
        let k = r.random_range(1..=n);
        let s = random_params(&mut r, n, k, 0.0);
        let d = random_policy(&mut r, k);
        let prof = penalty_roots(&s, &d).unwrap();
        for i in 1..=k {
            let root = prof.roots[i - 1];
            if !root.is_finite() {
                assert!(prof.degenerate.contains(&i));
                continue;
            }
            // independent re-solve at the root penalty
            let sp = s.with_penalty(root);
            let eta = average_profit(&sp, &d).unwrap();
            let rf = realization_factors_recurrence(&sp, &d, eta).unwrap();
            let scale = prof.const_terms[i - 1].abs().max(1.0);
            assert!(rf.shifted(i).abs() <= 1e-8 * scale, "root {root} leaves {}", rf.shifted(i));
            checked += 1;
        }
    }
    assert!(checked > 200);
}

#[test]
fn affine_pieces_match_two_penalty_fit() {
    let mut r = rng(44);
    for _ in 0..50 {
        let n = r.random_range(1..=15);
        let k = r.random_range(1..=n);
        let s = random_params(&mut r, n, k, 0.0);
        let d = random_policy(&mut r, k);
        let prof = penalty_roots(&s, &d).unwrap();
        let at = |p: f64| {
            let sp = s.with_penalty(p);
            let eta = average_profit(&sp, &d).unwrap();
            realization_factors_recurrence(&sp, &d, eta).unwrap()
        };
        let (r0, r1) = (at(0.0), at(1.0));
        for i in 1..=k {
            let c = r0.shifted(i);
            let a = c - r1.shifted(i);
            assert!(rel_close(prof.const_terms[i - 1], c, 1e-9));
            assert!((prof.coefficients[i - 1] - a).abs() <= 1e-9 * c.abs().max(1.0));
        }
    }
}

#[test]
fn all_zeros_roots_are_finite_and_p_high_is_their_max() {
    let s = example1(0.0);
    let prof = penalty_roots(&s, &Policy::zeros(15)).unwrap();
    assert!(prof.degenerate.is_empty());
    let max = prof.roots.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(prof.p_high, max.max(0.0));
    let min = prof.roots.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(prof.p_low, min);
}

#[test]
fn sort_perm_is_stable_ascending_and_ranks_invert_it() {
    let mut r = rng(45);
    for _ in 0..50 {
        let n = r.random_range(1..=20);
        let k = r.random_range(1..=n);
        let s = random_params(&mut r, n, k, 0.0);
        let prof = penalty_roots(&s, &random_policy(&mut r, k)).unwrap();
        let perm = &prof.sort_perm;
        for w in perm.windows(2) {
            let (a, b) = (prof.roots[w[0] - 1], prof.roots[w[1] - 1]);
            assert!(a < b || (a == b && w[0] < w[1]));
        }
        let ranks = prof.ranks();
        for (rank, &pos) in perm.iter().enumerate() {
            assert_eq!(ranks[pos - 1], rank + 1);
        }
        for p in [0.0, 5.0, 20.0] {
            let below = prof.roots.iter().filter(|&&x| x < p).count();
            assert_eq!(prof.count_below(p), below);
        }
    }
}

#[test]
fn sign_labels_follow_the_factor() {
    let mut r = rng(46);
    for _ in 0..80 {
        let n = r.random_range(1..=15);
        let k = r.random_range(1..=n);
        let p = r.random_range(0.0..40.0);
        let s = random_params(&mut r, n, k, p);
        let d = random_policy(&mut r, k);
        let labels = classify_sign(&s, &d, p).unwrap();
        let eta = average_profit(&s, &d).unwrap();
        let rf = realization_factors_recurrence(&s, &d, eta).unwrap();
        for i in 1..=k {
            let x = rf.shifted(i);
            match labels[i - 1] {
                Sign::Positive => assert!(x > 0.0),
                Sign::Negative => assert!(x < 0.0),
                Sign::Zero => assert!(x.abs() < 1e-6),
            }
        }
    }
    // at its own root the unit factor is labelled zero
    assert_eq!(classify_sign(&unit(1.4), &pol(&[0]), 1.4).unwrap(), vec![Sign::Zero]);
}

#[test]
fn class_property_counterexample_is_reported() {
    let s = class_counterexample();
    let d = Policy::zeros(4);
    let c = pol(&[0, 0, 1, 1]);
    let rep = class_property_check(&s, &d, &c, s.penalty_p).unwrap();
    assert_eq!(rep.region, Region::HighPenalty);
    assert!(!rep.holds);
    let bad = rep.positions.iter().find(|e| !e.holds).unwrap();
    assert_eq!(bad.position, 3);
    assert!((bad.value - 0.87).abs() < 0.01);
    assert!(rep.ratio_identity_holds);
    // direct comparison: under c, withdrawing class-2 service at position 3
    // loses profit, so serving there pays even above the critical penalty
    let gain = average_profit(&s, &c).unwrap() - average_profit(&s, &c.flipped(3)).unwrap();
    assert!((gain - 0.635).abs() < 1e-3, "gain {gain}");
}

#[test]
fn ratio_identity_holds_along_every_chain() {
    let mut r = rng(47);
    for _ in 0..100 {
        let n = r.random_range(1..=12);
        let k = r.random_range(1..=n.min(6));
        let p = r.random_range(0.0..40.0);
        let s = random_params(&mut r, n, k, p);
        let d = random_policy(&mut r, k);
        let c = random_policy(&mut r, k);
        let rep = class_property_check(&s, &d, &c, p).unwrap();
        assert!(rep.ratio_identity_holds, "{:?}", rep.ratio_steps);
        if rep.region == Region::Middle {
            assert!(rep.holds);
        }
    }
}

#[test]
fn single_flips_respect_the_region_sign() {
    // For one flip the claim reduces to the single-flip formula and is true.
    let mut r = rng(48);
    for _ in 0..100 {
        let n = r.random_range(1..=12);
        let k = r.random_range(1..=n.min(6));
        let s = random_params(&mut r, n, k, 0.0);
        let zeros = Policy::zeros(k);
        let prof = penalty_roots(&s, &zeros).unwrap();
        let p = prof.p_high + 1.0;
        for i in 1..=k {
            let rep = class_property_check(&s, &zeros, &zeros.flipped(i), p).unwrap();
            assert_eq!(rep.region, Region::HighPenalty);
            assert!(rep.holds);
        }
    }
}
