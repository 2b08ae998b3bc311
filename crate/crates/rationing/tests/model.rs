mod common;

use std::collections::HashSet;

use common::*;
use proptest::prelude::*;
use rationing::model::*;
use rationing::Error;

#[test]
fn example1_params_validate() {
    let v = validate_params(example1(10.0)).unwrap();
    assert!(v.warnings.is_empty());
}

#[test]
fn zero_lambda_rejected() {
    let mut p = example1(10.0);
    p.lambda = 0.0;
    assert!(matches!(validate_params(p), Err(Error::NonPositiveRate { name: "lambda", .. })));
}

#[test]
fn k_equal_n_accepted() {
    let mut p = unit(0.0);
    p.threshold_k = 2;
    assert!(validate_params(p).is_ok());
    p.threshold_k = 3;
    assert!(matches!(validate_params(p), Err(Error::BadThreshold { k: 3, n: 2 })));
    p.threshold_k = 0;
    assert!(matches!(validate_params(p), Err(Error::BadThreshold { .. })));
}

#[test]
fn priority_violation_is_only_a_warning() {
    let mut p = example1(1.0);
    p.c_lost1 = 1.0;
    let v = validate_params(p).unwrap();
    assert!(matches!(v.warnings[..], [Error::PriorityViolation { .. }]));
}

#[test]
fn example1_rewards_at_the_boundaries() {
    let s = example1(10.0);
    let ones = Policy::ones(15);
    let rw = reward_structure(&s, &ones).unwrap();
    assert_eq!(rw.f_values[0], -33.0);
    assert_eq!(rw.f_values[1], 54.0);
    assert_eq!(rw.f_values[100], -13.0);
}

#[test]
fn unit_rewards() {
    let rw = reward_structure(&unit(3.0), &pol(&[0])).unwrap();
    assert_eq!(rw.f_values, vec![-10.0, 8.0, 27.0]);
}

#[test]
fn rewards_match_indicator_oracle() {
    let mut r = rng(11);
    for _ in 0..200 {
        let n = r_usize(&mut r, 1, 30);
        let k = r_usize(&mut r, 1, n);
        let p = r_f(&mut r, 0.0, 50.0);
        let s = random_params(&mut r, n, k, p);
        let d = random_policy(&mut r, k);
        let rw = reward_structure(&s, &d).unwrap();
        for i in 0..=n {
            assert!((rw.f_values[i] - reward_oracle(&s, &d, i)).abs() < 1e-12 * (1.0 + rw.f_values[i].abs()));
        }
    }
}

#[test]
fn reward_is_affine_in_penalty() {
    let mut r = rng(12);
    for _ in 0..100 {
        let n = r_usize(&mut r, 1, 20);
        let k = r_usize(&mut r, 1, n);
        let s = random_params(&mut r, n, k, 0.0);
        let d = random_policy(&mut r, k);
        for p in [0.0, 1.0, 10.0, 100.0] {
            let rw = reward_structure(&s.with_penalty(p), &d).unwrap();
            for i in 0..=n {
                assert_eq!(rw.f_values[i], rw.b_coeffs[i] - p * rw.a_coeffs[i]);
                if i == 0 || i > k {
                    assert_eq!(rw.a_coeffs[i], 0.0);
                }
            }
        }
        let z = reward_structure(&s, &Policy::zeros(k)).unwrap();
        assert!(z.a_coeffs.iter().all(|&a| a == 0.0));
    }
}

#[test]
fn length_mismatch_rejected() {
    assert!(matches!(
        reward_structure(&unit(0.0), &pol(&[0, 1])),
        Err(Error::LengthMismatch { expected: 1, found: 2 })
    ));
    assert!(matches!(difference_set(&pol(&[0]), &pol(&[0, 1])), Err(Error::LengthMismatch { .. })));
}

#[test]
fn difference_set_examples() {
    let d = pol(&[0, 0, 0]);
    assert!(difference_set(&d, &d).unwrap().is_empty());
    let s = difference_set(&d, &pol(&[0, 1, 1])).unwrap();
    assert_eq!(s.positions, vec![2, 3]);
    assert_eq!(s.complement(3), vec![1]);
}

#[test]
fn adjacent_chain_examples() {
    let d = pol(&[0, 0]);
    assert!(adjacent_chain(&d, &d, &[]).unwrap().is_empty());
    let chain = adjacent_chain(&d, &pol(&[1, 1]), &[1, 2]).unwrap();
    assert_eq!(chain, vec![pol(&[1, 0]), pol(&[1, 1])]);
    assert!(matches!(adjacent_chain(&d, &pol(&[1, 1]), &[1]), Err(Error::InvalidOrder)));
    assert!(matches!(adjacent_chain(&d, &pol(&[1, 1]), &[1, 1]), Err(Error::InvalidOrder)));
    assert!(matches!(adjacent_chain(&d, &pol(&[1, 0]), &[2]), Err(Error::InvalidOrder)));
}

#[test]
fn chains_reconstruct_every_pair_up_to_k6() {
    for k in 1..=6 {
        let all: Vec<_> = enumerate_policies(k).unwrap().collect();
        for d in &all {
            for c in &all {
                let s = difference_set(d, c).unwrap();
                let mut order = s.positions.clone();
                order.reverse();
                let chain = adjacent_chain(d, c, &order).unwrap();
                assert_eq!(chain.len(), s.len());
                let mut prev = d.clone();
                for (step, cur) in chain.iter().enumerate() {
                    assert_eq!(difference_set(&prev, cur).unwrap().positions, vec![order[step]]);
                    let mut so_far = order[..=step].to_vec();
                    so_far.sort();
                    assert_eq!(difference_set(d, cur).unwrap().positions, so_far);
                    prev = cur.clone();
                }
                assert_eq!(&prev, c);
            }
        }
    }
}

#[test]
fn enumeration_counts() {
    let k1: Vec<_> = enumerate_policies(1).unwrap().collect();
    assert_eq!(k1, vec![pol(&[0]), pol(&[1])]);
    assert_eq!(enumerate_policies(3).unwrap().count(), 8);
    let set: HashSet<_> = enumerate_policies(10).unwrap().collect();
    assert_eq!(set.len(), 1024);
    assert!(matches!(enumerate_policies(25), Err(Error::CapExceeded { k: 25, cap: 24 })));
}

#[test]
fn params_json_round_trip() {
    let s = example1(10.0);
    let txt = serde_json::to_string(&s).unwrap();
    for key in [
        "lambda",
        "mu1",
        "mu2",
        "capacity_n",
        "threshold_k",
        "c_hold",
        "c_lost1",
        "c_lost2",
        "c_buy",
        "c_opp",
        "price_r",
        "penalty_p",
    ] {
        assert!(txt.contains(&format!("\"{key}\"")), "missing {key}");
    }
    let back: SystemParams = serde_json::from_str(&txt).unwrap();
    assert_eq!(back, s);
}

fn r_usize(r: &mut rand_chacha::ChaCha8Rng, lo: usize, hi: usize) -> usize {
    use rand::Rng;
    r.random_range(lo..=hi)
}

fn r_f(r: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    use rand::Rng;
    r.random_range(lo..hi)
}

proptest! {
    #[test]
    fn difference_set_size_is_hamming_distance(bits in proptest::collection::vec((0u8..2, 0u8..2), 1..20)) {
        let d = pol(&bits.iter().map(|b| b.0).collect::<Vec<_>>());
        let c = pol(&bits.iter().map(|b| b.1).collect::<Vec<_>>());
        let hamming = bits.iter().filter(|(a, b)| a != b).count();
        let s = difference_set(&d, &c).unwrap();
        prop_assert_eq!(s.len(), hamming);
        prop_assert_eq!(s.len() + s.complement(d.len()).len(), d.len());
    }

    #[test]
    fn chain_steps_are_single_flips(bits in proptest::collection::vec((0u8..2, 0u8..2), 1..16), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let d = pol(&bits.iter().map(|b| b.0).collect::<Vec<_>>());
        let c = pol(&bits.iter().map(|b| b.1).collect::<Vec<_>>());
        let mut order = difference_set(&d, &c).unwrap().positions;
        order.shuffle(&mut rng(seed));
        let chain = adjacent_chain(&d, &c, &order).unwrap();
        let mut prev = d.clone();
        for cur in &chain {
            prop_assert_eq!(difference_set(&prev, cur).unwrap().len(), 1);
            prev = cur.clone();
        }
        prop_assert_eq!(prev, c);
    }
}
