//! Structural identities of the excursion quantities, checked against an
//! independent Gaussian-elimination oracle and against hand-derived values
//! for the two worked examples.

mod common;

use chainglue::chain::stationary_direct;
use chainglue::excursion::{Mark, MarkedChain};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn random_marked(rng: &mut ChaCha12Rng) -> MarkedChain {
    let n = rng.random_range(2..=10);
    let model = random_irreducible(rng, n, "s");
    let (s1, s2) = random_pair(rng, n);
    MarkedChain::new(model, s1, s2).unwrap()
}

/// Both first-passage systems solved independently must be complementary.
#[test]
fn complement_identity_from_both_systems() {
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    let mut cases: Vec<MarkedChain> = vec![
        MarkedChain::new(ex1_chain_a(), 1, 2).unwrap(),
        MarkedChain::new(ex1_chain_b(), 0, 1).unwrap(),
        MarkedChain::new(ex2_chain_a(), 3, 4).unwrap(),
        MarkedChain::new(ex2_chain_b(), 0, 1).unwrap(),
    ];
    for _ in 0..50 {
        cases.push(random_marked(&mut rng));
    }
    for mc in &cases {
        let to_one = mc.hitting_probabilities(Mark::One).unwrap();
        let to_two = mc.hitting_probabilities(Mark::Two).unwrap();
        for (i, (p1, p2)) in to_one.iter().zip(&to_two).enumerate() {
            assert!(
                (p1 + p2 - 1.0).abs() <= 1e-10,
                "state {i}: {p1} + {p2} != 1"
            );
        }
    }
}

/// The production passage probabilities agree with the oracle solve of the
/// zeroed-column system.
#[test]
fn passage_probabilities_match_oracle_solve() {
    let mc = MarkedChain::new(ex1_chain_b(), 0, 1).unwrap();
    let q0 = mc.hitting_matrix().unwrap();
    let n = 4;
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| q0[(i, j)]).collect())
        .collect();
    let q = ex1_chain_b();
    let rhs: Vec<f64> = (0..n)
        .map(|i| if i == 0 { 0.0 } else { -q.rates().entry(i, 0) })
        .collect();
    let oracle = gauss_solve(&a, &rhs).unwrap();
    let p = mc.excursion_probabilities().unwrap();
    assert!(max_abs_diff(&oracle, p.toward(Mark::One)) <= 1e-12);

    // frozen values derived by hand elimination of the same system
    let expect = [0.0, 1.0, 0.0, 0.0];
    assert!(max_abs_diff(&expect, p.toward(Mark::One)) <= 1e-14);
}

/// Conditional occupation expectations agree with per-column oracle solves.
#[test]
fn occupation_expectations_match_oracle_solves() {
    let mut rng = ChaCha12Rng::seed_from_u64(202);
    let mut cases: Vec<MarkedChain> = vec![
        MarkedChain::new(ex1_chain_a(), 1, 2).unwrap(),
        MarkedChain::new(ex1_chain_b(), 0, 1).unwrap(),
        MarkedChain::new(ex2_chain_a(), 3, 4).unwrap(),
    ];
    for _ in 0..25 {
        cases.push(random_marked(&mut rng));
    }
    for mc in &cases {
        let n = mc.model().n();
        let q0 = mc.hitting_matrix().unwrap();
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| q0[(i, j)]).collect())
            .collect();
        let p = mc.excursion_probabilities().unwrap();
        let occ = mc.occupation_expectations(&p).unwrap();
        for target in Mark::BOTH {
            for (pos, &j) in mc.interior().iter().enumerate() {
                let mut rhs = vec![0.0; n];
                rhs[j] = -p.toward(target)[j];
                let u = gauss_solve(&a, &rhs).unwrap();
                let scale = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                for from in Mark::BOTH {
                    let mass = u[mc.mark_index(from)];
                    let prob = p.between(from, target);
                    let expect = if prob <= 0.0 || mass.abs() <= 1e-12 * scale {
                        0.0
                    } else {
                        mass / prob
                    };
                    let got = occ.get(from, target, pos);
                    assert!(
                        (got - expect).abs() <= 1e-9 * expect.abs().max(1.0),
                        "occ({from:?},{target:?},{j}): {got} vs oracle {expect}"
                    );
                }
            }
        }
    }
}

/// Interior stationary mass of a single chain is reconstructed exactly by its
/// own marked-state masses and weight vectors.
#[test]
fn interior_mass_reconstruction_identity() {
    let mut rng = ChaCha12Rng::seed_from_u64(303);
    let mut cases: Vec<MarkedChain> = vec![
        MarkedChain::new(ex1_chain_a(), 1, 2).unwrap(),
        MarkedChain::new(ex1_chain_b(), 0, 1).unwrap(),
        MarkedChain::new(ex2_chain_a(), 3, 4).unwrap(),
    ];
    for _ in 0..50 {
        cases.push(random_marked(&mut rng));
    }
    for mc in &cases {
        let prof = mc.profile().unwrap();
        let pi = stationary_direct(mc.model()).unwrap();
        let p1 = pi[mc.mark_index(Mark::One)];
        let p2 = pi[mc.mark_index(Mark::Two)];
        for (pos, &i) in mc.interior().iter().enumerate() {
            let rebuilt = p1 * prof.weights.from_one[pos] + p2 * prof.weights.from_two[pos];
            assert!(
                (rebuilt - pi[i]).abs() <= 1e-9,
                "interior {i}: rebuilt {rebuilt} vs direct {}",
                pi[i]
            );
        }
    }
}

/// The marked-state mass ratio equals the inverse ratio of crossing
/// intensities.
#[test]
fn marked_ratio_identity() {
    let mut rng = ChaCha12Rng::seed_from_u64(404);
    let mut cases: Vec<MarkedChain> = vec![
        MarkedChain::new(ex1_chain_a(), 1, 2).unwrap(),
        MarkedChain::new(ex2_chain_a(), 3, 4).unwrap(),
        MarkedChain::new(ex2_chain_b(), 0, 1).unwrap(),
    ];
    for _ in 0..50 {
        cases.push(random_marked(&mut rng));
    }
    for mc in &cases {
        let prof = mc.profile().unwrap();
        let pi = stationary_direct(mc.model()).unwrap();
        let p1 = pi[mc.mark_index(Mark::One)];
        let p2 = pi[mc.mark_index(Mark::Two)];
        let lhs = p1 * prof.intensities.crossing(Mark::One);
        let rhs = p2 * prof.intensities.crossing(Mark::Two);
        assert!(
            (lhs - rhs).abs() <= 1e-9 * (lhs + rhs),
            "flow balance violated: {lhs} vs {rhs}"
        );
    }
}

/// Frozen weight values of the 5-state example chain, derived by hand from
/// the passage systems (and cross-checked against the stationary-vector route
/// in the glue suite): from-one = (1/2, 2, 1/6), from-two = (0, 0, 1/3).
#[test]
fn five_state_example_weights() {
    let mc = MarkedChain::new(ex2_chain_a(), 3, 4).unwrap();
    let prof = mc.profile().unwrap();
    assert_eq!(mc.interior(), [0, 1, 2]);
    let expect_one = [0.5, 2.0, 1.0 / 6.0];
    let expect_two = [0.0, 0.0, 1.0 / 3.0];
    assert!(max_abs_diff(&prof.weights.from_one, &expect_one) <= 1e-12);
    assert!(max_abs_diff(&prof.weights.from_two, &expect_two) <= 1e-12);
    // positivity pattern: from_two vanishes exactly on the states unreachable
    // on mark-2 return excursions
    assert!(prof.weights.from_one.iter().all(|&v| v > 1e-12));
    assert!(prof.weights.from_two[2] > 1e-12);
}

/// Intensities of the first example: exit rates split by the excursion
/// probabilities, and the two families sum back to the exit rate.
#[test]
fn intensities_split_the_exit_rate() {
    let mc = MarkedChain::new(ex1_chain_a(), 1, 2).unwrap();
    let p = mc.excursion_probabilities().unwrap();
    let q = mc.intensities(&p);
    assert!((q.returning(Mark::One) + q.crossing(Mark::One) - 2.0).abs() <= 1e-12);
    assert!((q.returning(Mark::Two) + q.crossing(Mark::Two) - 2.0).abs() <= 1e-12);
    // hand elimination gives p(1->1) = 1/3, p(2->1) = 2/3
    assert!((q.returning(Mark::One) - 2.0 / 3.0).abs() <= 1e-12);
    assert!((q.crossing(Mark::Two) - 4.0 / 3.0).abs() <= 1e-12);

    let mcb = MarkedChain::new(ex1_chain_b(), 0, 1).unwrap();
    let pb = mcb.excursion_probabilities().unwrap();
    let qb = mcb.intensities(&pb);
    assert!((qb.returning(Mark::One) + qb.crossing(Mark::One) - 3.0).abs() <= 1e-12);
}
