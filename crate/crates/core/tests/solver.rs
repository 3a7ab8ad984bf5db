use noise_reversal::smoothness::{build_cost_form, BoundaryPolicy, MeasuredFrame};
use noise_reversal::solver::{
    brute_force, composition_count, integer_local_search, is_locally_optimal, largest_remainder,
    mean_field_solve, round_to_integers, DEFAULT_BRUTE_FORCE_CAP,
};
use noise_reversal::{CubicTerm, Error, PolynomialBuilder, SolverConfig, SumConstrainedPolynomial};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quick(seed: u64) -> SolverConfig {
    SolverConfig {
        restarts: 8,
        max_iterations: 500,
        seed,
        ..SolverConfig::default()
    }
}

fn random_poly(rng: &mut ChaCha8Rng, p: usize, n: u64) -> SumConstrainedPolynomial {
    let mut b = PolynomialBuilder::new(p, n);
    b.add_constant(rng.gen_range(-5.0..5.0));
    for i in 0..p {
        b.add_linear(i, rng.gen_range(-10.0..10.0)).unwrap();
        for j in i..p {
            if rng.gen_bool(0.6) {
                b.add_quadratic(i, j, rng.gen_range(-3.0..3.0)).unwrap();
            }
        }
    }
    b.build()
}

/// Every weak composition of `n` into five parts, by explicit nested loops.
fn nested_loop_minimum(poly: &SumConstrainedPolynomial, n: u64) -> (f64, usize) {
    let mut best = f64::INFINITY;
    let mut seen = 0;
    for a in 0..=n {
        for b in 0..=n - a {
            for c in 0..=n - a - b {
                for d in 0..=n - a - b - c {
                    let x = [a, b, c, d, n - a - b - c - d];
                    best = best.min(poly.evaluate_counts(&x).unwrap());
                    seen += 1;
                }
            }
        }
    }
    (best, seen)
}

#[test]
fn brute_force_agrees_with_nested_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..10 {
        let poly = random_poly(&mut rng, 5, 6);
        let (best, seen) = nested_loop_minimum(&poly, 6);
        assert_eq!(seen, 210);
        let bf = brute_force(&poly, DEFAULT_BRUTE_FORCE_CAP).unwrap();
        assert_eq!(bf.enumerated, 210);
        assert_eq!(bf.energy, best);
        assert_eq!(poly.evaluate_counts(&bf.best).unwrap(), best);
    }
}

#[test]
fn brute_force_on_a_centred_spike() {
    let frame = MeasuredFrame::new(vec![0, 2, 0]).unwrap();
    let poly = build_cost_form(&frame, BoundaryPolicy::Interior, 2).unwrap();
    let bf = brute_force(&poly, DEFAULT_BRUTE_FORCE_CAP).unwrap();
    assert_eq!(bf.best, vec![0, 2, 0]);
    assert_eq!(bf.energy, 0.0);
}

#[test]
fn brute_force_refuses_oversized_spaces() {
    let poly = SumConstrainedPolynomial::zero(30, 30);
    assert!(composition_count(30, 30) > DEFAULT_BRUTE_FORCE_CAP);
    assert!(matches!(
        brute_force(&poly, DEFAULT_BRUTE_FORCE_CAP),
        Err(Error::TooManyCompositions { .. })
    ));
}

#[test]
fn composition_counts() {
    assert_eq!(composition_count(6, 5), 210);
    assert_eq!(composition_count(0, 4), 1);
    assert_eq!(composition_count(3, 1), 1);
    assert_eq!(composition_count(10, 8), 19_448);
}

#[test]
fn solver_reaches_small_optima() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut hits = 0;
    for k in 0..20 {
        let p = rng.gen_range(4..=7);
        let counts: Vec<u64> = (0..p).map(|_| rng.gen_range(0..=20)).collect();
        let n = rng.gen_range(4..=10);
        let frame = MeasuredFrame::new(counts).unwrap();
        let poly = build_cost_form(&frame, BoundaryPolicy::Periodic, n).unwrap();
        let bf = brute_force(&poly, DEFAULT_BRUTE_FORCE_CAP).unwrap();
        let r = mean_field_solve(&poly, &quick(k)).unwrap();
        assert!(r.best_energy >= bf.energy - 1e-9);
        if r.best_energy <= bf.energy + 1e-9 {
            hits += 1;
        }
    }
    assert!(hits >= 18, "hits {hits}");
}

#[test]
fn solves_are_deterministic() {
    let frame = MeasuredFrame::new(vec![4, 9, 14, 8, 3, 1, 6, 12, 7, 2]).unwrap();
    let poly = build_cost_form(&frame, BoundaryPolicy::Interior, 15).unwrap();
    let a = mean_field_solve(&poly, &quick(11)).unwrap();
    let b = mean_field_solve(&poly, &quick(11)).unwrap();
    assert_eq!(a.best, b.best);
    assert_eq!(a.best_energy, b.best_energy);
    assert_eq!(a.per_restart, b.per_restart);
    assert_eq!(a.energy_trace, b.energy_trace);
    assert_eq!(a.best.iter().sum::<u64>(), 15);
}

#[test]
fn more_restarts_never_hurt() {
    let frame = MeasuredFrame::new(vec![20, 3, 17, 0, 9, 30, 2, 11, 5, 8, 1, 14]).unwrap();
    let poly = build_cost_form(&frame, BoundaryPolicy::Interior, 25).unwrap();
    let mut previous = f64::INFINITY;
    for restarts in [1, 2, 4, 8, 16] {
        let cfg = SolverConfig {
            restarts,
            ..quick(3)
        };
        let r = mean_field_solve(&poly, &cfg).unwrap();
        assert!(r.best_energy <= previous);
        previous = r.best_energy;
    }
}

#[test]
fn polished_result_is_one_move_optimal() {
    let frame = MeasuredFrame::new(vec![6, 1, 9, 4, 4, 0, 7, 3]).unwrap();
    let poly = build_cost_form(&frame, BoundaryPolicy::Periodic, 9).unwrap();
    let cfg = SolverConfig {
        local_search_moves: Some(10_000),
        ..quick(0)
    };
    let r = mean_field_solve(&poly, &cfg).unwrap();
    assert!(is_locally_optimal(&poly, &r.best, 1e-9).unwrap());
}

#[test]
fn cubic_terms_are_minimized_too() {
    let mut b = PolynomialBuilder::new(3, 4);
    b.add_linear(0, 1.0).unwrap();
    b.add_cubic(1, 1, 2, -1.0).unwrap();
    let poly = b.build();
    assert_eq!(poly.cubic, vec![CubicTerm(1, 1, 2, -1.0)]);
    let bf = brute_force(&poly, DEFAULT_BRUTE_FORCE_CAP).unwrap();
    let r = mean_field_solve(&poly, &quick(2)).unwrap();
    assert_eq!(r.best_energy, bf.energy);
}

fn shares() -> impl Strategy<Value = (Vec<f64>, u64)> {
    (prop::collection::vec(0.0f64..1.0, 1..30), 0u64..1000).prop_map(|(w, n)| {
        let s: f64 = w.iter().sum();
        let v = if s > 0.0 {
            w.iter().map(|x| x / s * n as f64).collect()
        } else {
            let mut v = vec![0.0; w.len()];
            v[0] = n as f64;
            v
        };
        (v, n)
    })
}

proptest! {
    #[test]
    fn rounding_hits_the_total_and_stays_close((v, n) in shares()) {
        let x = round_to_integers(&v, n).unwrap();
        prop_assert_eq!(x.iter().sum::<u64>(), n);
        for (xi, vi) in x.iter().zip(&v) {
            prop_assert!((*xi as f64 - vi).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn rounding_keeps_integer_points(x in prop::collection::vec(0u64..50, 1..20)) {
        let n: u64 = x.iter().sum();
        let v: Vec<f64> = x.iter().map(|&k| k as f64).collect();
        prop_assert_eq!(largest_remainder(&v, n), x);
    }

    #[test]
    fn local_search_never_raises_energy(seed in any::<u64>(), p in 3usize..9, n in 0u64..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poly = random_poly(&mut rng, p, n);
        let mut start = vec![0u64; p];
        for _ in 0..n {
            start[rng.gen_range(0..p)] += 1;
        }
        let e0 = poly.evaluate_counts(&start).unwrap();
        let out = integer_local_search(&poly, &start, 10_000).unwrap();
        prop_assert_eq!(out.iter().sum::<u64>(), n);
        let e1 = poly.evaluate_counts(&out).unwrap();
        prop_assert!(e1 <= e0 + 1e-9 * (1.0 + e0.abs()));
        prop_assert!(is_locally_optimal(&poly, &out, 1e-9).unwrap());
    }
}
