use noise_reversal::pipeline::{
    allocate_budget, denoise_1d, denoise_1d_blocked, denoise_2d, BlockedOptions, SweepOptions,
};
use noise_reversal::smoothness::{build_cost_form, residual_cost_counts};
use noise_reversal::solver::{brute_force, DEFAULT_BRUTE_FORCE_CAP};
use noise_reversal::{BoundaryPolicy, BudgetPolicy, Image2D, MeasuredFrame, Shape, SolverConfig};
use proptest::prelude::*;

fn quick(seed: u64) -> SolverConfig {
    SolverConfig {
        restarts: 6,
        max_iterations: 400,
        seed,
        ..SolverConfig::default()
    }
}

#[test]
fn constant_frame_takes_uniform_noise() {
    let frame = MeasuredFrame::new(vec![9; 5]).unwrap();
    let r = denoise_1d(&frame, 5, BoundaryPolicy::Periodic, &quick(0)).unwrap();
    assert_eq!(r.noise_field, vec![1; 5]);
    assert_eq!(r.final_cost, 0.0);
    let poly = build_cost_form(&frame, BoundaryPolicy::Periodic, 5).unwrap();
    assert_eq!(brute_force(&poly, DEFAULT_BRUTE_FORCE_CAP).unwrap().energy, 0.0);

    let frame = MeasuredFrame::new(vec![40; 12]).unwrap();
    let r = denoise_1d(&frame, 36, BoundaryPolicy::Periodic, &SolverConfig::default()).unwrap();
    assert_eq!(r.noise_field, vec![3; 12]);
    assert_eq!(r.final_cost, 0.0);
}

#[test]
fn zero_budget_returns_the_frame() {
    let frame = MeasuredFrame::new(vec![5, 1, 8, 2, 2, 7]).unwrap();
    let r = denoise_1d(&frame, 0, BoundaryPolicy::Interior, &quick(0)).unwrap();
    assert_eq!(r.noise_field, vec![0; 6]);
    assert_eq!(r.recovered, vec![5, 1, 8, 2, 2, 7]);
    assert_eq!(
        r.final_cost,
        residual_cost_counts(&frame, BoundaryPolicy::Interior, &[0; 6]).unwrap()
    );
}

#[test]
fn one_large_block_matches_the_plain_solve() {
    let frame = MeasuredFrame::new(vec![3, 14, 8, 22, 5, 9, 17, 2, 11, 6]).unwrap();
    let plain = denoise_1d(&frame, 20, BoundaryPolicy::Interior, &quick(4)).unwrap();
    for block in [10, 25] {
        let blocked =
            denoise_1d_blocked(&frame, 20, &BlockedOptions::new(block, 1), &quick(4)).unwrap();
        assert_eq!(blocked.noise_field, plain.noise_field);
        assert_eq!(blocked.final_cost, plain.final_cost);
    }
}

#[test]
fn empty_block_gets_no_budget() {
    let mut counts = vec![30u64; 6];
    counts.extend(vec![0u64; 6]);
    let frame = MeasuredFrame::new(counts).unwrap();
    let r = denoise_1d_blocked(&frame, 12, &BlockedOptions::new(6, 1), &quick(0)).unwrap();
    assert_eq!(r.diagnostics[1].budget, 0);
    assert_eq!(&r.noise_field[6..], &[0; 6]);
    assert_eq!(r.noise_total(), 12);
}

#[test]
fn single_column_image_matches_the_1d_solve() {
    let counts = vec![4, 19, 7, 12, 3, 8, 15];
    let image = Image2D::new(7, 1, counts.clone()).unwrap();
    let opts = SweepOptions {
        boundary: BoundaryPolicy::Interior,
        ..SweepOptions::default()
    };
    let two = denoise_2d(&image, 9, &opts, &quick(2)).unwrap();
    let frame = MeasuredFrame::new(counts).unwrap();
    let one = denoise_1d(&frame, 9, BoundaryPolicy::Interior, &quick(2)).unwrap();
    assert_eq!(two.noise_field, one.noise_field);
    assert_eq!(two.final_cost, one.final_cost);
    assert_eq!(two.shape, Shape::Grid { rows: 7, cols: 1 });
}

#[test]
fn zero_budget_image_is_unchanged() {
    let counts: Vec<u64> = (0..30).map(|i| (i * 5 % 11) as u64).collect();
    let image = Image2D::new(6, 5, counts.clone()).unwrap();
    let r = denoise_2d(&image, 0, &SweepOptions::default(), &quick(0)).unwrap();
    assert!(r.noise_field.iter().all(|&n| n == 0));
    assert_eq!(r.recovered, counts.iter().map(|&c| c as i64).collect::<Vec<_>>());
}

#[test]
fn sweeps_do_not_raise_the_objective() {
    let rows = 12;
    let cols = 8;
    let counts: Vec<u64> = (0..rows * cols)
        .map(|k| {
            let (r, c) = (k / cols, k % cols);
            let s = 30.0 * (1.0 + (0.5 * r as f64).sin() * (0.4 * c as f64).cos());
            s as u64 + ((k * 37) % 7) as u64
        })
        .collect();
    let image = Image2D::new(rows, cols, counts).unwrap();
    let opts = SweepOptions {
        sweeps: 4,
        ..SweepOptions::default()
    };
    let r = denoise_2d(&image, 250, &opts, &quick(9)).unwrap();
    assert_eq!(r.noise_total(), 250);
    assert_eq!(r.objective_history.len(), 4);
    for w in r.objective_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{:?}", r.objective_history);
    }
}

#[test]
fn pipelines_are_deterministic() {
    let frame = MeasuredFrame::new((0..30).map(|i| 10 + (i * 7 % 9) as u64).collect()).unwrap();
    let opts = BlockedOptions::new(10, 2);
    let a = denoise_1d_blocked(&frame, 40, &opts, &quick(3)).unwrap();
    let b = denoise_1d_blocked(&frame, 40, &opts, &quick(3)).unwrap();
    assert_eq!(a.noise_field, b.noise_field);
    assert_eq!(a.objective_history, b.objective_history);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn noise_is_conserved_and_subtracted(
        counts in prop::collection::vec(0u64..60, 12..30),
        total in 0u64..120,
        block in 5usize..12,
    ) {
        let frame = MeasuredFrame::new(counts.clone()).unwrap();
        let plain = denoise_1d(&frame, total, BoundaryPolicy::Interior, &quick(0)).unwrap();
        let blocked = denoise_1d_blocked(&frame, total, &BlockedOptions::new(block, 2), &quick(0)).unwrap();
        for r in [plain, blocked] {
            prop_assert_eq!(r.noise_total(), total);
            for ((&m, &n), &y) in counts.iter().zip(&r.noise_field).zip(&r.recovered) {
                prop_assert_eq!(m as i64 - n as i64, y);
            }
        }
    }

    #[test]
    fn allocations_sum_exactly(
        totals in prop::collection::vec(0u64..1000, 1..20),
        n in 0u64..10_000,
    ) {
        for policy in [BudgetPolicy::Uniform, BudgetPolicy::Proportional] {
            let a = allocate_budget(&totals, n, policy);
            prop_assert_eq!(a.len(), totals.len());
            prop_assert_eq!(a.iter().sum::<u64>(), n);
        }
    }
}
