//! Invariants checked on randomly generated small instances.

use convex_relu::arrangements::{
    central_region_count, enumerate_patterns, is_realizable, sample_patterns, PatternSet, Provenance,
};
use convex_relu::bounds::bound_report;
use convex_relu::dataset::{generate_dataset, rng_stream, standard_normal_vector, stream, Dataset, LabelMode, SolverConfig};
use convex_relu::decomposition::decompose_min_norm;
use convex_relu::network::{convex_to_network, init_network, network_loss, train_gd, TrainConfig};
use convex_relu::report::BoundReport;
use convex_relu::solvers::cone::{cone_violation, solve_cone_constrained};
use convex_relu::solvers::gated::solve_gated;
use proptest::prelude::*;

fn gaussian(n: usize, d: usize, beta: f64, seed: u64) -> Dataset {
    generate_dataset(n, d, beta, &LabelMode::RandomGaussian, seed).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn same_bounds(a: &BoundReport, b: &BoundReport) -> bool {
    let pairs = [
        (Some(a.lambda_max_gram), Some(b.lambda_max_gram)),
        (a.kappa, b.kappa),
        (a.g, b.g),
        (a.upper_gated, b.upper_gated),
        (a.lower_full, b.lower_full),
        (a.maxcut_value, b.maxcut_value),
    ];
    // a singular expected Gram matrix has a smallest eigenvalue at round-off level
    let floor = (a.lambda_min_m - b.lambda_min_m).abs() <= 1e-9 * a.lambda_max_gram;
    floor && pairs.iter().all(|p| match p {
        (Some(x), Some(y)) => rel(*x, *y) <= 1e-9,
        (None, None) => true,
        _ => false,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generation_is_deterministic(n in 1usize..30, d in 1usize..8, seed in any::<u64>()) {
        let a = gaussian(n, d, 0.1, seed);
        let b = gaussian(n, d, 0.1, seed);
        prop_assert_eq!(a.to_text(), b.to_text());
        prop_assert_eq!(a.c(), n as f64 / d as f64);
    }

    #[test]
    fn sampled_patterns_are_realizable_and_nested(
        n in 2usize..12, d in 1usize..4, k in 1usize..8, extra in 0usize..6, seed in any::<u64>()
    ) {
        let ds = gaussian(n, d, 0.1, seed);
        let small = sample_patterns(&ds, k, seed).unwrap();
        let large = sample_patterns(&ds, k + extra, seed).unwrap();
        prop_assert!(small.patterns().iter().all(|p| is_realizable(&ds, p)));
        prop_assert_eq!(small.patterns(), &large.patterns()[..small.len()]);
    }

    #[test]
    fn enumeration_covers_samples_and_respects_region_count(
        n in 2usize..10, d in 1usize..4, seed in any::<u64>()
    ) {
        let ds = gaussian(n, d, 0.1, seed);
        let all = enumerate_patterns(&ds).unwrap();
        let some = sample_patterns(&ds, 10, seed).unwrap();
        prop_assert!(some.is_subset_of(&all));
        prop_assert!(all.len() as u128 <= central_region_count(n, d.min(n)));
        prop_assert!(all.patterns().iter().all(|p| is_realizable(&ds, p)));
    }

    #[test]
    fn bounds_ignore_row_order(n in 3usize..9, d in 1usize..4, seed in any::<u64>(), shift in 1usize..8) {
        let ds = gaussian(n, d, 0.2, seed);
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let pd = ds.permute_rows(&perm).unwrap();
        let a = bound_report(&ds, None, &enumerate_patterns(&ds).unwrap(), 0.1).unwrap();
        let b = bound_report(&pd, None, &enumerate_patterns(&pd).unwrap(), 0.1).unwrap();
        prop_assert!(same_bounds(&a, &b));
        prop_assert_eq!(a.sample_thresholds, b.sample_thresholds);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn more_patterns_never_hurt(n in 3usize..8, d in 1usize..3, k in 1usize..4, seed in any::<u64>()) {
        let ds = gaussian(n, d, 0.1, seed);
        let cfg = SolverConfig::default();
        let cone = SolverConfig::cone_default().with_tol(1e-8);
        let a = sample_patterns(&ds, k, seed).unwrap();
        let b = sample_patterns(&ds, k + 3, seed).unwrap();
        let ga = solve_gated(&ds, &a, &cfg).unwrap();
        let gb = solve_gated(&ds, &b, &cfg).unwrap();
        prop_assert!(ga.certified && gb.certified);
        prop_assert!(gb.objective <= ga.objective + 2e-7 * ga.objective.max(1.0));
        let ca = solve_cone_constrained(&ds, &a, &cone).unwrap();
        let cb = solve_cone_constrained(&ds, &b, &cone).unwrap();
        prop_assert!(cb.objective <= ca.objective + 2e-6 * ca.objective.max(1.0));
        prop_assert!(ca.objective >= ga.objective - 1e-6 * ga.objective.max(1.0));
    }

    #[test]
    fn duality_gap_is_small_and_scaling_is_covariant(
        n in 3usize..8, d in 1usize..4, beta in 0.05f64..1.0, seed in any::<u64>()
    ) {
        let ds = gaussian(n, d, beta, seed);
        let ps = sample_patterns(&ds, 4, seed).unwrap();
        let cfg = SolverConfig::default();
        let sol = solve_gated(&ds, &ps, &cfg).unwrap();
        prop_assert!(sol.duality_gap() <= 10.0 * cfg.tol_kkt * sol.objective.max(1.0));

        let scaled = Dataset::new(ds.x().clone(), ds.y() * 2.0, 2.0 * beta).unwrap();
        let twice = solve_gated(&scaled, &ps, &cfg).unwrap();
        prop_assert!(rel(twice.objective, 4.0 * sol.objective) <= 1e-6);
        let gap: f64 = twice.weights.iter().zip(&sol.weights).map(|(a, b)| (a - b * 2.0).norm()).sum();
        let size: f64 = sol.weights.iter().map(|w| w.norm()).sum::<f64>().max(1e-12);
        prop_assert!(gap <= 1e-3 * size, "weights differ by {} of {}", gap, size);
    }

    #[test]
    fn decomposition_is_feasible_and_scale_free(n in 2usize..8, d in 2usize..4, seed in any::<u64>()) {
        let ds = gaussian(n, d, 0.1, seed);
        let pattern = sample_patterns(&ds, 1, seed).unwrap().patterns()[0].clone();
        let w = standard_normal_vector(&mut rng_stream(seed, stream::DIRECTIONS), d);
        let cfg = SolverConfig::default().with_tol(1e-10).with_max_iters(50_000);
        let dec = decompose_min_norm(&ds, &pattern, &w, &cfg).unwrap();
        let g = pattern.cone_matrix(ds.x());
        let scale = g.row_iter().map(|r| r.norm()).fold(0.0, f64::max) * dec.u.norm().max(dec.v.norm());
        prop_assert!((&g * &dec.u).min() >= -1e-8 * scale);
        prop_assert!((&g * &dec.v).min() >= -1e-8 * scale);
        prop_assert!((&dec.u - &dec.v - &w).norm() <= 1e-8 * w.norm());
        prop_assert!(dec.sharpness >= 1.0);
        // sharpness one means w or -w lies in the cone
        let inside = (&g * &w).min() >= 0.0 || (&g * &w).max() <= 0.0;
        prop_assert_eq!(dec.sharpness == 1.0, inside);

        let tripled = decompose_min_norm(&ds, &pattern, &(&w * 3.0), &cfg).unwrap();
        prop_assert!((&tripled.u - &dec.u * 3.0).norm() <= 1e-6 * tripled.norm_sum);
        prop_assert!(rel(tripled.sharpness, dec.sharpness) <= 1e-9);
    }

    #[test]
    fn mapped_network_reproduces_the_cone_objective(n in 3usize..8, d in 1usize..4, seed in any::<u64>()) {
        let ds = gaussian(n, d, 0.1, seed);
        let ps = sample_patterns(&ds, 3, seed).unwrap();
        let sol = solve_cone_constrained(&ds, &ps, &SolverConfig::cone_default()).unwrap();
        prop_assert!(sol.certified);
        let net = convex_to_network(&ds, &sol, &ps).unwrap();
        prop_assert!(rel(network_loss(&ds, &net).unwrap(), sol.objective) <= 1e-8);
        for j in 0..net.m() {
            prop_assert!(rel(net.weights().column(j).norm(), net.alphas()[j].abs()) <= 1e-12);
        }
        prop_assert!(cone_violation(&ds, &ps, &sol.pairs) <= sol.feasibility_tolerance(ds.x()));
    }

    #[test]
    fn backtracking_descent_is_monotone(n in 3usize..15, d in 1usize..4, m in 1usize..6, seed in any::<u64>()) {
        let ds = gaussian(n, d, 0.1, seed);
        let cfg = TrainConfig { steps: 300, ..TrainConfig::default() };
        let (trace, _) = train_gd(&ds, &init_network(m, d, seed).unwrap(), &cfg).unwrap();
        prop_assert!(trace.losses.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}

#[test]
fn explicit_sets_keep_insertion_order() {
    let ds = gaussian(6, 2, 0.1, 3);
    let all = enumerate_patterns(&ds).unwrap();
    let rev = PatternSet::from_patterns(all.patterns().iter().rev().cloned(), Provenance::Explicit);
    assert_eq!(rev.len(), all.len());
    assert_eq!(rev.patterns()[0], all.patterns()[all.len() - 1]);
}
