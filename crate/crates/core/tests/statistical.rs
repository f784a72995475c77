//! Frequency claims and inequality chains checked over many seeds.

use convex_relu::arrangements::{enumerate_patterns, sample_pattern_draws, PatternSet, Provenance};
use convex_relu::bounds::{bound_upper_gated, compute_kappa, lambda_min_expected_gram, sampled_gram_of};
use convex_relu::dataset::{generate_dataset, rng_stream, standard_normal_vector, stream, Dataset, LabelMode, SolverConfig};
use convex_relu::decomposition::{decompose_min_norm, lambda_construction_check};
use convex_relu::linalg::sym_extremes;
use convex_relu::network::{init_network, network_loss, network_to_convex_patterns, train_gd, TrainConfig};
use convex_relu::solvers::cone::{objective_cone, solve_cone_constrained};
use convex_relu::solvers::gated::solve_gated;
use nalgebra::DVector;

fn gaussian(n: usize, d: usize, beta: f64, seed: u64) -> Dataset {
    generate_dataset(n, d, beta, &LabelMode::RandomGaussian, seed).unwrap()
}

fn raw_set(ds: &Dataset, draws: usize, seed: u64) -> PatternSet {
    PatternSet::from_patterns(sample_pattern_draws(ds, draws, seed), Provenance::Sampled { seed, requested: draws })
}

#[test]
fn sharpness_stays_far_below_the_worst_case_bound() {
    let (n, d) = (50, 50);
    let c = n as f64 / d as f64;
    let bound = 1.0 + 80.0 * c * c * (2.0 * n as f64).ln().sqrt();
    let cfg = SolverConfig::default().with_tol(1e-6).with_max_iters(20_000);
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let ds = gaussian(n, d, 0.1, seed);
        let pattern = sample_pattern_draws(&ds, 1, seed).pop().unwrap();
        let z = standard_normal_vector(&mut rng_stream(seed, stream::DIRECTIONS), d).normalize();
        worst = worst.max(decompose_min_norm(&ds, &pattern, &z, &cfg).unwrap().sharpness);
    }
    assert!(worst <= bound, "largest sharpness {worst} above {bound}");
}

#[test]
fn dual_construction_succeeds_with_high_frequency() {
    let d = 100;
    let mut successes = 0;
    for seed in 0..200 {
        let b = standard_normal_vector(&mut rng_stream(seed, stream::DIRECTIONS), d);
        let b = b.normalize() * 2.0 * (d as f64).sqrt() * (1.0 - 1e-12);
        successes += lambda_construction_check(d, &b, 1.0, seed).unwrap().success as usize;
    }
    assert!(successes >= 190, "{successes}/200 constructions within 5c");
}

#[test]
fn expected_gram_condition_number_matches_the_corollary() {
    let d = 300;
    let loose = 20.0 * 4.0;
    let tight = 10.0 * 2f64.sqrt() * 4.0;
    let mut within = 0;
    for seed in 0..50 {
        let kappa = compute_kappa(&gaussian(d, d, 0.1, seed)).unwrap();
        assert!(kappa <= loose);
        within += (kappa <= tight) as usize;
    }
    assert!(within >= 45, "{within}/50 below {tight}");
}

#[test]
fn gated_optimum_respects_its_upper_bound() {
    let mut within = 0;
    for seed in 0..100 {
        let ds = gaussian(8, 4, 0.05, seed);
        let kappa = compute_kappa(&ds).unwrap();
        let draws = (8.0 * kappa * (8.0f64 / 0.1).ln()).ceil() as usize;
        let ps = raw_set(&ds, draws, seed);
        let sol = solve_gated(&ds, &ps, &SolverConfig::default()).unwrap();
        assert!(sol.certified);
        within += (sol.objective <= bound_upper_gated(&ds).unwrap()) as usize;
    }
    assert!(within >= 85, "{within}/100 within the bound");
}

#[test]
fn sampled_gram_keeps_half_the_smallest_eigenvalue() {
    let delta: f64 = 0.1;
    let mut kept = 0;
    for seed in 0..100 {
        let ds = gaussian(8, 4, 0.1, seed);
        let kappa = compute_kappa(&ds).unwrap();
        let draws = (12.0 * kappa * (16.0 / delta).ln()).ceil() as usize;
        let sampled = sampled_gram_of(&ds, &sample_pattern_draws(&ds, draws, seed)).unwrap();
        kept += (sym_extremes(&sampled).0 >= 0.5 * lambda_min_expected_gram(&ds)) as usize;
    }
    assert!(kept as f64 >= (1.0 - delta - 0.05) * 100.0, "{kept}/100");
}

#[test]
fn decomposed_gated_optimum_bounds_the_cone_value() {
    let cfg = SolverConfig::default().with_tol(1e-9).with_max_iters(50_000);
    for seed in 0..10 {
        let ds = gaussian(8, 3, 0.1, seed);
        let ps = raw_set(&ds, 6, seed);
        let sol = solve_gated(&ds, &ps, &SolverConfig::default()).unwrap();
        let mut pairs = Vec::new();
        let mut sharpest = 1.0f64;
        for (w, pattern) in sol.weights.iter().zip(ps.iter()) {
            if w.norm() == 0.0 {
                pairs.push((DVector::zeros(3), DVector::zeros(3)));
                continue;
            }
            let dec = decompose_min_norm(&ds, pattern, w, &cfg).unwrap();
            sharpest = sharpest.max(dec.sharpness);
            pairs.push((dec.u, dec.v));
        }
        let cone_value = objective_cone(&ds, &ps, &pairs).unwrap();
        assert!(cone_value <= sharpest * sol.objective * (1.0 + 1e-9), "seed {seed}");
    }
}

#[test]
fn induced_convex_problem_is_no_worse_than_gradient_descent() {
    let train = TrainConfig { steps: 3000, ..TrainConfig::default() };
    let cone = SolverConfig::cone_default();
    for seed in 0..5 {
        let ds = gaussian(10, 3, 0.1, seed);
        let (trace, net) = train_gd(&ds, &init_network(4, 3, seed).unwrap(), &train).unwrap();
        let induced = network_to_convex_patterns(&net, &ds).unwrap();
        let sol = solve_cone_constrained(&ds, &induced, &cone).unwrap();
        let gd_loss = network_loss(&ds, &net).unwrap();
        assert_eq!(gd_loss, trace.final_loss());
        assert!(sol.objective <= gd_loss + 1e-6 * gd_loss.max(1.0), "seed {seed}: {} > {gd_loss}", sol.objective);
    }
}

#[test]
fn enumeration_value_lower_bounds_sampled_value() {
    for seed in 0..10 {
        let ds = gaussian(8, 2, 0.1, seed);
        let all = enumerate_patterns(&ds).unwrap();
        let some = raw_set(&ds, 5, seed);
        let full = solve_gated(&ds, &all, &SolverConfig::default()).unwrap().objective;
        let part = solve_gated(&ds, &some, &SolverConfig::default()).unwrap().objective;
        assert!(full <= part + 1e-7, "seed {seed}: {full} > {part}");
    }
}
