use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::arrangements::PatternSet;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::solvers::operator::{columns, GatedOperator};

/// Optimum of `1/2 ||sum_i D_i X u_i - y||^2 + beta/2 sum_i ||u_i||^2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct L2Solution {
    pub value: f64,
    pub weights: Vec<DVector<f64>>,
    /// `lambda = y - sum_i D_i X u_i = beta (beta I + S)^-1 y`.
    pub dual: DVector<f64>,
}

/// Closed form through one SPD solve with `S = sum_i D_i X X^T D_i`:
/// `u_i = X^T D_i (beta I + S)^-1 y` and value `beta/2 y^T (beta I + S)^-1 y`.
pub fn solve_gated_l2(ds: &Dataset, ps: &PatternSet) -> Result<L2Solution> {
    let op = GatedOperator::new(ds, ps)?;
    let beta = ds.beta();
    let n = ds.n();
    let mut s = op.gram();
    s += DMatrix::identity(n, n) * beta;
    let z = match s.clone().cholesky() {
        Some(ch) => ch.solve(ds.y()),
        None if beta == 0.0 => {
            return Err(Error::Singular("beta = 0 and sum_i D_i X X^T D_i is singular".into()));
        }
        None => s
            .lu()
            .solve(ds.y())
            .ok_or_else(|| Error::Singular("regularized gram matrix is singular".into()))?,
    };
    let weights = columns(&op.adjoint(&z));
    Ok(L2Solution { value: 0.5 * beta * ds.y().dot(&z), weights, dual: z * beta })
}

/// Direct evaluation of the squared-norm regularized objective.
pub fn objective_l2(ds: &Dataset, ps: &PatternSet, weights: &[DVector<f64>]) -> Result<f64> {
    let op = GatedOperator::new(ds, ps)?;
    if weights.len() != op.blocks() {
        return Err(Error::DimensionMismatch(format!("{} blocks for {} patterns", weights.len(), op.blocks())));
    }
    let w = crate::solvers::operator::from_columns(ds.d(), weights);
    let r = op.apply(&w) - ds.y();
    Ok(0.5 * r.norm_squared() + 0.5 * ds.beta() * w.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangements::sample_patterns;
    use crate::dataset::{generate_dataset, LabelMode};

    #[test]
    fn zero_labels_give_zero_value() {
        let ds = generate_dataset(5, 2, 1.0, &LabelMode::RandomGaussian, 0).unwrap();
        let ds = ds.with_labels(DVector::zeros(5)).unwrap();
        let ps = sample_patterns(&ds, 3, 0).unwrap();
        let sol = solve_gated_l2(&ds, &ps).unwrap();
        assert_eq!(sol.value, 0.0);
    }

    #[test]
    fn value_matches_direct_objective() {
        let ds = generate_dataset(6, 3, 0.7, &LabelMode::RandomGaussian, 4).unwrap();
        let ps = sample_patterns(&ds, 4, 2).unwrap();
        let sol = solve_gated_l2(&ds, &ps).unwrap();
        let direct = objective_l2(&ds, &ps, &sol.weights).unwrap();
        assert!((sol.value - direct).abs() < 1e-12 * direct.max(1.0));
    }

    #[test]
    fn nested_sets_decrease_value() {
        let ds = generate_dataset(10, 3, 0.5, &LabelMode::RandomGaussian, 5).unwrap();
        let all = sample_patterns(&ds, 20, 9).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..=all.len() {
            let v = solve_gated_l2(&ds, &all.prefix(k)).unwrap().value;
            assert!(v <= prev * (1.0 + 1e-12), "k={k}: {v} > {prev}");
            prev = v;
        }
    }

    #[test]
    fn zero_beta_singular_is_an_error() {
        let ds = generate_dataset(6, 2, 0.0, &LabelMode::RandomGaussian, 1).unwrap();
        let ps = sample_patterns(&ds, 1, 0).unwrap();
        assert!(matches!(solve_gated_l2(&ds, &ps), Err(Error::Singular(_))));
    }

    #[test]
    fn first_order_condition_holds() {
        // gradient of the objective vanishes: X^T D_i (A u - y) + beta u_i = 0
        let ds = generate_dataset(7, 2, 0.3, &LabelMode::RandomGaussian, 8).unwrap();
        let ps = sample_patterns(&ds, 3, 1).unwrap();
        let sol = solve_gated_l2(&ds, &ps).unwrap();
        let op = GatedOperator::new(&ds, &ps).unwrap();
        let w = crate::solvers::operator::from_columns(2, &sol.weights);
        let grad = op.adjoint(&(op.apply(&w) - ds.y())) + &w * ds.beta();
        assert!(grad.amax() < 1e-12);
    }
}
