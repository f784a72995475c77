use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::arrangements::PatternSet;
use crate::dataset::{Dataset, SolverConfig, StepRule};
use crate::error::{Error, Result};
use crate::solvers::exact_fit::exact_fit;
use crate::solvers::operator::{columns, from_columns, GatedOperator};

/// Iterations between optimality checks.
const CHECK_EVERY: usize = 10;

/// Solution of the gated group lasso
/// `min 1/2 ||sum_i D_i X w_i - y||^2 + beta sum_i ||w_i||`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GatedSolution {
    pub weights: Vec<DVector<f64>>,
    pub objective: f64,
    /// Largest first-order violation relative to `beta`, see [`verify_kkt_gated`].
    pub kkt_residual: f64,
    pub iterations: usize,
    /// `lambda = y - sum_i D_i X w_i`.
    pub dual_vector: DVector<f64>,
    /// Dual objective at `lambda` rescaled into the feasible set.
    pub dual_value: f64,
    pub certified: bool,
}

impl GatedSolution {
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        let d = self.weights.first().map_or(0, DVector::len);
        from_columns(d, &self.weights)
    }

    pub fn active_blocks(&self) -> usize {
        self.weights.iter().filter(|w| w.iter().any(|&v| v != 0.0)).count()
    }

    pub fn duality_gap(&self) -> f64 {
        self.objective - self.dual_value
    }
}

/// Per-block optimality violations of a candidate solution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KktReport {
    pub max_violation: f64,
    pub per_block: Vec<f64>,
    /// `max_i ||X^T D_i lambda||`.
    pub dual_norm: f64,
}

fn group_penalty(w: &DMatrix<f64>) -> f64 {
    w.column_iter().map(|c| c.norm()).sum()
}

/// `1/2 ||sum_i D_i X w_i - y||^2 + beta sum_i ||w_i||`.
pub fn objective_gated(ds: &Dataset, ps: &PatternSet, weights: &[DVector<f64>]) -> Result<f64> {
    let op = GatedOperator::new(ds, ps)?;
    check_blocks(&op, weights)?;
    let w = from_columns(ds.d(), weights);
    Ok(0.5 * (op.apply(&w) - ds.y()).norm_squared() + ds.beta() * group_penalty(&w))
}

fn check_blocks(op: &GatedOperator, weights: &[DVector<f64>]) -> Result<()> {
    if weights.len() != op.blocks() || weights.iter().any(|w| w.len() != op.d()) {
        return Err(Error::DimensionMismatch(format!(
            "expected {} blocks of length {}",
            op.blocks(),
            op.d()
        )));
    }
    Ok(())
}

fn kkt_from_gradient(corr: &DMatrix<f64>, w: &DMatrix<f64>, beta: f64) -> KktReport {
    // corr column i is X^T D_i lambda; optimality: corr_i = beta w_i/||w_i|| or ||corr_i|| <= beta
    let scale = if beta > 0.0 { beta } else { 1.0 };
    let mut per_block = Vec::with_capacity(w.ncols());
    let mut dual_norm = 0.0f64;
    for (ci, wi) in corr.column_iter().zip(w.column_iter()) {
        let cn = ci.norm();
        dual_norm = dual_norm.max(cn);
        let wn = wi.norm();
        let v = if wn > 0.0 {
            (ci - wi * (beta / wn)).norm()
        } else {
            (cn - beta).max(0.0)
        };
        per_block.push(v / scale);
    }
    let max_violation = per_block.iter().copied().fold(0.0, f64::max);
    KktReport { max_violation, per_block, dual_norm }
}

/// Recomputes `lambda` from the weights and measures the optimality
/// conditions block by block: active blocks need `X^T D_i lambda` equal to
/// `beta w_i / ||w_i||`, inactive blocks need `||X^T D_i lambda|| <= beta`.
/// Violations are relative to `beta`.
pub fn verify_kkt_gated(ds: &Dataset, ps: &PatternSet, sol: &GatedSolution) -> Result<KktReport> {
    let op = GatedOperator::new(ds, ps)?;
    check_blocks(&op, &sol.weights)?;
    let w = from_columns(ds.d(), &sol.weights);
    let lambda = ds.y() - op.apply(&w);
    Ok(kkt_from_gradient(&op.adjoint(&lambda), &w, ds.beta()))
}

/// `-1/2 ||lambda||^2 + lambda^T y` after scaling `lambda` to satisfy
/// `max_i ||X^T D_i lambda|| <= beta`.
fn dual_value(lambda: &DVector<f64>, y: &DVector<f64>, dual_norm: f64, beta: f64) -> f64 {
    let s = if dual_norm > beta { beta / dual_norm } else { 1.0 };
    let l = lambda * s;
    -0.5 * l.norm_squared() + l.dot(y)
}

/// Block soft-threshold: `w_i <- max(0, 1 - tau/||w_i||) w_i`.
fn block_shrink(z: &mut DMatrix<f64>, tau: f64) {
    for mut col in z.column_iter_mut() {
        let nrm = col.norm();
        if nrm <= tau {
            col.fill(0.0);
        } else {
            col *= 1.0 - tau / nrm;
        }
    }
}

/// Solves the gated group lasso by accelerated proximal gradient with
/// adaptive restart, stopping once the relative KKT residual reaches
/// `cfg.tol_kkt`. With `beta = 0` the least-norm exact fit is returned.
pub fn solve_gated(ds: &Dataset, ps: &PatternSet, cfg: &SolverConfig) -> Result<GatedSolution> {
    solve_gated_from(ds, ps, cfg, None)
}

/// [`solve_gated`] started from `init` (one block per pattern).
pub fn solve_gated_from(
    ds: &Dataset,
    ps: &PatternSet,
    cfg: &SolverConfig,
    init: Option<&[DVector<f64>]>,
) -> Result<GatedSolution> {
    cfg.validate()?;
    let op = GatedOperator::new(ds, ps)?;
    let beta = ds.beta();
    let y = ds.y();
    if beta == 0.0 {
        return least_norm_solution(ds, ps, &op, cfg);
    }
    let mut w = match init {
        Some(blocks) => {
            check_blocks(&op, blocks)?;
            from_columns(ds.d(), blocks)
        }
        None => DMatrix::zeros(ds.d(), op.blocks()),
    };

    let lip = op.lipschitz();
    let mut step = match cfg.step_rule {
        StepRule::Fixed => 1.0 / lip.max(f64::MIN_POSITIVE),
        StepRule::Backtracking => 2.0 / lip.max(f64::MIN_POSITIVE),
    };
    let mut z = w.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;
    let mut best: Option<(f64, DMatrix<f64>)> = None;

    loop {
        // certificate at the current iterate
        if iterations % CHECK_EVERY == 0 || iterations == cfg.max_iters {
            let lambda = y - op.apply(&w);
            let corr = op.adjoint(&lambda);
            let report = kkt_from_gradient(&corr, &w, beta);
            if best.as_ref().is_none_or(|(r, _)| report.max_violation < *r) {
                best = Some((report.max_violation, w.clone()));
            }
            if report.max_violation <= cfg.tol_kkt || iterations >= cfg.max_iters {
                break;
            }
        }
        iterations += 1;

        let (fz, grad) = op.smooth_grad(&z, y);
        let mut next;
        loop {
            next = &z - &grad * step;
            block_shrink(&mut next, beta * step);
            if cfg.step_rule == StepRule::Fixed {
                break;
            }
            let diff = &next - &z;
            let fnext = 0.5 * (op.apply(&next) - y).norm_squared();
            if fnext <= fz + grad.dot(&diff) + diff.norm_squared() / (2.0 * step) + 1e-12 * fz.abs() {
                break;
            }
            step *= 0.5;
        }

        // gradient-based adaptive restart
        let restart = (&z - &next).dot(&(&next - &w)) > 0.0;
        let t_next = if restart { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        z = if restart { next.clone() } else { &next + (&next - &w) * ((t - 1.0) / t_next) };
        t = t_next;
        w = next;
    }

    let (_, w) = best.expect("at least one check ran");
    Ok(finish(ds, &op, w, iterations, cfg.tol_kkt))
}

fn finish(ds: &Dataset, op: &GatedOperator, w: DMatrix<f64>, iterations: usize, tol: f64) -> GatedSolution {
    let beta = ds.beta();
    let y = ds.y();
    let lambda = y - op.apply(&w);
    let corr = op.adjoint(&lambda);
    let report = kkt_from_gradient(&corr, &w, beta);
    let objective = 0.5 * lambda.norm_squared() + beta * group_penalty(&w);
    let dual = if beta > 0.0 { dual_value(&lambda, y, report.dual_norm, beta) } else { objective };
    GatedSolution {
        weights: columns(&w),
        objective,
        kkt_residual: report.max_violation,
        iterations,
        dual_vector: lambda,
        dual_value: dual,
        certified: report.max_violation <= tol,
    }
}

fn least_norm_solution(ds: &Dataset, ps: &PatternSet, op: &GatedOperator, cfg: &SolverConfig) -> Result<GatedSolution> {
    let fit = exact_fit(ds, ps)?;
    let w = from_columns(ds.d(), &fit.weights);
    let mut sol = finish(ds, op, w, 0, cfg.tol_kkt);
    // without the penalty, optimality is X^T D_i lambda = 0 for every block
    let scale = op.adjoint(ds.y()).column_iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    sol.kkt_residual = op.adjoint(&sol.dual_vector).column_iter().map(|c| c.norm()).fold(0.0, f64::max) / scale;
    sol.certified = sol.kkt_residual <= cfg.tol_kkt.max(1e-10);
    Ok(sol)
}
