use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::arrangements::PatternSet;
use crate::dataset::{Dataset, SolverConfig, StepRule};
use crate::error::{Error, Result};
use crate::linalg::ConeProjector;
use crate::solvers::operator::{from_columns, GatedOperator};

const CHECK_EVERY: usize = 10;

/// Relative cone violation accepted at convergence.
pub const CONE_FEASIBILITY_TOL: f64 = 1e-8;

/// Solution of the cone-constrained relaxation
/// `min 1/2 ||sum_i D_i X (u_i - v_i) - y||^2 + beta sum_i (||u_i|| + ||v_i||)`
/// with `u_i, v_i` in `K_i = {u : (2 D_i - I) X u >= 0}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeSolution {
    pub pairs: Vec<(DVector<f64>, DVector<f64>)>,
    pub objective: f64,
    /// Gradient-mapping norm relative to `beta`.
    pub kkt_residual: f64,
    /// Largest negative part of `(2 D_i - I) X u_i` or `(2 D_i - I) X v_i`.
    pub cone_violation: f64,
    pub iterations: usize,
    pub certified: bool,
}

impl ConeSolution {
    /// Absolute violation allowed for these pairs: `1e-8 max_i ||X u_i||_inf`.
    pub fn feasibility_tolerance(&self, x: &DMatrix<f64>) -> f64 {
        let scale = self
            .pairs
            .iter()
            .flat_map(|(u, v)| [(x * u).amax(), (x * v).amax()])
            .fold(0.0, f64::max);
        CONE_FEASIBILITY_TOL * scale
    }

    pub fn is_cone_feasible(&self, x: &DMatrix<f64>) -> bool {
        self.cone_violation <= self.feasibility_tolerance(x)
    }

    /// `u_i - v_i` per pattern: the equivalent gated weights.
    pub fn gated_weights(&self) -> Vec<DVector<f64>> {
        self.pairs.iter().map(|(u, v)| u - v).collect()
    }
}

/// Direct evaluation of the cone-constrained objective (constraints ignored).
pub fn objective_cone(ds: &Dataset, ps: &PatternSet, pairs: &[(DVector<f64>, DVector<f64>)]) -> Result<f64> {
    let op = GatedOperator::new(ds, ps)?;
    if pairs.len() != op.blocks() {
        return Err(Error::DimensionMismatch(format!("{} pairs for {} patterns", pairs.len(), op.blocks())));
    }
    let w: Vec<DVector<f64>> = pairs.iter().map(|(u, v)| u - v).collect();
    let r = op.apply(&from_columns(ds.d(), &w)) - ds.y();
    let penalty: f64 = pairs.iter().map(|(u, v)| u.norm() + v.norm()).sum();
    Ok(0.5 * r.norm_squared() + ds.beta() * penalty)
}

/// Largest negative part of the cone inequalities over all pairs.
pub fn cone_violation(ds: &Dataset, ps: &PatternSet, pairs: &[(DVector<f64>, DVector<f64>)]) -> f64 {
    ps.iter()
        .zip(pairs)
        .map(|(p, (u, v))| {
            let g = p.cone_matrix(ds.x());
            let worst = |z: &DVector<f64>| (&g * z).iter().fold(0.0f64, |acc, &s| if -s > acc { -s } else { acc });
            worst(u).max(worst(v))
        })
        .fold(0.0, f64::max)
}

#[derive(Clone)]
struct ConeProx {
    cones: Vec<ConeProjector>,
}

impl ConeProx {
    /// `prox` of `tau ||.|| + indicator(K_i)` column by column, which for a
    /// convex cone is the block shrink of the projection.
    fn apply(&mut self, z: &mut DMatrix<f64>, tau: f64) {
        for (j, cone) in self.cones.iter_mut().enumerate() {
            let col = z.column(j).into_owned();
            let p = cone.project(&col);
            let nrm = p.norm();
            let out = if nrm <= tau { DVector::zeros(col.len()) } else { p * (1.0 - tau / nrm) };
            z.set_column(j, &out);
        }
    }
}

/// Accelerated proximal gradient on `(U, V)` where each proximal step
/// projects every block onto its polyhedral cone (a nonnegative
/// least-squares dual) and then soft-thresholds it.
pub fn solve_cone_constrained(ds: &Dataset, ps: &PatternSet, cfg: &SolverConfig) -> Result<ConeSolution> {
    solve_cone_from(ds, ps, cfg, None)
}

/// [`solve_cone_constrained`] started from `init`, projected first.
pub fn solve_cone_from(
    ds: &Dataset,
    ps: &PatternSet,
    cfg: &SolverConfig,
    init: Option<&[(DVector<f64>, DVector<f64>)]>,
) -> Result<ConeSolution> {
    cfg.validate()?;
    let op = GatedOperator::new(ds, ps)?;
    let beta = ds.beta();
    if beta <= 0.0 {
        return Err(Error::InvalidInput("the cone-constrained solver needs beta > 0".into()));
    }
    let y = ds.y();
    let d = ds.d();
    let blocks = op.blocks();
    let mut prox_u = ConeProx { cones: ps.iter().map(|p| ConeProjector::new(p.cone_matrix(ds.x()))).collect() };
    // separate projectors: the u and v blocks sit on different faces
    let mut prox_v = prox_u.clone();

    let (mut u, mut v) = match init {
        Some(pairs) => {
            if pairs.len() != blocks {
                return Err(Error::DimensionMismatch(format!("{} pairs for {blocks} patterns", pairs.len())));
            }
            let mut u = from_columns(d, &pairs.iter().map(|p| p.0.clone()).collect::<Vec<_>>());
            let mut v = from_columns(d, &pairs.iter().map(|p| p.1.clone()).collect::<Vec<_>>());
            prox_u.apply(&mut u, 0.0);
            prox_v.apply(&mut v, 0.0);
            (u, v)
        }
        None => (DMatrix::zeros(d, blocks), DMatrix::zeros(d, blocks)),
    };

    let lip = 2.0 * op.lipschitz();
    let mut step = match cfg.step_rule {
        StepRule::Fixed => 1.0 / lip.max(f64::MIN_POSITIVE),
        StepRule::Backtracking => 2.0 / lip.max(f64::MIN_POSITIVE),
    };
    let smooth = |a: &DMatrix<f64>, b: &DMatrix<f64>| -> (f64, DMatrix<f64>) { op.smooth_grad(&(a - b), y) };

    let (mut zu, mut zv) = (u.clone(), v.clone());
    let mut t = 1.0f64;
    let mut iterations = 0;
    let mut best: Option<(f64, DMatrix<f64>, DMatrix<f64>)> = None;

    loop {
        if iterations % CHECK_EVERY == 0 || iterations >= cfg.max_iters {
            let residual = gradient_mapping(&op, (&mut prox_u, &mut prox_v), (&u, &v), y, beta, step) / beta;
            if best.as_ref().is_none_or(|(r, _, _)| residual < *r) {
                best = Some((residual, u.clone(), v.clone()));
            }
            if residual <= cfg.tol_kkt || iterations >= cfg.max_iters {
                break;
            }
        }
        iterations += 1;

        let (fz, grad) = smooth(&zu, &zv);
        let (mut nu, mut nv);
        loop {
            nu = &zu - &grad * step;
            nv = &zv + &grad * step;
            prox_u.apply(&mut nu, beta * step);
            prox_v.apply(&mut nv, beta * step);
            if cfg.step_rule == StepRule::Fixed {
                break;
            }
            let (du, dv) = (&nu - &zu, &nv - &zv);
            let fnext = smooth(&nu, &nv).0;
            let lin = grad.dot(&du) - grad.dot(&dv);
            if fnext <= fz + lin + (du.norm_squared() + dv.norm_squared()) / (2.0 * step) + 1e-12 * fz.abs() {
                break;
            }
            step *= 0.5;
        }

        let momentum_dot = (&zu - &nu).dot(&(&nu - &u)) + (&zv - &nv).dot(&(&nv - &v));
        let restart = momentum_dot > 0.0;
        let t_next = if restart { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        let coef = if restart { 0.0 } else { (t - 1.0) / t_next };
        zu = &nu + (&nu - &u) * coef;
        zv = &nv + (&nv - &v) * coef;
        t = t_next;
        u = nu;
        v = nv;
    }

    let (residual, u, v) = best.expect("at least one check ran");
    let pairs: Vec<_> = u.column_iter().zip(v.column_iter()).map(|(a, b)| (a.into_owned(), b.into_owned())).collect();
    let objective = objective_cone(ds, ps, &pairs)?;
    let violation = cone_violation(ds, ps, &pairs);
    let mut sol = ConeSolution {
        pairs,
        objective,
        kkt_residual: residual,
        cone_violation: violation,
        iterations,
        certified: false,
    };
    sol.certified = residual <= cfg.tol_kkt && sol.is_cone_feasible(ds.x());
    Ok(sol)
}

/// `max_i ||(z_i - prox(z_i - t grad_i)) / t||` over all `u` and `v` blocks.
fn gradient_mapping(
    op: &GatedOperator,
    (prox_u, prox_v): (&mut ConeProx, &mut ConeProx),
    (u, v): (&DMatrix<f64>, &DMatrix<f64>),
    y: &DVector<f64>,
    beta: f64,
    step: f64,
) -> f64 {
    let (_, grad) = op.smooth_grad(&(u - v), y);
    let mut worst = 0.0f64;
    for (z, g, prox) in [(u, grad.clone(), prox_u), (v, -grad, prox_v)] {
        let mut p = z - &g * step;
        prox.apply(&mut p, beta * step);
        let diff = (z - p) / step;
        for c in diff.column_iter() {
            worst = worst.max(c.norm());
        }
    }
    worst
}
