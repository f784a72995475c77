//! Minimum-norm splitting of a vector into a difference of two members of an
//! activation cone, and the feasibility construction that bounds it.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::arrangements::{is_realizable, Pattern};
use crate::dataset::{rng_stream, standard_normal_matrix, stream, Dataset, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg::least_distance;

/// Number of log-spaced margins tried by [`cone_sharpness`].
pub const EPS_GRID_POINTS: usize = 20;
pub const EPS_GRID_MIN: f64 = 1e-4;
pub const EPS_GRID_MAX: f64 = 1.0;

/// `w = u - v` with `u, v` in the cone `K_D`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    /// `||u|| + ||v||`.
    pub norm_sum: f64,
    /// `norm_sum / ||w||`, always at least 1.
    pub sharpness: f64,
    pub certified: bool,
    pub iterations: usize,
}

fn in_cone(g: &DMatrix<f64>, z: &DVector<f64>) -> bool {
    let scale = g.row_iter().map(|r| r.norm()).fold(0.0, f64::max) * z.norm();
    (g * z).iter().all(|&s| s >= -1e-12 * scale)
}

fn split(u: DVector<f64>, w: &DVector<f64>, scale: f64, certified: bool, iterations: usize) -> Decomposition {
    let v = &u - w;
    let u = u * scale;
    let v = v * scale;
    let norm_sum = u.norm() + v.norm();
    Decomposition { sharpness: (norm_sum / (w.norm() * scale)).max(1.0), norm_sum, u, v, certified, iterations }
}

/// Euclidean projection onto `{u : g u >= h}`.
fn project(g: &DMatrix<f64>, h: &DVector<f64>, x: &DVector<f64>) -> Option<DVector<f64>> {
    let slack = h - g * x;
    least_distance(g, &slack).map(|s| x + s)
}

/// Minimizes `||u|| + ||v||` over `u - v = w`, `u, v` in `K_D`.
///
/// With `v = u - w` eliminated the feasible set is the polyhedron
/// `{u : G u >= max(0, G w)}`, `G = (2D - I) X`. If `w` or `-w` lies in the
/// cone the answer is immediate; otherwise the objective is smooth on the
/// feasible set and an accelerated projected gradient method is run until
/// the projected-gradient residual drops below `cfg.tol_kkt`. The problem is
/// solved for `w / ||w||` and rescaled.
pub fn decompose_min_norm(ds: &Dataset, pattern: &Pattern, w: &DVector<f64>, cfg: &SolverConfig) -> Result<Decomposition> {
    cfg.validate()?;
    if w.len() != ds.d() || pattern.len() != ds.n() {
        return Err(Error::DimensionMismatch("vector or pattern does not match the dataset".into()));
    }
    let scale = w.norm();
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidInput("cannot decompose the zero vector".into()));
    }
    if !is_realizable(ds, pattern) {
        return Err(Error::Precondition(format!("pattern {pattern} is not realizable")));
    }
    let w = w / scale;
    let g = pattern.cone_matrix(ds.x());
    // one side carries all of w: the triangle inequality is tight
    if in_cone(&g, &w) {
        return Ok(Decomposition { sharpness: 1.0, ..split(w.clone(), &w, scale, true, 0) });
    }
    if in_cone(&g, &(-&w)) {
        return Ok(Decomposition { sharpness: 1.0, ..split(DVector::zeros(w.len()), &w, scale, true, 0) });
    }

    let h = (&g * &w).map(|s| s.max(0.0));
    let proj = |x: &DVector<f64>| project(&g, &h, x).ok_or_else(|| Error::Precondition("empty feasible set".into()));
    let f = |u: &DVector<f64>| u.norm() + (u - &w).norm();
    let grad = |u: &DVector<f64>| {
        let a = u.norm();
        let b = (u - &w).norm();
        let mut out = DVector::zeros(u.len());
        if a > 0.0 {
            out += u / a;
        }
        if b > 0.0 {
            out += (u - &w) / b;
        }
        out
    };

    let mut x = proj(&(&w * 0.5))?;
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut step = 1.0f64;
    let mut iterations = 0;
    let mut certified = false;
    while iterations < cfg.max_iters {
        // fixed unit step: x is optimal iff it is a fixed point for any step
        let pg = proj(&(&x - grad(&x)))?;
        if (&x - &pg).norm() <= cfg.tol_kkt {
            certified = true;
            break;
        }
        iterations += 1;
        let gz = grad(&z);
        let fz = f(&z);
        let mut next;
        loop {
            next = proj(&(&z - &gz * step))?;
            let diff = &next - &z;
            if f(&next) <= fz + gz.dot(&diff) + diff.norm_squared() / (2.0 * step) + 1e-15 || step < 1e-14 {
                break;
            }
            step *= 0.5;
        }
        // gradient restart: f is too flat near the optimum to compare values
        if (&z - &next).dot(&(&next - &x)) > 0.0 {
            z = next.clone();
            t = 1.0;
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            z = &next + (&next - &x) * ((t - 1.0) / t_next);
            t = t_next;
        }
        x = next;
    }
    Ok(split(x, &w, scale, certified, iterations))
}

/// Smallest-norm `u` with `(2D - I) X u >= eps |(2D - I) X z|`, returned when
/// its norm is at most 1 (`None` means infeasible).
pub fn chebyshev_feasibility(ds: &Dataset, pattern: &Pattern, z: &DVector<f64>, eps: f64) -> Result<Option<DVector<f64>>> {
    if (z.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("z must be a unit vector, has norm {}", z.norm())));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps must be nonnegative, got {eps}")));
    }
    if z.len() != ds.d() || pattern.len() != ds.n() {
        return Err(Error::DimensionMismatch("vector or pattern does not match the dataset".into()));
    }
    if eps == 0.0 {
        return Ok(Some(DVector::zeros(z.len())));
    }
    let g = pattern.cone_matrix(ds.x());
    let h = (&g * z).map(|s| eps * s.abs());
    Ok(least_distance(&g, &h).filter(|u| u.norm() <= 1.0))
}

/// The decomposition `v1 = (u/eps + z)/2`, `v2 = (u/eps - z)/2` built from a
/// feasibility witness; its norm sum is at most `1 + 1/eps`.
pub fn chebyshev_decomposition(u: &DVector<f64>, z: &DVector<f64>, eps: f64) -> Decomposition {
    let a = (u / eps + z) * 0.5;
    let b = (u / eps - z) * 0.5;
    let norm_sum = a.norm() + b.norm();
    Decomposition { sharpness: (norm_sum / z.norm()).max(1.0), norm_sum, u: a, v: b, certified: false, iterations: 0 }
}

/// The margin grid `EPS_GRID_MIN ..= EPS_GRID_MAX`, log spaced, ascending.
pub fn eps_grid() -> Vec<f64> {
    let (lo, hi) = (EPS_GRID_MIN.ln(), EPS_GRID_MAX.ln());
    (0..EPS_GRID_POINTS)
        .map(|k| (lo + (hi - lo) * k as f64 / (EPS_GRID_POINTS - 1) as f64).exp())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sharpness {
    /// Best norm sum found for the unit vector `z`.
    pub value: f64,
    /// `1 + 1/eps*`, `None` when no grid margin is feasible.
    pub upper_bound: Option<f64>,
    pub eps_star: Option<f64>,
    pub decomposition: Decomposition,
}

/// Sharpness of `K_D` at the unit vector `z`, with the feasibility bound
/// from the largest grid margin that admits a witness.
pub fn cone_sharpness(ds: &Dataset, pattern: &Pattern, z: &DVector<f64>, cfg: &SolverConfig) -> Result<Sharpness> {
    let mut best = decompose_min_norm(ds, pattern, z, cfg)?;
    let mut eps_star = None;
    // feasibility is monotone in eps, so scan from the top
    for &eps in eps_grid().iter().rev() {
        if let Some(u) = chebyshev_feasibility(ds, pattern, z, eps)? {
            let cand = chebyshev_decomposition(&u, z, eps);
            if cand.norm_sum < best.norm_sum {
                best = Decomposition { certified: false, ..cand };
            }
            eps_star = Some(eps);
            break;
        }
    }
    Ok(Sharpness { value: best.sharpness, upper_bound: eps_star.map(|e| 1.0 + 1.0 / e), eps_star, decomposition: best })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaCheck {
    /// Minimum-norm solution of `X lambda >= b`, if the system is feasible.
    pub lambda: Option<DVector<f64>>,
    pub norm: Option<f64>,
    /// `||lambda|| <= 5 c`.
    pub success: bool,
}

/// Draws a `d x d` Gaussian `X` from `seed` and solves
/// `min ||lambda||` subject to `X lambda >= b`; success means `||lambda|| <= 5c`.
pub fn lambda_construction_check(d: usize, b: &DVector<f64>, c: f64, seed: u64) -> Result<LambdaCheck> {
    if d == 0 || b.len() != d {
        return Err(Error::DimensionMismatch(format!("b has length {}, expected d = {d}", b.len())));
    }
    if b.norm() > 2.0 * (d as f64).sqrt() * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!("||b|| = {} exceeds 2 sqrt(n)", b.norm())));
    }
    let x = standard_normal_matrix(&mut rng_stream(seed, stream::LAMBDA_CHECK), d, d);
    let lambda = least_distance(&x, b);
    let norm = lambda.as_ref().map(DVector::norm);
    Ok(LambdaCheck { success: norm.is_some_and(|v| v <= 5.0 * c), lambda, norm })
}
