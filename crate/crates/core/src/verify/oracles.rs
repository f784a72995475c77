//! Reference solutions computed by methods that share no code with the
//! production solvers.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use nalgebra::{DMatrix, DVector};

use crate::arrangements::PatternSet;
use crate::dataset::Dataset;
use crate::solvers::GatedOperator;

struct Triplets {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
}

impl Triplets {
    fn new() -> Self {
        Self { rows: Vec::new(), cols: Vec::new(), vals: Vec::new(), b: Vec::new() }
    }

    fn push(&mut self, row: usize, col: usize, v: f64) {
        if v != 0.0 {
            self.rows.push(row);
            self.cols.push(col);
            self.vals.push(v);
        }
    }

    /// Appends one constraint row `a . x + s = b`; returns its index.
    fn row(&mut self, b: f64) -> usize {
        self.b.push(b);
        self.b.len() - 1
    }
}

fn settings() -> DefaultSettings<f64> {
    DefaultSettings {
        verbose: false,
        tol_gap_abs: 1e-11,
        tol_gap_rel: 1e-11,
        tol_feas: 1e-11,
        max_iter: 500,
        ..DefaultSettings::default()
    }
}

/// `min q . x` subject to `A x + s = b`, `s` in `cones`; returns `(x, objective)`.
fn solve_linear(nvar: usize, q: Vec<f64>, t: Triplets, cones: &[SupportedConeT<f64>]) -> Option<(Vec<f64>, f64)> {
    let p = CscMatrix::new_from_triplets(nvar, nvar, Vec::new(), Vec::new(), Vec::new());
    let a = CscMatrix::new_from_triplets(t.b.len(), nvar, t.rows, t.cols, t.vals);
    let mut solver = DefaultSolver::new(&p, &q, &a, &t.b, cones, settings()).ok()?;
    solver.solve();
    matches!(solver.solution.status, SolverStatus::Solved | SolverStatus::AlmostSolved)
        .then(|| (solver.solution.x.clone(), solver.solution.obj_val))
}

/// `min ||u|| + ||u - w||` subject to `g u >= h`, as a second-order cone program.
pub fn min_norm_sum_socp(g: &DMatrix<f64>, h: &DVector<f64>, w: &DVector<f64>) -> Option<f64> {
    let d = w.len();
    // x = (u, s1, s2)
    let nvar = d + 2;
    let mut q = vec![0.0; nvar];
    q[d] = 1.0;
    q[d + 1] = 1.0;
    let mut t = Triplets::new();
    for k in 0..g.nrows() {
        let r = t.row(-h[k]);
        for j in 0..d {
            t.push(r, j, -g[(k, j)]);
        }
    }
    // (s1, u) and (s2, u - w) in second-order cones
    let r = t.row(0.0);
    t.push(r, d, -1.0);
    for j in 0..d {
        let r = t.row(0.0);
        t.push(r, j, -1.0);
    }
    let r = t.row(0.0);
    t.push(r, d + 1, -1.0);
    for j in 0..d {
        let r = t.row(-w[j]);
        t.push(r, j, -1.0);
    }
    let cones = [
        SupportedConeT::NonnegativeConeT(g.nrows()),
        SupportedConeT::SecondOrderConeT(d + 1),
        SupportedConeT::SecondOrderConeT(d + 1),
    ];
    solve_linear(nvar, q, t, &cones).map(|(_, obj)| obj)
}

/// Cone-constrained relaxation as a second-order cone program:
/// `min 1/2 ||r||^2 + beta sum (a_i + b_i)` with `r = sum D_i X (u_i - v_i) - y`,
/// `||u_i|| <= a_i`, `||v_i|| <= b_i` and the cone inequalities.
pub fn cone_problem_socp(ds: &Dataset, ps: &PatternSet) -> Option<f64> {
    let (n, d, p) = (ds.n(), ds.d(), ps.len());
    // x = (u_1..u_P, v_1..v_P, a_1..a_P, b_1..b_P, r, tau)
    let ui = |i: usize, j: usize| i * d + j;
    let vi = |i: usize, j: usize| p * d + i * d + j;
    let ai = |i: usize| 2 * p * d + i;
    let bi = |i: usize| 2 * p * d + p + i;
    let ri = |k: usize| 2 * p * d + 2 * p + k;
    let tau = 2 * p * d + 2 * p + n;
    let nvar = tau + 1;

    let mut q = vec![0.0; nvar];
    for i in 0..p {
        q[ai(i)] = ds.beta();
        q[bi(i)] = ds.beta();
    }
    q[tau] = 1.0;
    let mut t = Triplets::new();
    let x = ds.x();

    // equality r - sum D_i X (u_i - v_i) = -y
    for k in 0..n {
        let r = t.row(-ds.y()[k]);
        t.push(r, ri(k), 1.0);
        for (i, pat) in ps.iter().enumerate() {
            if pat.is_active(k) {
                for j in 0..d {
                    t.push(r, ui(i, j), -x[(k, j)]);
                    t.push(r, vi(i, j), x[(k, j)]);
                }
            }
        }
    }
    let n_eq = n;
    // cone inequalities (2 D_i - I) X u_i >= 0, same for v_i
    let mut n_ineq = 0;
    for (i, pat) in ps.iter().enumerate() {
        let g = pat.cone_matrix(x);
        for k in 0..n {
            for var in [0usize, 1] {
                let r = t.row(0.0);
                for j in 0..d {
                    let col = if var == 0 { ui(i, j) } else { vi(i, j) };
                    t.push(r, col, -g[(k, j)]);
                }
                n_ineq += 1;
            }
        }
    }
    let mut cones = vec![SupportedConeT::ZeroConeT(n_eq), SupportedConeT::NonnegativeConeT(n_ineq)];
    for i in 0..p {
        for (head, body) in [(ai(i), 0usize), (bi(i), 1)] {
            let r = t.row(0.0);
            t.push(r, head, -1.0);
            for j in 0..d {
                let col = if body == 0 { ui(i, j) } else { vi(i, j) };
                let r = t.row(0.0);
                t.push(r, col, -1.0);
            }
            cones.push(SupportedConeT::SecondOrderConeT(d + 1));
        }
    }
    quadratic_lift(&mut t, &mut cones, tau, (0..n).map(ri).collect());
    solve_linear(nvar, q, t, &cones).map(|(_, obj)| obj)
}

/// `1/2 ||r||^2 <= tau` as the cone constraint
/// `(tau + 1/2, tau - 1/2, r)`: `(tau + 1/2)^2 >= (tau - 1/2)^2 + ||r||^2`.
fn quadratic_lift(t: &mut Triplets, cones: &mut Vec<SupportedConeT<f64>>, tau: usize, r: Vec<usize>) {
    let row = t.row(0.5);
    t.push(row, tau, -1.0);
    let row = t.row(-0.5);
    t.push(row, tau, -1.0);
    for &k in &r {
        let row = t.row(0.0);
        t.push(row, k, -1.0);
    }
    cones.push(SupportedConeT::SecondOrderConeT(r.len() + 2));
}

/// Gated group lasso as a second-order cone program.
pub fn gated_problem_socp(ds: &Dataset, ps: &PatternSet) -> Option<f64> {
    let (n, d, p) = (ds.n(), ds.d(), ps.len());
    let wi = |i: usize, j: usize| i * d + j;
    let si = |i: usize| p * d + i;
    let ri = |k: usize| p * d + p + k;
    let tau = p * d + p + n;
    let nvar = tau + 1;
    let mut q = vec![0.0; nvar];
    for i in 0..p {
        q[si(i)] = ds.beta();
    }
    q[tau] = 1.0;
    let mut t = Triplets::new();
    let x = ds.x();
    for k in 0..n {
        let r = t.row(-ds.y()[k]);
        t.push(r, ri(k), 1.0);
        for (i, pat) in ps.iter().enumerate() {
            if pat.is_active(k) {
                for j in 0..d {
                    t.push(r, wi(i, j), -x[(k, j)]);
                }
            }
        }
    }
    let mut cones = vec![SupportedConeT::ZeroConeT(n)];
    for i in 0..p {
        let r = t.row(0.0);
        t.push(r, si(i), -1.0);
        for j in 0..d {
            let r = t.row(0.0);
            t.push(r, wi(i, j), -1.0);
        }
        cones.push(SupportedConeT::SecondOrderConeT(d + 1));
    }
    quadratic_lift(&mut t, &mut cones, tau, (0..n).map(ri).collect());
    solve_linear(nvar, q, t, &cones).map(|(_, obj)| obj)
}

/// Conjugate gradients on `(A^T A + beta I) w = A^T y` for the squared-norm
/// regularized gated problem; returns the objective at the solution.
pub fn l2_objective_by_cg(ds: &Dataset, ps: &PatternSet) -> f64 {
    let op = GatedOperator::new(ds, ps).expect("valid instance");
    let beta = ds.beta();
    let apply = |w: &DMatrix<f64>| op.adjoint(&op.apply(w)) + w * beta;
    let b = op.adjoint(ds.y());
    let mut w = DMatrix::zeros(ds.d(), ps.len());
    let mut r = b.clone();
    let mut dir = r.clone();
    let mut rr = r.norm_squared();
    let stop = 1e-30 * b.norm_squared().max(f64::MIN_POSITIVE);
    for _ in 0..(20 * w.len() + 50) {
        if rr <= stop {
            break;
        }
        let ad = apply(&dir);
        let alpha = rr / dir.dot(&ad);
        w += &dir * alpha;
        r -= &ad * alpha;
        let rr_next = r.norm_squared();
        dir = &r + &dir * (rr_next / rr);
        rr = rr_next;
    }
    let res = op.apply(&w) - ds.y();
    0.5 * res.norm_squared() + 0.5 * beta * w.norm_squared()
}

/// Golden-section minimum of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = f(b);
        }
    }
    f(0.5 * (lo + hi)).min(fa).min(fb)
}

/// Minimum of `||u|| + ||u - w||` over the planar region `{u : g u >= h}`
/// for an invertible `2 x 2` `g`: the region is `apex + K` with `K` the
/// wedge `{g u >= 0}`, and since the unconstrained minimizers (the segment
/// `[0, w]`) lie outside, the optimum is on one of the two boundary rays,
/// each searched by golden section.
pub fn planar_min_norm_sum(g: &DMatrix<f64>, h: &DVector<f64>, w: &DVector<f64>) -> f64 {
    let apex = g.clone().lu().solve(h).expect("invertible planar cone");
    let f = |u: &DVector<f64>| u.norm() + (u - w).norm();
    let ginv = g.clone().try_inverse().expect("invertible planar cone");
    let reach = 10.0 * (apex.norm() + w.norm() + 1.0);
    let mut best = f(&apex);
    // the extreme rays of {g u >= 0} are the columns of g^-1
    for k in 0..2 {
        let ray = ginv.column(k).normalize();
        let v = golden_section(|s| f(&(&apex + &ray * s)), 0.0, reach);
        best = best.min(v);
    }
    // a point of the segment [0, w] inside the region would be optimal
    let on_segment = golden_section(
        |s| {
            let u = w * s;
            let viol = (h - g * &u).map(|v| v.max(0.0)).amax();
            if viol > 1e-12 { f64::INFINITY } else { f(&u) }
        },
        0.0,
        1.0,
    );
    best.min(on_segment)
}
