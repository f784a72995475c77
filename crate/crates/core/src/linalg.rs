//! Dense linear-algebra kernels: symmetric spectra, nonnegative least squares
//! and least-distance programming.

use nalgebra::{DMatrix, DVector};

/// Eigenvalues of `(m + m^T) / 2`, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    assert!(m.is_square(), "symmetric eigenvalues need a square matrix");
    if m.nrows() == 0 {
        return DVector::zeros(0);
    }
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    DVector::from_vec(ev)
}

/// `(lambda_min, lambda_max)` of the symmetrized matrix.
pub fn sym_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let ev = sym_eigenvalues(m);
    (ev[0], ev[ev.len() - 1])
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = f64::EPSILON * (a.nrows().max(a.ncols()) as f64) * smax;
    svd.solve(b, eps).expect("both factors were requested")
}

/// Nonnegative least squares `min ||a x - b||` subject to `x >= 0`
/// (Lawson-Hanson active set).
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (m, k) = a.shape();
    assert_eq!(b.len(), m, "nnls: right-hand side length");
    let mut x = DVector::zeros(k);
    if k == 0 {
        return x;
    }
    let tol = 1e-13 * (a.norm() * b.norm()).max(f64::MIN_POSITIVE);
    let mut passive = vec![false; k];
    let mut blocked = vec![false; k];

    for _ in 0..(3 * k + 30) {
        let w = a.transpose() * (b - a * &x);
        let entering = (0..k)
            .filter(|&j| !passive[j] && !blocked[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(t) = entering else { break };
        if w[t] <= tol {
            break;
        }
        passive[t] = true;
        let before = x.clone();

        for _ in 0..(k + 5) {
            let idx: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
            if idx.is_empty() {
                break;
            }
            let s_p = lstsq_min_norm(&a.select_columns(idx.iter()), b);
            if s_p.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (pos, &j) in idx.iter().enumerate() {
                    x[j] = s_p[pos];
                }
                break;
            }
            // step towards s until the first passive coordinate hits zero
            let mut alpha = 1.0f64;
            for (pos, &j) in idx.iter().enumerate() {
                if s_p[pos] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - s_p[pos]));
                }
            }
            for (pos, &j) in idx.iter().enumerate() {
                x[j] += alpha * (s_p[pos] - x[j]);
                if x[j] <= 1e-15 * before.amax().max(f64::MIN_POSITIVE) || s_p[pos] <= 0.0 && x[j] <= 0.0 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
        if !passive[t] && x == before {
            // no progress possible along t: the gradient sign is round-off
            blocked[t] = true;
        } else {
            blocked.iter_mut().for_each(|v| *v = false);
        }
    }
    x
}

/// Least-distance programming: `min ||u||` subject to `g u >= h`.
///
/// Returns `None` when the system is infeasible. Rows are normalized and the
/// right-hand side rescaled before the dual NNLS solve, so the answer is
/// invariant to positive rescaling of individual constraints.
pub fn least_distance(g: &DMatrix<f64>, h: &DVector<f64>) -> Option<DVector<f64>> {
    let (m, d) = g.shape();
    assert_eq!(h.len(), m, "least_distance: right-hand side length");
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for k in 0..m {
        let norm = g.row(k).norm();
        if norm == 0.0 {
            if h[k] > 0.0 {
                return None;
            }
            continue;
        }
        rows.push(k);
        rhs.push(h[k] / norm);
    }
    let sigma = rhs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if rows.is_empty() || sigma == 0.0 || rhs.iter().all(|&v| v <= 0.0) {
        return Some(DVector::zeros(d));
    }
    let mm = rows.len();
    // E = [G_hat^T ; h_hat^T], f = e_{d+1}
    let mut e = DMatrix::zeros(d + 1, mm);
    for (col, &k) in rows.iter().enumerate() {
        let norm = g.row(k).norm();
        for j in 0..d {
            e[(j, col)] = g[(k, j)] / norm;
        }
        e[(d, col)] = rhs[col] / sigma;
    }
    let mut f = DVector::zeros(d + 1);
    f[d] = 1.0;
    let mu = nnls(&e, &f);
    let r = &e * &mu - &f;
    let denom = -r[d];
    if r.norm() < 1e-11 || denom <= 1e-22 {
        return None;
    }
    let u = DVector::from_fn(d, |j, _| r[j] / denom) * sigma;
    Some(u)
}

/// Repeated projections onto one polyhedral cone `{u : g u >= 0}`.
///
/// Remembers the active face of the last projection and first tries the
/// same face with a small Cholesky solve; the answer is accepted only when
/// it satisfies the projection's optimality conditions, otherwise the full
/// nonnegative least-squares solve runs. Successive calls from an iterative
/// method usually share the face.
#[derive(Clone, Debug)]
pub struct ConeProjector {
    g: DMatrix<f64>,
    gram: DMatrix<f64>,
    scale: f64,
    face: Vec<usize>,
}

impl ConeProjector {
    pub fn new(g: DMatrix<f64>) -> Self {
        let gram = &g * g.transpose();
        let scale = g.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
        Self { g, gram, scale, face: Vec::new() }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn project(&mut self, x: &DVector<f64>) -> DVector<f64> {
        let gx = &self.g * x;
        let tol = 1e-15 * self.scale * x.norm();
        if gx.iter().all(|&v| v >= -tol) {
            self.face.clear();
            return x.clone();
        }
        if let Some(p) = self.try_face(x, &gx) {
            return p;
        }
        let mu = nnls(&-self.g.transpose(), x);
        self.face = (0..mu.len()).filter(|&k| mu[k] > 0.0).collect();
        x + self.g.transpose() * mu
    }

    fn try_face(&self, x: &DVector<f64>, gx: &DVector<f64>) -> Option<DVector<f64>> {
        let k = self.face.len();
        if k == 0 || k > self.g.ncols() {
            return None;
        }
        let sub = DMatrix::from_fn(k, k, |i, j| self.gram[(self.face[i], self.face[j])]);
        let rhs = DVector::from_fn(k, |i, _| -gx[self.face[i]]);
        let mu = sub.cholesky()?.solve(&rhs);
        if mu.iter().any(|&m| m < 0.0) {
            return None;
        }
        let mut p = x.clone();
        for (i, &row) in self.face.iter().enumerate() {
            p += self.g.row(row).transpose() * mu[i];
        }
        let tol = 1e-12 * self.scale * x.norm();
        (&self.g * &p).iter().all(|&v| v >= -tol).then_some(p)
    }
}

/// Euclidean projection of `x` onto the polyhedral cone `{u : g u >= 0}`.
///
/// Uses the Moreau decomposition: the polar cone is generated by the
/// negated rows of `g`, so the projection is the residual of a
/// nonnegative least-squares fit of `x` by those generators.
pub fn project_polyhedral_cone(g: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let gx = g * x;
    let scale = g.norm() * x.norm();
    if gx.iter().all(|&v| v >= -1e-15 * scale) {
        return x.clone();
    }
    // polar cone generators are -g_k; fit x ~ -g^T mu with mu >= 0
    let a = -g.transpose();
    let mu = nnls(&a, x);
    x + g.transpose() * mu
}
