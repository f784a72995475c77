use nalgebra::{DMatrix, DVector};

use crate::arrangements::PatternSet;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::sym_extremes;

/// The linear map `W = [w_1 .. w_P] -> sum_i D_i X w_i` and its adjoint.
///
/// Applied as the row sums of `Mask (.) (X W)`, which keeps every product a
/// dense matrix multiply.
#[derive(Clone, Debug)]
pub struct GatedOperator {
    x: DMatrix<f64>,
    mask: DMatrix<f64>,
}

impl GatedOperator {
    pub fn new(ds: &Dataset, ps: &PatternSet) -> Result<Self> {
        if ps.is_empty() {
            return Err(Error::InvalidInput("pattern set is empty".into()));
        }
        if ps.n() != ds.n() {
            return Err(Error::DimensionMismatch(format!(
                "patterns cover {} samples, dataset has {}",
                ps.n(),
                ds.n()
            )));
        }
        Ok(Self { x: ds.x().clone(), mask: ps.mask_matrix() })
    }

    pub fn blocks(&self) -> usize {
        self.mask.ncols()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// `sum_i D_i X w_i` for the `d x P` block matrix `w`.
    pub fn apply(&self, w: &DMatrix<f64>) -> DVector<f64> {
        let xw = &self.x * w;
        DVector::from_fn(self.n(), |i, _| xw.row(i).dot(&self.mask.row(i)))
    }

    /// Adjoint: column `i` is `X^T D_i r`.
    pub fn adjoint(&self, r: &DVector<f64>) -> DMatrix<f64> {
        let mut weighted = self.mask.clone();
        for (i, mut row) in weighted.row_iter_mut().enumerate() {
            row *= r[i];
        }
        self.x.transpose() * weighted
    }

    /// `sum_i D_i X X^T D_i`, the Gram matrix of the operator.
    pub fn gram(&self) -> DMatrix<f64> {
        let xx = &self.x * self.x.transpose();
        let mm = &self.mask * self.mask.transpose();
        xx.component_mul(&mm)
    }

    /// Squared operator norm, the Lipschitz constant of the smooth part.
    pub fn lipschitz(&self) -> f64 {
        sym_extremes(&self.gram()).1.max(0.0)
    }

    /// Value and gradient of `w -> 1/2 ||A w - y||^2`.
    pub fn smooth_grad(&self, w: &DMatrix<f64>, y: &DVector<f64>) -> (f64, DMatrix<f64>) {
        let r = self.apply(w) - y;
        (0.5 * r.norm_squared(), self.adjoint(&r))
    }
}

pub(crate) fn columns(w: &DMatrix<f64>) -> Vec<DVector<f64>> {
    w.column_iter().map(|c| c.into_owned()).collect()
}

pub(crate) fn from_columns(d: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(d, cols.len());
    for (j, c) in cols.iter().enumerate() {
        w.set_column(j, c);
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangements::sample_patterns;
    use crate::dataset::{generate_dataset, rng_stream, standard_normal_matrix, LabelMode};

    fn setup() -> (Dataset, PatternSet) {
        let ds = generate_dataset(7, 3, 0.1, &LabelMode::RandomGaussian, 3).unwrap();
        let ps = sample_patterns(&ds, 5, 1).unwrap();
        (ds, ps)
    }

    #[test]
    fn apply_matches_explicit_sum() {
        let (ds, ps) = setup();
        let op = GatedOperator::new(&ds, &ps).unwrap();
        let w = standard_normal_matrix(&mut rng_stream(0, 99), 3, ps.len());
        let mut expected = DVector::zeros(7);
        for (j, p) in ps.iter().enumerate() {
            expected += p.gate(ds.x()) * w.column(j);
        }
        assert!((op.apply(&w) - expected).norm() < 1e-12);
    }

    #[test]
    fn adjoint_identity() {
        let (ds, ps) = setup();
        let op = GatedOperator::new(&ds, &ps).unwrap();
        let mut rng = rng_stream(1, 99);
        let w = standard_normal_matrix(&mut rng, 3, ps.len());
        let r = standard_normal_matrix(&mut rng, 7, 1).column(0).into_owned();
        let lhs = op.apply(&w).dot(&r);
        let rhs = op.adjoint(&r).dot(&w);
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (ds, ps) = setup();
        let op = GatedOperator::new(&ds, &ps).unwrap();
        let w = standard_normal_matrix(&mut rng_stream(2, 99), 3, ps.len());
        let (_, g) = op.smooth_grad(&w, ds.y());
        let h = 1e-6;
        for k in 0..w.len() {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[k] += h;
            wm[k] -= h;
            let fd = (op.smooth_grad(&wp, ds.y()).0 - op.smooth_grad(&wm, ds.y()).0) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1.0), "entry {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn lipschitz_bounds_operator() {
        let (ds, ps) = setup();
        let op = GatedOperator::new(&ds, &ps).unwrap();
        let l = op.lipschitz();
        let mut rng = rng_stream(3, 99);
        for _ in 0..20 {
            let w = standard_normal_matrix(&mut rng, 3, ps.len());
            assert!(op.apply(&w).norm_squared() <= l * w.norm_squared() * (1.0 + 1e-12));
        }
    }
}
