use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::arrangements::PatternSet;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::lstsq_min_norm;

/// Relative residual below which the labels count as fitted exactly.
pub const EXACT_FIT_TOL: f64 = 1e-8;

/// Least-norm solution of `sum_i D_i X w_i = y`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactFit {
    pub weights: Vec<DVector<f64>>,
    /// `||sum_i D_i X w_i - y||`.
    pub residual: f64,
    /// `residual <= 1e-8 ||y||`.
    pub fit: bool,
}

/// Least-norm least-squares fit with the augmented matrix `[D_1 X | .. | D_P X]`.
pub fn exact_fit(ds: &Dataset, ps: &PatternSet) -> Result<ExactFit> {
    if ps.is_empty() {
        return Err(Error::InvalidInput("pattern set is empty".into()));
    }
    if ps.n() != ds.n() {
        return Err(Error::DimensionMismatch(format!("patterns cover {} samples, dataset has {}", ps.n(), ds.n())));
    }
    let (n, d) = (ds.n(), ds.d());
    let mut big = DMatrix::zeros(n, d * ps.len());
    for (b, p) in ps.iter().enumerate() {
        big.view_mut((0, b * d), (n, d)).copy_from(&p.gate(ds.x()));
    }
    let w = lstsq_min_norm(&big, ds.y());
    let residual = (&big * &w - ds.y()).norm();
    let weights = (0..ps.len()).map(|b| w.rows(b * d, d).into_owned()).collect();
    Ok(ExactFit { weights, residual, fit: residual <= EXACT_FIT_TOL * ds.y().norm() })
}
