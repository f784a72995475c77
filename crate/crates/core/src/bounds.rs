//! Expected activation Gram matrix, the condition number `kappa` and the
//! optimality-gap bounds built from them.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};

use crate::arrangements::{Pattern, PatternSet, Provenance};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{sym_eigenvalues, sym_extremes};
use crate::report::{BoundReport, GSource};

/// `lambda_min(M)` must exceed this fraction of `lambda_max(M)` for `M` to count as invertible.
pub const INVERTIBILITY_RATIO: f64 = 1e-10;

/// Largest `n` accepted by [`bound_maxcut`].
pub const MAXCUT_MAX_N: usize = 20;

pub const DEFAULT_DELTA: f64 = 0.1;

/// `E_g[D(g) X X^T D(g)]` in closed form:
/// `M_ij = (1/2 - arccos(cos_ij) / (2 pi)) x_i . x_j`.
pub fn expected_gram(ds: &Dataset) -> DMatrix<f64> {
    let x = ds.x();
    let n = ds.n();
    let gram = x * x.transpose();
    let norms: Vec<f64> = (0..n).map(|i| gram[(i, i)].sqrt()).collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 0.5 * gram[(i, i)];
        for j in (i + 1)..n {
            let cos = (gram[(i, j)] / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            let v = (0.5 - cos.acos() / (2.0 * PI)) * gram[(i, j)];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Average of `D_i X X^T D_i` over `patterns`, duplicates counted.
pub fn sampled_gram_of(ds: &Dataset, patterns: &[Pattern]) -> Result<DMatrix<f64>> {
    if patterns.is_empty() {
        return Err(Error::InvalidInput("no patterns to average".into()));
    }
    let n = ds.n();
    if patterns.iter().any(|p| p.len() != n) {
        return Err(Error::DimensionMismatch(format!("patterns must have length {n}")));
    }
    let gram = ds.x() * ds.x().transpose();
    // each term is gram (.) (d d^T); summing the outer products first is cheaper
    let mut counts = DMatrix::<f64>::zeros(n, n);
    for p in patterns {
        let ind = p.indicator();
        counts.ger(1.0, &ind, &ind, 1.0);
    }
    Ok(gram.component_mul(&counts) / patterns.len() as f64)
}

/// Average of `D_i X X^T D_i` over the (deduplicated) set.
pub fn sampled_gram(ds: &Dataset, ps: &PatternSet) -> Result<DMatrix<f64>> {
    sampled_gram_of(ds, ps.patterns())
}

/// `y^T D X X^T D y = ||X^T D y||^2`.
pub fn pattern_energy(ds: &Dataset, p: &Pattern) -> f64 {
    let dy = ds.y().component_mul(&p.indicator());
    (ds.x().transpose() * dy).norm_squared()
}

/// Spectral summary of the expected and sampled Gram matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct GramSummary {
    pub m: DMatrix<f64>,
    pub m_sampled: Option<DMatrix<f64>>,
    pub lambda_min_m: f64,
    pub lambda_max_m: f64,
    pub lambda_max_gram: f64,
    pub kappa: Option<f64>,
    pub per_pattern_energies: Vec<f64>,
}

impl GramSummary {
    pub fn new(ds: &Dataset, ps: Option<&PatternSet>) -> Result<Self> {
        let m = expected_gram(ds);
        let (lambda_min_m, lambda_max_m) = sym_extremes(&m);
        let lambda_max_gram = gram_lambda_max(ds);
        let kappa = kappa_from(lambda_max_gram, lambda_min_m, lambda_max_m);
        let (m_sampled, per_pattern_energies) = match ps {
            Some(ps) => (Some(sampled_gram(ds, ps)?), ps.iter().map(|p| pattern_energy(ds, p)).collect()),
            None => (None, Vec::new()),
        };
        Ok(Self { m, m_sampled, lambda_min_m, lambda_max_m, lambda_max_gram, kappa, per_pattern_energies })
    }
}

fn gram_lambda_max(ds: &Dataset) -> f64 {
    // lambda_max(X X^T) = lambda_max(X^T X), use the smaller side
    let x = ds.x();
    let g = if ds.d() < ds.n() { x.transpose() * x } else { x * x.transpose() };
    sym_extremes(&g).1
}

fn kappa_from(lambda_max_gram: f64, lambda_min_m: f64, lambda_max_m: f64) -> Option<f64> {
    (lambda_min_m > INVERTIBILITY_RATIO * lambda_max_m).then(|| lambda_max_gram / lambda_min_m)
}

/// `lambda_max(X X^T) / lambda_min(M)`, `None` when `M` is numerically singular.
pub fn compute_kappa(ds: &Dataset) -> Option<f64> {
    let (lo, hi) = sym_extremes(&expected_gram(ds));
    kappa_from(gram_lambda_max(ds), lo, hi)
}

/// `lambda_min(M)` on its own.
pub fn lambda_min_expected_gram(ds: &Dataset) -> f64 {
    sym_eigenvalues(&expected_gram(ds))[0]
}

/// `sqrt(2) beta ||y|| / sqrt(lambda_min(M))`.
pub fn bound_upper_gated(ds: &Dataset) -> Option<f64> {
    let (lo, hi) = sym_extremes(&expected_gram(ds));
    (lo > INVERTIBILITY_RATIO * hi).then(|| SQRT_2 * ds.beta() * ds.y().norm() / lo.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowerBound {
    /// `G beta ||y|| / sqrt(lambda_max(X X^T))`.
    pub value: f64,
    /// `1 - beta / (2 max_i sqrt(y^T M_i y))`.
    pub g: f64,
    pub source: GSource,
}

fn g_source(ps: &PatternSet) -> GSource {
    match ps.provenance() {
        Provenance::Enumerated => GSource::Enumerated,
        _ => GSource::SampledHeuristic,
    }
}

/// `G` from the largest pattern energy over `ps`; `None` when every energy is zero.
pub fn g_factor(ds: &Dataset, ps: &PatternSet) -> Option<f64> {
    let max_energy = ps.iter().map(|p| pattern_energy(ds, p)).fold(0.0, f64::max);
    (max_energy > 0.0).then(|| 1.0 - ds.beta() / (2.0 * max_energy.sqrt()))
}

/// Lower bound on the optimum over all patterns. The maximum inside `G` is
/// taken over `ps_for_max`; it is a certificate only if that set is the
/// full enumeration.
pub fn bound_lower_full(ds: &Dataset, ps_for_max: &PatternSet) -> Result<Option<LowerBound>> {
    if ps_for_max.is_empty() {
        return Err(Error::InvalidInput("pattern set is empty".into()));
    }
    let Some(g) = g_factor(ds, ps_for_max) else { return Ok(None) };
    let value = g * ds.beta() * ds.y().norm() / gram_lambda_max(ds).sqrt();
    Ok(Some(LowerBound { value, g, source: g_source(ps_for_max) }))
}

/// `(sqrt 2 / G) max_i sqrt(y^T M_i y) sqrt(y^T M_P^-1 y) / ||y||^2` with
/// `M_i` and `M_P` over `ps`. `G` uses `ps_for_max` when given, else `ps`.
/// `None` when `M_P` is singular, `G <= 0` or `y = 0`.
pub fn bound_tighter_factor(ds: &Dataset, ps: &PatternSet, ps_for_max: Option<&PatternSet>) -> Result<Option<f64>> {
    let mp = sampled_gram(ds, ps)?;
    let (lo, hi) = sym_extremes(&mp);
    let y = ds.y();
    let yy = y.norm_squared();
    if lo <= INVERTIBILITY_RATIO * hi || yy == 0.0 {
        return Ok(None);
    }
    let Some(g) = g_factor(ds, ps_for_max.unwrap_or(ps)) else { return Ok(None) };
    if g <= 0.0 {
        return Ok(None);
    }
    let Some(ch) = mp.cholesky() else { return Ok(None) };
    let quad = y.dot(&ch.solve(y));
    let max_energy = ps.iter().map(|p| pattern_energy(ds, p)).fold(0.0, f64::max);
    Ok(Some(SQRT_2 / g * max_energy.sqrt() * quad.sqrt() / yy))
}

/// `sqrt(max_b ||sum_{i in b} y_i x_i||^2)` over all subsets `b`, by Gray code.
pub fn bound_maxcut(ds: &Dataset) -> Result<f64> {
    let n = ds.n();
    if n > MAXCUT_MAX_N {
        return Err(Error::SizeGuard(format!("max-cut enumeration supports n <= {MAXCUT_MAX_N}, got {n}")));
    }
    let x = ds.x();
    let y = ds.y();
    let terms: Vec<DVector<f64>> = (0..n).map(|i| x.row(i).transpose() * y[i]).collect();
    let mut s = DVector::zeros(ds.d());
    let mut in_set = vec![false; n];
    let mut best = 0.0f64;
    for k in 1u64..(1u64 << n) {
        let flip = k.trailing_zeros() as usize;
        if in_set[flip] {
            s -= &terms[flip];
        } else {
            s += &terms[flip];
        }
        in_set[flip] = !in_set[flip];
        best = best.max(s.norm_squared());
    }
    Ok(best.sqrt())
}

/// Ceiling that ignores round-off just above an integer.
fn ceil_count(v: f64) -> u64 {
    (v * (1.0 - 1e-12)).ceil().max(0.0) as u64
}

pub const THRESHOLD_EXACT_FIT: &str = "exact_fit";
pub const THRESHOLD_L2_CONCENTRATION: &str = "l2_concentration";
pub const THRESHOLD_GATED_UPPER: &str = "gated_upper";
pub const THRESHOLD_NETWORK_WIDTH: &str = "network_width";

/// Pattern counts each guarantee asks for, rounded up:
/// exact fit `2 kappa log(n/delta)`, squared-norm concentration
/// `12 kappa log(2n/delta)`, gated upper bound `8 kappa log(n/delta)`, and
/// the network width floor `320 (sqrt(c) + 1)^2 log(n/delta)`.
pub fn sample_thresholds(kappa: f64, n: f64, delta: f64, c: f64) -> Result<BTreeMap<String, u64>> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidInput(format!("kappa must be positive, got {kappa}")));
    }
    if !(n > 0.0 && c > 0.0) {
        return Err(Error::InvalidInput("n and c must be positive".into()));
    }
    let log_n = (n / delta).ln();
    let log_2n = (2.0 * n / delta).ln();
    Ok(BTreeMap::from([
        (THRESHOLD_EXACT_FIT.to_string(), ceil_count(2.0 * kappa * log_n)),
        (THRESHOLD_L2_CONCENTRATION.to_string(), ceil_count(12.0 * kappa * log_2n)),
        (THRESHOLD_GATED_UPPER.to_string(), ceil_count(8.0 * kappa * log_n)),
        (THRESHOLD_NETWORK_WIDTH.to_string(), ceil_count(320.0 * (c.sqrt() + 1.0).powi(2) * log_n)),
    ]))
}

/// Relative gap allowed between the sampled cone relaxation and the full
/// optimum: `2 sqrt(20) (sqrt(c) + 1) (1 + 80 c^2 sqrt(log 2n))`.
pub fn approximation_factor(n: f64, c: f64) -> f64 {
    2.0 * 20f64.sqrt() * (c.sqrt() + 1.0) * (1.0 + 80.0 * c * c * (2.0 * n).ln().sqrt())
}

/// Every bound for `ds`. `ps` is the sampled set for the relative factor;
/// `ps_for_max` feeds `G` (pass the enumeration when available).
pub fn bound_report(ds: &Dataset, ps: Option<&PatternSet>, ps_for_max: &PatternSet, delta: f64) -> Result<BoundReport> {
    let summary = GramSummary::new(ds, None)?;
    let lower = bound_lower_full(ds, ps_for_max)?;
    let tighter = match ps {
        Some(ps) => bound_tighter_factor(ds, ps, Some(ps_for_max))?,
        None => None,
    };
    let upper = summary
        .kappa
        .map(|_| SQRT_2 * ds.beta() * ds.y().norm() / summary.lambda_min_m.sqrt());
    let thresholds = match summary.kappa {
        Some(k) => sample_thresholds(k, ds.n() as f64, delta, ds.c())?,
        None => BTreeMap::new(),
    };
    Ok(BoundReport {
        n: ds.n(),
        d: ds.d(),
        c: ds.c(),
        beta: ds.beta(),
        lambda_max_gram: summary.lambda_max_gram,
        lambda_min_m: summary.lambda_min_m,
        kappa: summary.kappa,
        g: lower.map(|l| l.g),
        g_source: g_source(ps_for_max),
        upper_gated: upper,
        lower_full: lower.map(|l| l.value),
        tighter_upper_factor: tighter,
        maxcut_value: if ds.n() <= MAXCUT_MAX_N { Some(bound_maxcut(ds)?) } else { None },
        delta,
        sample_thresholds: thresholds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangements::{enumerate_patterns, sample_pattern_draws};
    use crate::dataset::{generate_dataset, LabelMode};

    fn data(n: usize, d: usize, seed: u64) -> Dataset {
        generate_dataset(n, d, 0.1, &LabelMode::RandomGaussian, seed).unwrap()
    }

    #[test]
    fn diagonal_is_half_the_squared_norm() {
        let ds = data(5, 3, 0);
        let m = expected_gram(&ds);
        for i in 0..5 {
            assert_eq!(m[(i, i)], ds.x().row(i).norm_squared() / 2.0);
        }
        assert_eq!(m, m.transpose());
    }

    #[test]
    fn orthogonal_rows_decouple() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let ds = Dataset::new(x, DVector::from_vec(vec![1.0, 1.0]), 0.1).unwrap();
        assert_eq!(expected_gram(&ds)[(0, 1)], 0.0);
    }

    #[test]
    fn kappa_of_single_sample_is_two() {
        let ds = data(1, 4, 1);
        assert!((compute_kappa(&ds).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn kappa_matches_power_iteration() {
        let ds = data(6, 3, 2);
        let gram = ds.x() * ds.x().transpose();
        let m = expected_gram(&ds);
        let power = |a: &DMatrix<f64>| {
            let mut v = DVector::from_element(a.nrows(), 1.0).normalize();
            for _ in 0..20_000 {
                v = (a * &v).normalize();
            }
            v.dot(&(a * &v))
        };
        let top = power(&gram);
        let mtop = power(&m);
        // smallest eigenvalue of M from the largest of (mtop I - M)
        let shifted = DMatrix::identity(6, 6) * mtop - &m;
        let low = mtop - power(&shifted);
        let kappa = compute_kappa(&ds).unwrap();
        assert!((kappa - top / low).abs() <= 1e-8 * kappa, "{kappa} vs {}", top / low);
    }

    #[test]
    fn sampled_gram_edge_cases() {
        let ds = data(4, 2, 3);
        let ones = sampled_gram_of(&ds, &[Pattern::ones(4)]).unwrap();
        assert!((ones - ds.x() * ds.x().transpose()).amax() < 1e-14);
        let zeros = sampled_gram_of(&ds, &[Pattern::zeros(4)]).unwrap();
        assert_eq!(zeros.amax(), 0.0);
    }

    #[test]
    fn sampled_gram_converges_to_expectation() {
        let ds = data(6, 3, 4);
        let draws = sample_pattern_draws(&ds, 100_000, 4);
        let ms = sampled_gram_of(&ds, &draws).unwrap();
        let m = expected_gram(&ds);
        assert!((&ms - &m).norm() / m.norm() <= 0.05);
        let ev = sym_eigenvalues(&ms);
        assert!(ev[0] >= -1e-9 * ms.norm());
    }

    #[test]
    fn upper_bound_linear_in_beta_and_zero_for_zero_labels() {
        let ds = data(6, 3, 5);
        let a = bound_upper_gated(&ds).unwrap();
        let b = bound_upper_gated(&ds.with_beta(0.2).unwrap()).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-14 * b);
        let zero = ds.with_labels(DVector::zeros(6)).unwrap();
        assert_eq!(bound_upper_gated(&zero), Some(0.0));
    }

    #[test]
    fn lower_bound_vanishes_with_beta() {
        let ds = data(6, 2, 6).with_beta(1e-12).unwrap();
        let all = enumerate_patterns(&ds).unwrap();
        let lb = bound_lower_full(&ds, &all).unwrap().unwrap();
        assert!((lb.g - 1.0).abs() < 1e-10 && lb.value < 1e-10);
        assert_eq!(lb.source, GSource::Enumerated);
    }

    #[test]
    fn maxcut_small_cases() {
        let ds = data(1, 3, 7);
        let v = bound_maxcut(&ds).unwrap();
        assert!((v - ds.y()[0].abs() * ds.x().row(0).norm()).abs() < 1e-14);
        let zero = data(5, 2, 7).with_labels(DVector::zeros(5)).unwrap();
        assert_eq!(bound_maxcut(&zero).unwrap(), 0.0);
        assert!(matches!(bound_maxcut(&data(21, 2, 0)), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn maxcut_dominates_pattern_energies() {
        let ds = data(10, 2, 8);
        let cut = bound_maxcut(&ds).unwrap();
        for p in enumerate_patterns(&ds).unwrap().iter() {
            assert!(pattern_energy(&ds, p).sqrt() <= cut * (1.0 + 1e-12));
        }
    }

    #[test]
    fn thresholds_by_arithmetic() {
        let delta = 0.1;
        let t = sample_thresholds(2.0, std::f64::consts::E * delta, delta, 1.0).unwrap();
        assert_eq!(t[THRESHOLD_EXACT_FIT], 4);
        assert_eq!(t[THRESHOLD_GATED_UPPER], 16);
        assert_eq!(t[THRESHOLD_L2_CONCENTRATION], (24.0 * (1.0 + 2f64.ln())).ceil() as u64);
        assert_eq!(t[THRESHOLD_NETWORK_WIDTH], 1280);
        let bigger = sample_thresholds(3.0, 10.0, delta, 1.0).unwrap();
        let smaller = sample_thresholds(2.0, 10.0, delta, 1.0).unwrap();
        assert!(bigger.iter().zip(&smaller).all(|((_, a), (_, b))| a >= b));
        assert!(sample_thresholds(2.0, 10.0, 1.5, 1.0).is_err());
    }

    #[test]
    fn tighter_factor_is_scale_invariant() {
        let ds = data(8, 2, 9);
        let ps = enumerate_patterns(&ds).unwrap();
        let a = bound_tighter_factor(&ds, &ps, None).unwrap().unwrap();
        let scaled = ds.with_labels(ds.y() * 3.0).unwrap().with_beta(0.3).unwrap();
        let b = bound_tighter_factor(&scaled, &ps, None).unwrap().unwrap();
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn tighter_factor_for_top_eigenvector() {
        // single all-ones pattern: M_P = X X^T and y its top eigenvector, so
        // y^T M_P y = mu ||y||^2 and y^T M_P^-1 y = ||y||^2 / mu
        let x = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, -0.3, 1.0]);
        let gram = &x * x.transpose();
        let eig = gram.clone().symmetric_eigen();
        let k = eig.eigenvalues.imax();
        let y = eig.eigenvectors.column(k).into_owned();
        let mu = eig.eigenvalues[k];
        let beta = 0.1;
        let ds = Dataset::new(x, y.clone(), beta).unwrap();
        let ps = PatternSet::from_patterns([Pattern::ones(2)], Provenance::Explicit);
        let f = bound_tighter_factor(&ds, &ps, None).unwrap().unwrap();
        let g = 1.0 - beta / (2.0 * mu.sqrt());
        let expected = SQRT_2 / g * mu.sqrt() * (1.0 / mu).sqrt();
        assert!((f - expected).abs() < 1e-8 * expected);
    }

    #[test]
    fn permutation_invariance() {
        let ds = data(7, 2, 10);
        let perm = [3, 0, 6, 1, 5, 2, 4];
        let pd = ds.permute_rows(&perm).unwrap();
        let (a, b) = (compute_kappa(&ds).unwrap(), compute_kappa(&pd).unwrap());
        assert!((a - b).abs() < 1e-10 * a);
        assert!((bound_maxcut(&ds).unwrap() - bound_maxcut(&pd).unwrap()).abs() < 1e-10);
    }
}
