//! Datasets, seeded randomness and the plain-text dataset format.
//!
//! The text format is comma separated: a header line `n,d,beta`, then `n`
//! rows of `d` feature values, then one line holding the `n` labels. Floats
//! are written with Rust's shortest round-trip representation so a saved
//! dataset reloads bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{self, NetworkParams};

/// Independent random streams derived from one user seed.
///
/// Every randomized routine asks for its own stream so that adding draws to
/// one stage never shifts the numbers seen by another.
pub mod stream {
    pub const FEATURES: u64 = 1;
    pub const LABELS: u64 = 2;
    pub const PATTERNS: u64 = 3;
    pub const NETWORK_INIT: u64 = 4;
    pub const TEACHER: u64 = 5;
    pub const MONTE_CARLO: u64 = 6;
    pub const LAMBDA_CHECK: u64 = 7;
    pub const DIRECTIONS: u64 = 8;
}

/// Seeded generator for `(seed, stream)`. Equal arguments give bit-identical
/// sequences on every platform.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normal_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Row-major fill of an `rows x cols` standard normal matrix.
pub fn standard_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}

/// Training data `(X, y)` together with the weight-decay strength.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    beta: f64,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, beta: f64) -> Result<Self> {
        let (n, d) = x.shape();
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput(format!("empty data matrix {n}x{d}")));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "label vector has length {} but X has {n} rows",
                y.len()
            )));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidInput(format!("beta must be finite and >= 0, got {beta}")));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry in X or y".into()));
        }
        if let Some(i) = (0..n).find(|&i| x.row(i).iter().all(|&v| v == 0.0)) {
            return Err(Error::InvalidInput(format!("row {i} of X is zero")));
        }
        Ok(Self { x, y, beta })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of features.
    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// The sample-to-dimension ratio `n / d`, always recomputed.
    pub fn c(&self) -> f64 {
        self.n() as f64 / self.d() as f64
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.x.clone(), self.y.clone(), beta)
    }

    pub fn with_labels(&self, y: DVector<f64>) -> Result<Self> {
        Self::new(self.x.clone(), y, self.beta)
    }

    /// Reorders samples jointly: row `k` of the result is row `perm[k]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidInput("not a permutation of the sample indices".into()));
        }
        let x = DMatrix::from_fn(n, self.d(), |i, j| self.x[(perm[i], j)]);
        let y = DVector::from_fn(n, |i, _| self.y[perm[i]]);
        Self::new(x, y, self.beta)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{},{},{}", self.n(), self.d(), self.beta);
        for i in 0..self.n() {
            let row: Vec<String> = self.x.row(i).iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        let labels: Vec<String> = self.y.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", labels.join(","));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty dataset file".into()))?;
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("header must be `n,d,beta`, got `{header}`")));
        }
        let n: usize = fields[0].parse().map_err(|_| Error::Parse(format!("bad n `{}`", fields[0])))?;
        let d: usize = fields[1].parse().map_err(|_| Error::Parse(format!("bad d `{}`", fields[1])))?;
        let beta: f64 = fields[2].parse().map_err(|_| Error::Parse(format!("bad beta `{}`", fields[2])))?;

        let rows: Vec<Vec<f64>> = lines.map(parse_row).collect::<Result<_>>()?;
        if rows.len() != n + 1 {
            return Err(Error::DimensionMismatch(format!(
                "header declares {n} rows plus a label line, found {} data lines",
                rows.len()
            )));
        }
        let mut x = DMatrix::zeros(n, d);
        for (i, row) in rows[..n].iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {d}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                x[(i, j)] = v;
            }
        }
        let labels = &rows[n];
        if labels.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "label line has {} entries, expected {n}",
                labels.len()
            )));
        }
        Self::new(x, DVector::from_column_slice(labels), beta)
    }
}

fn parse_row(line: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number `{}`", t.trim())))
        })
        .collect()
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, ds.to_text())?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    Dataset::from_text(&fs::read_to_string(path)?)
}

/// How labels are produced by [`generate_dataset`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum LabelMode {
    /// `y ~ N(0, I_n)`, independent of `X`.
    RandomGaussian,
    /// Output of a random teacher ReLU network with `hidden` units, see
    /// [`planted_teacher`].
    PlantedNetwork { hidden: usize },
    /// `n` labels read from a file, comma or whitespace separated.
    File { path: PathBuf },
}

/// Teacher network used by [`LabelMode::PlantedNetwork`] for this seed.
pub fn planted_teacher(d: usize, hidden: usize, seed: u64) -> Result<NetworkParams> {
    let mut rng = rng_stream(seed, stream::TEACHER);
    let weights = standard_normal_matrix(&mut rng, d, hidden);
    let alphas = standard_normal_vector(&mut rng, hidden);
    NetworkParams::new(weights, alphas)
}

/// Draws `X` with i.i.d. standard normal entries and labels per `labels`.
///
/// Zero rows (a probability-zero event) are redrawn so the result always has
/// well-defined activation patterns.
pub fn generate_dataset(n: usize, d: usize, beta: f64, labels: &LabelMode, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput(format!("n and d must be >= 1, got {n}x{d}")));
    }
    let mut rng = rng_stream(seed, stream::FEATURES);
    let mut x = standard_normal_matrix(&mut rng, n, d);
    for i in 0..n {
        while x.row(i).iter().all(|&v| v == 0.0) {
            for j in 0..d {
                x[(i, j)] = rng.sample(StandardNormal);
            }
        }
    }
    let y = match labels {
        LabelMode::RandomGaussian => standard_normal_vector(&mut rng_stream(seed, stream::LABELS), n),
        LabelMode::PlantedNetwork { hidden } => {
            if *hidden == 0 {
                return Err(Error::InvalidInput("planted network needs at least one unit".into()));
            }
            network::predict(&x, &planted_teacher(d, *hidden, seed)?)
        }
        LabelMode::File { path } => load_labels(path, n)?,
    };
    Dataset::new(x, y, beta)
}

fn load_labels(path: &Path, n: usize) -> Result<DVector<f64>> {
    let text = fs::read_to_string(path)?;
    let values: Vec<f64> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad label `{t}`"))))
        .collect::<Result<_>>()?;
    if values.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "label file holds {} values, expected {n}",
            values.len()
        )));
    }
    Ok(DVector::from_vec(values))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Step `1/L` from the exact Lipschitz constant of the smooth part.
    Fixed,
    /// Start from an optimistic step and halve until sufficient decrease.
    Backtracking,
}

/// Numeric settings shared by the iterative solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol_kkt: f64,
    pub max_iters: usize,
    pub step_rule: StepRule,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(tol_kkt: f64, max_iters: usize, step_rule: StepRule, seed: u64) -> Result<Self> {
        let cfg = Self { tol_kkt, max_iters, step_rule, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_kkt > 0.0 && self.tol_kkt.is_finite()) {
            return Err(Error::InvalidInput(format!("tol_kkt must be > 0, got {}", self.tol_kkt)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be >= 1".into()));
        }
        Ok(())
    }

    /// Defaults for the cone-constrained solver (combined tolerance `1e-6`).
    pub fn cone_default() -> Self {
        Self { tol_kkt: 1e-6, ..Self::default() }
    }

    pub fn with_tol(mut self, tol_kkt: f64) -> Self {
        self.tol_kkt = tol_kkt;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol_kkt: 1e-8, max_iters: 200_000, step_rule: StepRule::Fixed, seed: 0 }
    }
}
