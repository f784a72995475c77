//! Experiment configuration and the end-to-end runs behind the CLI.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::arrangements::{
    enumerate_patterns, sample_patterns, PatternSet, ENUMERATION_MAX_D, ENUMERATION_MAX_N,
};
use crate::bounds::{approximation_factor, bound_report, bound_upper_gated, DEFAULT_DELTA};
use crate::dataset::{generate_dataset, load_dataset, Dataset, LabelMode, SolverConfig};
use crate::error::{Error, Result};
use crate::network::{convex_to_network, init_network, network_loss, train_gd, NetworkParams, TrainConfig, TrainTrace};
use crate::report::{maybe, BoundReport};
use crate::solvers::{solve_cone_from, solve_gated_from, ConeSolution, GatedSolution};

/// Where the dataset comes from: a file, or generated from these settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub n: usize,
    pub d: usize,
    pub beta: f64,
    pub labels: LabelMode,
    /// Load this dataset file instead of generating; `n`, `d` are then ignored.
    pub path: Option<PathBuf>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { n: 300, d: 10, beta: 0.1, labels: LabelMode::RandomGaussian, path: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WidthSweepConfig {
    pub betas: Vec<f64>,
    pub grid: Vec<usize>,
    /// Also solve the cone-constrained relaxation at every cell.
    pub include_cone: bool,
}

impl Default for WidthSweepConfig {
    fn default() -> Self {
        Self { betas: vec![10.0, 20.0, 40.0], grid: vec![1, 2, 5, 10, 20, 30, 50, 100], include_cone: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Network width; `ceil(m/2)` patterns are sampled.
    pub m: usize,
    /// Record wall time in the report (makes reruns differ in that field).
    pub record_timing: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { m: 20, record_timing: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// Network width.
    pub m: usize,
    pub train: TrainConfig,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self { m: 100, train: TrainConfig::default() }
    }
}

/// How the `sample` and solve commands build their pattern set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternMode {
    Sampled,
    Enumerated,
    Paired,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatternConfig {
    pub mode: PatternMode,
    pub count: usize,
}

impl Default for PatternConfig {
    fn default() -> Self {
        Self { mode: PatternMode::Sampled, count: 30 }
    }
}

/// Full parameter set of every command. Missing fields take the defaults
/// documented on each section; `delta` defaults to 0.1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Worker threads for seed-indexed trials.
    pub jobs: usize,
    pub delta: f64,
    pub dataset: DatasetConfig,
    pub patterns: PatternConfig,
    pub solver: SolverConfig,
    pub cone_solver: SolverConfig,
    pub width_sweep: WidthSweepConfig,
    pub pipeline: PipelineConfig,
    pub network: NetworkConfig,
    pub verify: crate::verify::VerifyConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            jobs: 1,
            delta: DEFAULT_DELTA,
            dataset: DatasetConfig::default(),
            patterns: PatternConfig::default(),
            solver: SolverConfig::default(),
            cone_solver: SolverConfig::cone_default(),
            width_sweep: WidthSweepConfig::default(),
            pipeline: PipelineConfig::default(),
            network: NetworkConfig::default(),
            verify: crate::verify::VerifyConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        self.cone_solver.validate()?;
        self.verify.validate()?;
        if self.jobs == 0 {
            return Err(Error::InvalidInput("jobs must be >= 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.dataset.path.is_none() && (self.dataset.n == 0 || self.dataset.d == 0) {
            return Err(Error::InvalidInput("dataset n and d must be >= 1".into()));
        }
        if !(self.dataset.beta >= 0.0) {
            return Err(Error::InvalidInput("beta must be >= 0".into()));
        }
        if self.width_sweep.grid.is_empty() || self.width_sweep.grid.contains(&0) {
            return Err(Error::InvalidInput("width grid needs positive entries".into()));
        }
        if self.width_sweep.betas.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::InvalidInput("width sweep betas must be positive".into()));
        }
        if self.pipeline.m < 2 {
            return Err(Error::InvalidInput("pipeline width must be >= 2".into()));
        }
        if self.network.m == 0 || self.patterns.count == 0 {
            return Err(Error::InvalidInput("widths and pattern counts must be >= 1".into()));
        }
        Ok(())
    }

    /// The configured dataset: loaded from `dataset.path`, else generated with `seed`.
    pub fn dataset(&self) -> Result<Dataset> {
        match &self.dataset.path {
            Some(path) => load_dataset(path),
            None => generate_dataset(self.dataset.n, self.dataset.d, self.dataset.beta, &self.dataset.labels, self.seed),
        }
    }

    pub fn pattern_set(&self, ds: &Dataset) -> Result<PatternSet> {
        match self.patterns.mode {
            PatternMode::Sampled => sample_patterns(ds, self.patterns.count, self.seed),
            PatternMode::Enumerated => enumerate_patterns(ds),
            PatternMode::Paired => Ok(crate::arrangements::paired_patterns(ds)?.pattern_set()),
        }
    }
}

/// One cell of the width sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WidthSweepRow {
    /// Requested pattern count.
    pub p_tilde: usize,
    /// Distinct patterns actually used.
    pub patterns: usize,
    pub beta: f64,
    pub gated_objective: f64,
    pub gated_certified: bool,
    #[serde(with = "maybe")]
    pub cone_objective: Option<f64>,
    pub cone_certified: Option<bool>,
}

impl WidthSweepRow {
    pub fn certified(&self) -> bool {
        self.gated_certified && self.cone_certified.unwrap_or(true)
    }
}

fn pad<T: Clone>(prev: &[T], len: usize, zero: T) -> Vec<T> {
    let mut v = prev.to_vec();
    v.resize(len, zero);
    v
}

/// Optimal values along a nested pattern grid for each `beta`.
///
/// Patterns are sampled once at the largest grid size and every smaller
/// cell uses a prefix, so the sets are nested; each solve is warm-started
/// from the previous cell.
pub fn width_sweep(ds: &Dataset, cfg: &WidthSweepConfig, seed: u64, solver: &SolverConfig, cone: &SolverConfig) -> Result<Vec<WidthSweepRow>> {
    let mut grid = cfg.grid.clone();
    grid.sort_unstable();
    grid.dedup();
    let largest = *grid.last().ok_or_else(|| Error::InvalidInput("empty width grid".into()))?;
    let all = sample_patterns(ds, largest, seed)?;
    let d = ds.d();
    let mut rows = Vec::new();
    for &beta in &cfg.betas {
        let dsb = ds.with_beta(beta)?;
        let mut gated_prev: Vec<DVector<f64>> = Vec::new();
        let mut cone_prev: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();
        for &k in &grid {
            let ps = all.prefix(k);
            let init = pad(&gated_prev, ps.len(), DVector::zeros(d));
            let g = solve_gated_from(&dsb, &ps, solver, Some(&init))?;
            gated_prev = g.weights.clone();
            let (cone_objective, cone_certified) = if cfg.include_cone {
                let init = pad(&cone_prev, ps.len(), (DVector::zeros(d), DVector::zeros(d)));
                let c = solve_cone_from(&dsb, &ps, cone, Some(&init))?;
                cone_prev = c.pairs.clone();
                (Some(c.objective), Some(c.certified))
            } else {
                (None, None)
            };
            rows.push(WidthSweepRow {
                p_tilde: k,
                patterns: ps.len(),
                beta,
                gated_objective: g.objective,
                gated_certified: g.certified,
                cone_objective,
                cone_certified,
            });
        }
    }
    Ok(rows)
}

pub fn width_sweep_csv(rows: &[WidthSweepRow]) -> String {
    let mut out = String::from("p_tilde,patterns,beta,gated_objective,gated_certified,cone_objective,cone_certified\n");
    for r in rows {
        let cone = r.cone_objective.map_or(String::new(), |v| v.to_string());
        let cert = r.cone_certified.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.p_tilde, r.patterns, r.beta, r.gated_objective, r.gated_certified, cone, cert
        );
    }
    out
}

/// Whether the gated objectives are nonincreasing along the grid for every
/// `beta`, allowing `rel_slack` relative solver slack.
pub fn sweep_is_monotone(rows: &[WidthSweepRow], rel_slack: f64) -> bool {
    rows.windows(2)
        .filter(|w| w[0].beta == w[1].beta)
        .all(|w| w[1].gated_objective <= w[0].gated_objective * (1.0 + rel_slack))
}

/// Result of the sample-solve-map pipeline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineReport {
    pub m: usize,
    pub patterns: usize,
    pub convex_objective: f64,
    pub network_loss: f64,
    pub neurons: usize,
    pub certified: bool,
    pub kkt_residual: f64,
    pub cone_violation: f64,
    /// Upper bound on the sampled gated optimum.
    #[serde(with = "maybe")]
    pub upper_gated: Option<f64>,
    /// Guaranteed ratio between the network loss and the full optimum.
    pub approximation_factor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
}

/// Samples `ceil(m/2)` patterns, solves the cone-constrained relaxation and
/// maps the solution to a network of at most `m` neurons.
pub fn train_pipeline(
    ds: &Dataset,
    m: usize,
    seed: u64,
    cone: &SolverConfig,
    record_timing: bool,
) -> Result<(PipelineReport, ConeSolution, NetworkParams)> {
    if m < 2 {
        return Err(Error::InvalidInput("pipeline width must be >= 2".into()));
    }
    let start = Instant::now();
    let ps = sample_patterns(ds, m.div_ceil(2), seed)?;
    let sol = solve_cone_from(ds, &ps, cone, None)?;
    let net = convex_to_network(ds, &sol, &ps)?;
    let loss = network_loss(ds, &net)?;
    let report = PipelineReport {
        m,
        patterns: ps.len(),
        convex_objective: sol.objective,
        network_loss: loss,
        neurons: net.m(),
        certified: sol.certified,
        kkt_residual: sol.kkt_residual,
        cone_violation: sol.cone_violation,
        upper_gated: bound_upper_gated(ds),
        approximation_factor: approximation_factor(ds.n() as f64, ds.c()),
        wall_time_seconds: record_timing.then(|| start.elapsed().as_secs_f64()),
    };
    Ok((report, sol, net))
}

/// Gradient descent from a seeded `N(0, 1/m)` initialization.
pub fn drift_experiment(ds: &Dataset, net: &NetworkConfig, seed: u64) -> Result<(TrainTrace, NetworkParams)> {
    let p0 = init_network(net.m, ds.d(), seed)?;
    train_gd(ds, &p0, &net.train)
}

/// Bound report, with `G` from the full enumeration when the instance is
/// small enough and from `sampled` otherwise.
pub fn bounds_for(ds: &Dataset, sampled: &PatternSet, delta: f64) -> Result<BoundReport> {
    if ds.n() <= ENUMERATION_MAX_N && ds.d() <= ENUMERATION_MAX_D {
        let all = enumerate_patterns(ds)?;
        bound_report(ds, Some(sampled), &all, delta)
    } else {
        bound_report(ds, Some(sampled), sampled, delta)
    }
}

/// Convenience for the gated solve on a configured pattern set.
pub fn solve_gated_configured(ds: &Dataset, ps: &PatternSet, cfg: &SolverConfig) -> Result<GatedSolution> {
    solve_gated_from(ds, ps, cfg, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Dataset {
        generate_dataset(12, 3, 0.5, &LabelMode::RandomGaussian, 1).unwrap()
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        assert!(ExperimentConfig::from_json("{\"jobs\": 0}").is_err());
        assert!(ExperimentConfig::from_json("{\"unknown\": 1}").is_err());
        let partial = ExperimentConfig::from_json("{\"seed\": 5}").unwrap();
        assert_eq!(partial.seed, 5);
        assert_eq!(partial.delta, 0.1);
    }

    #[test]
    fn single_point_grid_gives_one_row_per_beta() {
        let cfg = WidthSweepConfig { betas: vec![0.5], grid: vec![4], include_cone: false };
        let rows = width_sweep(&small(), &cfg, 0, &SolverConfig::default(), &SolverConfig::cone_default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(width_sweep_csv(&rows).lines().count(), 2);
    }

    #[test]
    fn sweep_is_nonincreasing() {
        let cfg = WidthSweepConfig { betas: vec![0.2, 1.0], grid: vec![1, 2, 4, 8], include_cone: true };
        let rows = width_sweep(&small(), &cfg, 3, &SolverConfig::default(), &SolverConfig::cone_default()).unwrap();
        assert!(rows.iter().all(WidthSweepRow::certified));
        assert!(sweep_is_monotone(&rows, 1e-7));
        for r in &rows {
            assert!(r.cone_objective.unwrap() >= r.gated_objective * (1.0 - 1e-6));
        }
    }

    #[test]
    fn pipeline_identity_and_determinism() {
        let ds = small();
        let (a, sol, _) = train_pipeline(&ds, 8, 2, &SolverConfig::cone_default(), false).unwrap();
        assert!((a.network_loss - a.convex_objective).abs() <= 1e-8 * a.convex_objective);
        assert!(sol.certified);
        let (b, _, _) = train_pipeline(&ds, 8, 2, &SolverConfig::cone_default(), false).unwrap();
        assert_eq!(a, b);
    }
}
