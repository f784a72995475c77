//! The two-layer ReLU network `x -> sum_j (x . u_j)_+ alpha_j` with weight
//! decay: loss, gradient descent, activation drift and the mapping to and
//! from the convex relaxation.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::arrangements::{Pattern, PatternSet, Provenance};
use crate::dataset::{rng_stream, stream, Dataset};
use crate::error::{Error, Result};
use crate::solvers::ConeSolution;

/// Gradient norm, relative to `1 + loss`, at which training counts as converged.
pub const STATIONARY_TOL: f64 = 1e-6;

/// Loss growth factor over the initial loss that aborts training.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Network parameters: column `j` of `weights` is `u_j`, `alphas[j]` its
/// output weight.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkParams {
    weights: DMatrix<f64>,
    alphas: DVector<f64>,
}

impl NetworkParams {
    pub fn new(weights: DMatrix<f64>, alphas: DVector<f64>) -> Result<Self> {
        if weights.ncols() == 0 || weights.nrows() == 0 {
            return Err(Error::InvalidInput("a network needs m >= 1 neurons of dimension d >= 1".into()));
        }
        Self::new_allow_empty(weights, alphas)
    }

    /// A network with no neurons; it predicts zero everywhere.
    pub fn empty(d: usize) -> Self {
        Self { weights: DMatrix::zeros(d, 0), alphas: DVector::zeros(0) }
    }

    fn new_allow_empty(weights: DMatrix<f64>, alphas: DVector<f64>) -> Result<Self> {
        if weights.ncols() != alphas.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} neurons but {} output weights",
                weights.ncols(),
                alphas.len()
            )));
        }
        Ok(Self { weights, alphas })
    }

    pub fn from_neurons(d: usize, neurons: &[(DVector<f64>, f64)]) -> Result<Self> {
        if neurons.iter().any(|(u, _)| u.len() != d) {
            return Err(Error::DimensionMismatch(format!("every neuron needs length {d}")));
        }
        let mut w = DMatrix::zeros(d, neurons.len());
        for (j, (u, _)) in neurons.iter().enumerate() {
            w.set_column(j, u);
        }
        let a = DVector::from_iterator(neurons.len(), neurons.iter().map(|(_, a)| *a));
        Self::new_allow_empty(w, a)
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn alphas(&self) -> &DVector<f64> {
        &self.alphas
    }

    pub fn m(&self) -> usize {
        self.alphas.len()
    }

    pub fn d(&self) -> usize {
        self.weights.nrows()
    }

    /// `sum_j ||u_j||^2 + alpha_j^2`.
    pub fn squared_norm(&self) -> f64 {
        self.weights.norm_squared() + self.alphas.norm_squared()
    }

    /// Largest `| ||u_j|| - |alpha_j| |` over the neurons.
    pub fn imbalance(&self) -> f64 {
        self.weights
            .column_iter()
            .zip(self.alphas.iter())
            .map(|(u, a)| (u.norm() - a.abs()).abs())
            .fold(0.0, f64::max)
    }

    /// Text form: a `d,m` header, `d` rows of `m` weights, then the `m`
    /// output weights, comma separated.
    pub fn to_text(&self) -> String {
        let mut out = format!("{},{}\n", self.d(), self.m());
        for row in self.weights.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        let cells: Vec<String> = self.alphas.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", cells.join(","));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty network file".into()))?;
        let dims: Vec<usize> = header
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad header `{header}`"))))
            .collect::<Result<_>>()?;
        let [d, m] = dims[..] else {
            return Err(Error::Parse(format!("header must be `d,m`, got `{header}`")));
        };
        let mut row = |what: &str| -> Result<Vec<f64>> {
            let line = lines.next().ok_or_else(|| Error::DimensionMismatch(format!("missing {what}")))?;
            if m == 0 {
                return Ok(Vec::new());
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad number `{t}`"))))
                .collect::<Result<_>>()?;
            if vals.len() != m {
                return Err(Error::DimensionMismatch(format!("{what} has {} entries, expected {m}", vals.len())));
            }
            Ok(vals)
        };
        let mut w = DMatrix::zeros(d, m);
        for i in 0..d {
            let vals = row("weight row")?;
            for (j, v) in vals.into_iter().enumerate() {
                w[(i, j)] = v;
            }
        }
        let a = DVector::from_vec(row("output weights")?);
        Self::new_allow_empty(w, a)
    }
}

/// `m` neurons with every entry of `u_j` and every `alpha_j` drawn from
/// `N(0, 1/m)`.
pub fn init_network(m: usize, d: usize, seed: u64) -> Result<NetworkParams> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidInput(format!("need m, d >= 1, got m={m}, d={d}")));
    }
    let mut rng = rng_stream(seed, stream::NETWORK_INIT);
    let normal = Normal::new(0.0, (1.0 / m as f64).sqrt()).expect("positive variance");
    let weights = DMatrix::from_fn(d, m, |_, _| normal.sample(&mut rng));
    let alphas = DVector::from_fn(m, |_, _| normal.sample(&mut rng));
    NetworkParams::new(weights, alphas)
}

/// `sum_j (X u_j)_+ alpha_j`.
pub fn predict(x: &DMatrix<f64>, p: &NetworkParams) -> DVector<f64> {
    let mut h = x * &p.weights;
    h.apply(|v| *v = v.max(0.0));
    h * &p.alphas
}

fn check_dims(ds: &Dataset, p: &NetworkParams) -> Result<()> {
    if p.d() != ds.d() {
        return Err(Error::DimensionMismatch(format!("network has d={}, data has d={}", p.d(), ds.d())));
    }
    Ok(())
}

/// `1/2 ||sum_j (X u_j)_+ alpha_j - y||^2 + beta/2 sum_j (||u_j||^2 + alpha_j^2)`.
pub fn network_loss(ds: &Dataset, p: &NetworkParams) -> Result<f64> {
    check_dims(ds, p)?;
    Ok(loss_unchecked(ds, p))
}

fn loss_unchecked(ds: &Dataset, p: &NetworkParams) -> f64 {
    let r = predict(ds.x(), p) - ds.y();
    0.5 * r.norm_squared() + 0.5 * ds.beta() * p.squared_norm()
}

/// Loss and its gradient with the ReLU derivative taken as 0 at 0:
/// `d/du_j = alpha_j X^T (1[X u_j > 0] (.) r) + beta u_j` and
/// `d/dalpha_j = (X u_j)_+ . r + beta alpha_j`, `r` the residual.
pub fn loss_and_gradient(ds: &Dataset, p: &NetworkParams) -> Result<(f64, NetworkParams)> {
    check_dims(ds, p)?;
    Ok(loss_grad_unchecked(ds, p))
}

fn loss_grad_unchecked(ds: &Dataset, p: &NetworkParams) -> (f64, NetworkParams) {
    let x = ds.x();
    let beta = ds.beta();
    let pre = x * &p.weights;
    let act = pre.map(|v| v.max(0.0));
    let r = &act * &p.alphas - ds.y();
    let loss = 0.5 * r.norm_squared() + 0.5 * beta * p.squared_norm();
    // column j of `gate` is alpha_j 1[X u_j > 0] (.) r
    let mut gate = pre.map(|v| if v > 0.0 { 1.0 } else { 0.0 });
    for (j, mut col) in gate.column_iter_mut().enumerate() {
        col.component_mul_assign(&r);
        col *= p.alphas[j];
    }
    let gw = x.transpose() * gate + &p.weights * beta;
    let ga = act.transpose() * &r + &p.alphas * beta;
    (loss, NetworkParams { weights: gw, alphas: ga })
}

/// Per-neuron activation masks `1[X u_j >= 0]`.
pub fn activation_masks(x: &DMatrix<f64>, p: &NetworkParams) -> Vec<Pattern> {
    let pre = x * &p.weights;
    pre.column_iter().map(|c| Pattern::new(c.iter().map(|&v| v >= 0.0).collect())).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum LearningRate {
    /// Plain steps of fixed size; no descent guarantee.
    Fixed { lr: f64 },
    /// Armijo backtracking from a step that grows after each accepted step.
    Backtracking { initial: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub learning_rate: LearningRate,
    /// Record activation masks every this many steps (first and last always).
    pub snapshot_every: usize,
    /// Stop once the gradient norm falls below `STATIONARY_TOL (1 + loss)`.
    pub stop_when_stationary: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            learning_rate: LearningRate::Backtracking { initial: 1.0 },
            snapshot_every: 100,
            stop_when_stationary: true,
        }
    }
}

/// Record of one gradient-descent run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainTrace {
    /// Loss before step 0 and after every step.
    pub losses: Vec<f64>,
    /// Fraction of changed activation bits relative to step 0, per entry of `losses`.
    pub drift_history: Vec<f64>,
    pub snapshot_steps: Vec<usize>,
    /// Per-neuron masks at each snapshot step.
    pub pattern_snapshots: Vec<Vec<Pattern>>,
    /// Changed bits between first and last snapshot over `m n`.
    pub drift_fraction: f64,
    pub converged: bool,
    pub final_gradient_norm: f64,
}

impl TrainTrace {
    pub fn steps_taken(&self) -> usize {
        self.losses.len().saturating_sub(1)
    }

    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("trace holds the initial loss")
    }

    /// CSV with header `step,loss,drift`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,loss,drift\n");
        for (k, (l, d)) in self.losses.iter().zip(&self.drift_history).enumerate() {
            let _ = writeln!(out, "{k},{l},{d}");
        }
        out
    }
}

fn mask_drift(a: &[Pattern], b: &[Pattern]) -> f64 {
    let bits: usize = a.iter().map(Pattern::len).sum();
    if bits == 0 {
        return 0.0;
    }
    let changed: usize = a.iter().zip(b).map(|(p, q)| p.hamming(q)).sum();
    changed as f64 / bits as f64
}

fn drift_from_pre(pre: &DMatrix<f64>, initial: &DMatrix<bool>) -> f64 {
    let changed = pre.iter().zip(initial.iter()).filter(|(&v, &b)| (v >= 0.0) != b).count();
    changed as f64 / pre.len().max(1) as f64
}

fn axpy(p: &NetworkParams, g: &NetworkParams, step: f64) -> NetworkParams {
    NetworkParams { weights: &p.weights - &g.weights * step, alphas: &p.alphas - &g.alphas * step }
}

/// Full-batch (sub)gradient descent on the network loss.
///
/// With backtracking every accepted step satisfies the Armijo condition, so
/// the recorded losses never increase. Fails with [`Error::Diverged`] once
/// the loss exceeds `DIVERGENCE_FACTOR` times its initial value.
pub fn train_gd(ds: &Dataset, p0: &NetworkParams, cfg: &TrainConfig) -> Result<(TrainTrace, NetworkParams)> {
    check_dims(ds, p0)?;
    let snapshot_every = cfg.snapshot_every.max(1);
    let x = ds.x();
    let mut p = p0.clone();
    let initial_pre = x * &p.weights;
    let initial_bits = initial_pre.map(|v| v >= 0.0);

    let (mut loss, mut grad) = loss_grad_unchecked(ds, &p);
    let initial_loss = loss;
    let mut trace = TrainTrace {
        losses: vec![loss],
        drift_history: vec![0.0],
        snapshot_steps: vec![0],
        pattern_snapshots: vec![activation_masks(x, &p)],
        drift_fraction: 0.0,
        converged: false,
        final_gradient_norm: 0.0,
    };
    let mut step = match cfg.learning_rate {
        LearningRate::Fixed { lr } | LearningRate::Backtracking { initial: lr } => lr,
    };
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!("learning rate must be positive, got {step}")));
    }

    for k in 1..=cfg.steps {
        let gnorm2 = grad.squared_norm();
        if cfg.stop_when_stationary && gnorm2.sqrt() <= STATIONARY_TOL * (1.0 + loss) {
            trace.converged = true;
            break;
        }
        let next = match cfg.learning_rate {
            LearningRate::Fixed { .. } => axpy(&p, &grad, step),
            LearningRate::Backtracking { .. } => {
                let mut accepted = None;
                while step > 1e-20 {
                    let cand = axpy(&p, &grad, step);
                    let trial = loss_unchecked(ds, &cand);
                    // strict decrease: with a tiny step the Armijo bound rounds to `loss`
                    if trial < loss && trial <= loss - 0.5 * step * gnorm2 {
                        accepted = Some(cand);
                        break;
                    }
                    step *= 0.5;
                }
                match accepted {
                    Some(c) => {
                        step *= 2.0;
                        c
                    }
                    // no decrease along the negative gradient: a kink or stationary point
                    None => break,
                }
            }
        };
        p = next;
        (loss, grad) = loss_grad_unchecked(ds, &p);
        let pre = x * &p.weights;
        trace.losses.push(loss);
        trace.drift_history.push(drift_from_pre(&pre, &initial_bits));
        if k % snapshot_every == 0 {
            trace.snapshot_steps.push(k);
            trace.pattern_snapshots.push(activation_masks(x, &p));
        }
        if !loss.is_finite() || loss > DIVERGENCE_FACTOR * initial_loss.max(f64::MIN_POSITIVE) {
            trace.final_gradient_norm = grad.squared_norm().sqrt();
            return Err(Error::Diverged { step: k, loss, trace: Box::new(trace) });
        }
    }
    let last = trace.steps_taken();
    if *trace.snapshot_steps.last().expect("initial snapshot") != last || last == 0 {
        trace.snapshot_steps.push(last);
        trace.pattern_snapshots.push(activation_masks(x, &p));
    }
    trace.final_gradient_norm = grad.squared_norm().sqrt();
    if !trace.converged && trace.final_gradient_norm <= STATIONARY_TOL * (1.0 + loss) {
        trace.converged = true;
    }
    trace.drift_fraction = pattern_drift(&trace)?;
    Ok((trace, p))
}

/// Fraction of (neuron, sample) activation bits that differ between the
/// first and the last snapshot.
pub fn pattern_drift(trace: &TrainTrace) -> Result<f64> {
    match (trace.pattern_snapshots.first(), trace.pattern_snapshots.last()) {
        (Some(first), Some(last)) if trace.pattern_snapshots.len() >= 2 => Ok(mask_drift(first, last)),
        _ => Err(Error::InvalidInput("drift needs at least two snapshots".into())),
    }
}

/// Balanced network with the same objective as a cone-feasible solution:
/// `u_i -> (u_i/sqrt||u_i||, sqrt||u_i||)` and `v_i -> (v_i/sqrt||v_i||, -sqrt||v_i||)`.
/// Zero blocks emit no neuron, so the result may be empty.
pub fn convex_to_network(ds: &Dataset, sol: &ConeSolution, ps: &PatternSet) -> Result<NetworkParams> {
    if sol.pairs.len() != ps.len() {
        return Err(Error::DimensionMismatch(format!("{} pairs for {} patterns", sol.pairs.len(), ps.len())));
    }
    let violation = crate::solvers::cone_violation(ds, ps, &sol.pairs);
    if violation > sol.feasibility_tolerance(ds.x()) {
        return Err(Error::Precondition(format!("cone violation {violation:e} is above tolerance")));
    }
    let mut neurons = Vec::new();
    for (u, v) in &sol.pairs {
        for (z, sign) in [(u, 1.0), (v, -1.0)] {
            let nrm = z.norm();
            if nrm > 0.0 {
                let s = nrm.sqrt();
                neurons.push((z / s, sign * s));
            }
        }
    }
    NetworkParams::from_neurons(ds.d(), &neurons)
}

/// Deduplicated activation masks of the neurons.
pub fn network_to_convex_patterns(p: &NetworkParams, ds: &Dataset) -> Result<PatternSet> {
    check_dims(ds, p)?;
    Ok(PatternSet::from_patterns(activation_masks(ds.x(), p), Provenance::Explicit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangements::sample_patterns;
    use crate::dataset::{generate_dataset, LabelMode, SolverConfig};
    use crate::solvers::solve_cone_constrained;

    fn data(n: usize, d: usize, beta: f64, seed: u64) -> Dataset {
        generate_dataset(n, d, beta, &LabelMode::RandomGaussian, seed).unwrap()
    }

    #[test]
    fn zero_params_loss() {
        let ds = data(5, 3, 0.1, 0);
        let p = NetworkParams::new(DMatrix::zeros(3, 2), DVector::zeros(2)).unwrap();
        assert_eq!(network_loss(&ds, &p).unwrap(), 0.5 * ds.y().norm_squared());
    }

    #[test]
    fn init_is_seeded_with_variance_one_over_m() {
        let a = init_network(100, 100, 3).unwrap();
        assert_eq!(a, init_network(100, 100, 3).unwrap());
        let m = 100.0;
        let vals: Vec<f64> = a.weights().iter().copied().collect();
        let k = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / k;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        // standard error of the sample variance of a normal: sigma^2 sqrt(2/(k-1))
        assert!((var - 1.0 / m).abs() <= 5.0 * (1.0 / m) * (2.0 / (k - 1.0)).sqrt(), "{var}");
    }

    #[test]
    fn gradient_matches_central_differences() {
        let ds = data(8, 3, 0.3, 1);
        let p = init_network(4, 3, 2).unwrap();
        let (_, g) = loss_and_gradient(&ds, &p).unwrap();
        let h = 1e-6;
        let pre = ds.x() * p.weights();
        assert!(pre.iter().all(|v| v.abs() > 1e-4), "instance sits on an activation boundary");
        for k in 0..p.weights.len() {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus.weights[k] += h;
            minus.weights[k] -= h;
            let fd = (network_loss(&ds, &plus).unwrap() - network_loss(&ds, &minus).unwrap()) / (2.0 * h);
            assert!((fd - g.weights[k]).abs() <= 1e-5 * g.weights[k].abs().max(1.0));
        }
        for j in 0..p.m() {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus.alphas[j] += h;
            minus.alphas[j] -= h;
            let fd = (network_loss(&ds, &plus).unwrap() - network_loss(&ds, &minus).unwrap()) / (2.0 * h);
            assert!((fd - g.alphas[j]).abs() <= 1e-5 * g.alphas[j].abs().max(1.0));
        }
    }

    #[test]
    fn zero_labels_shrink_to_origin() {
        let ds = data(10, 3, 0.5, 2);
        let ds = ds.with_labels(DVector::zeros(10)).unwrap();
        let p0 = init_network(5, 3, 1).unwrap();
        let cfg = TrainConfig { steps: 500, ..TrainConfig::default() };
        let (trace, p) = train_gd(&ds, &p0, &cfg).unwrap();
        assert!(trace.losses.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(p.squared_norm() < p0.squared_norm());
        assert!(trace.final_loss() < 1e-3 * trace.losses[0]);
    }

    #[test]
    fn one_dimensional_stationary_point() {
        // x = 1, y = 1: with u = alpha = t > 0 the loss is 1/2 (t^2 - 1)^2 + beta t^2,
        // stationary at t^2 = 1 - beta
        let beta = 0.1;
        let ds = Dataset::new(DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, 1.0), beta).unwrap();
        let p0 = NetworkParams::new(DMatrix::from_element(1, 1, 0.5), DVector::from_element(1, 0.5)).unwrap();
        let cfg = TrainConfig { steps: 10_000, ..TrainConfig::default() };
        let (trace, p) = train_gd(&ds, &p0, &cfg).unwrap();
        assert!(trace.converged);
        let t = (1.0 - beta).sqrt();
        assert!((p.weights()[(0, 0)] - t).abs() < 1e-6);
        assert!((p.alphas()[0] - t).abs() < 1e-6);
    }

    #[test]
    fn drift_counts_changed_bits() {
        let a = vec![Pattern::parse("101").unwrap(), Pattern::parse("000").unwrap()];
        let b = vec![Pattern::parse("010").unwrap(), Pattern::parse("000").unwrap()];
        let trace = TrainTrace {
            losses: vec![0.0],
            drift_history: vec![0.0],
            snapshot_steps: vec![0, 1],
            pattern_snapshots: vec![a.clone(), b],
            drift_fraction: 0.0,
            converged: false,
            final_gradient_norm: 0.0,
        };
        assert_eq!(pattern_drift(&trace).unwrap(), 3.0 / 6.0);
        let single = TrainTrace { pattern_snapshots: vec![a], ..trace };
        assert!(pattern_drift(&single).is_err());
    }

    #[test]
    fn zero_steps_zero_drift() {
        let ds = data(6, 2, 0.1, 3);
        let p0 = init_network(3, 2, 0).unwrap();
        let cfg = TrainConfig { steps: 0, ..TrainConfig::default() };
        let (trace, _) = train_gd(&ds, &p0, &cfg).unwrap();
        assert_eq!(trace.drift_fraction, 0.0);
    }

    #[test]
    fn fixed_step_divergence_is_reported() {
        let ds = data(20, 3, 0.0, 4);
        let p0 = init_network(4, 3, 0).unwrap();
        let cfg = TrainConfig { steps: 200, learning_rate: LearningRate::Fixed { lr: 10.0 }, ..TrainConfig::default() };
        assert!(matches!(train_gd(&ds, &p0, &cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn mapping_preserves_objective_and_balances() {
        let ds = data(6, 2, 0.1, 5);
        let ps = sample_patterns(&ds, 3, 1).unwrap();
        let sol = solve_cone_constrained(&ds, &ps, &SolverConfig::cone_default()).unwrap();
        let net = convex_to_network(&ds, &sol, &ps).unwrap();
        let loss = network_loss(&ds, &net).unwrap();
        assert!((loss - sol.objective).abs() <= 1e-8 * sol.objective);
        assert!(net.imbalance() < 1e-12);
    }

    #[test]
    fn mapping_of_zero_solution_is_empty() {
        let ds = data(4, 2, 0.1, 6);
        let ps = sample_patterns(&ds, 2, 1).unwrap();
        let sol = ConeSolution {
            pairs: vec![(DVector::zeros(2), DVector::zeros(2)); ps.len()],
            objective: 0.5 * ds.y().norm_squared(),
            kkt_residual: 0.0,
            cone_violation: 0.0,
            iterations: 0,
            certified: true,
        };
        let net = convex_to_network(&ds, &sol, &ps).unwrap();
        assert_eq!(net.m(), 0);
        assert_eq!(network_loss(&ds, &net).unwrap(), sol.objective);
    }

    #[test]
    fn mapping_refuses_infeasible_pairs() {
        let ds = data(6, 2, 0.1, 7);
        let ps = sample_patterns(&ds, 1, 1).unwrap();
        let u = -crate::arrangements::realizing_direction(&ds, &ps.patterns()[0]).unwrap();
        let sol = ConeSolution {
            pairs: vec![(u, DVector::zeros(2))],
            objective: 0.0,
            kkt_residual: 0.0,
            cone_violation: 0.0,
            iterations: 0,
            certified: true,
        };
        assert!(matches!(convex_to_network(&ds, &sol, &ps), Err(Error::Precondition(_))));
    }

    #[test]
    fn induced_patterns() {
        let ds = data(7, 3, 0.1, 8);
        let u = DVector::from_vec(vec![0.3, -1.0, 0.5]);
        let same = NetworkParams::from_neurons(3, &[(u.clone(), 1.0), (u.clone(), -2.0)]).unwrap();
        assert_eq!(network_to_convex_patterns(&same, &ds).unwrap().len(), 1);
        let opposite = NetworkParams::from_neurons(3, &[(u.clone(), 1.0), (-u, 1.0)]).unwrap();
        let ps = network_to_convex_patterns(&opposite, &ds).unwrap();
        let (a, b) = (&ps.patterns()[0], &ps.patterns()[1]);
        assert_eq!(a.hamming(b), 7);
    }

    #[test]
    fn text_round_trip() {
        let p = init_network(3, 2, 9).unwrap();
        assert_eq!(NetworkParams::from_text(&p.to_text()).unwrap(), p);
        let e = NetworkParams::empty(2);
        assert_eq!(NetworkParams::from_text(&e.to_text()).unwrap(), e);
    }

    #[test]
    fn trace_csv_has_one_row_per_step() {
        let ds = data(6, 2, 0.1, 3);
        let p0 = init_network(3, 2, 0).unwrap();
        let cfg = TrainConfig { steps: 5, stop_when_stationary: false, ..TrainConfig::default() };
        let (trace, _) = train_gd(&ds, &p0, &cfg).unwrap();
        assert_eq!(trace.to_csv().lines().count(), 1 + trace.losses.len());
    }
}
