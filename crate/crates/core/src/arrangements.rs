//! Hyperplane arrangement patterns `D = diag(1[X g >= 0])`: sampling,
//! exhaustive enumeration and the single-hyperplane paired construction.

use std::collections::HashSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{rng_stream, standard_normal_vector, stream, Dataset};
use crate::error::{Error, Result};
use crate::linalg::least_distance;

/// Margin used by the strict realizability test, relative to row norms.
pub const REALIZABILITY_EPS: f64 = 1e-9;

/// Largest instance accepted by [`enumerate_patterns`].
pub const ENUMERATION_MAX_N: usize = 20;
pub const ENUMERATION_MAX_D: usize = 6;

/// Draw budget per requested pattern in [`sample_patterns`].
pub const RETRY_FACTOR: usize = 50;

/// Activation mask over the samples; bit `i` is set iff sample `i` is active.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern(Vec<bool>);

impl Pattern {
    pub fn new(mask: Vec<bool>) -> Self {
        Self(mask)
    }

    /// `1[X g >= 0]`, ties counted as active.
    pub fn from_direction(x: &DMatrix<f64>, g: &DVector<f64>) -> Self {
        let xg = x * g;
        Self(xg.iter().map(|&v| v >= 0.0).collect())
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![true; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mask(&self) -> &[bool] {
        &self.0
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn count_active(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Diagonal of `D` as a 0/1 vector.
    pub fn indicator(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.0.iter().map(|&b| if b { 1.0 } else { 0.0 }))
    }

    /// Diagonal of `2D - I` as a +-1 vector.
    pub fn signs(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.0.iter().map(|&b| if b { 1.0 } else { -1.0 }))
    }

    /// `(2D - I) X`: the cone `K_D` is `{u : cone_matrix * u >= 0}`.
    pub fn cone_matrix(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = x.clone();
        for (i, &b) in self.0.iter().enumerate() {
            if !b {
                g.row_mut(i).neg_mut();
            }
        }
        g
    }

    /// `D X`.
    pub fn gate(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = x.clone();
        for (i, &b) in self.0.iter().enumerate() {
            if !b {
                g.row_mut(i).fill(0.0);
            }
        }
        g
    }

    /// Number of positions where the masks differ.
    pub fn hamming(&self, other: &Pattern) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub fn parse(bits: &str) -> Result<Self> {
        bits.trim()
            .chars()
            .map(|ch| match ch {
                '1' => Ok(true),
                '0' => Ok(false),
                other => Err(Error::Parse(format!("pattern bit must be 0 or 1, got `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl Serialize for Pattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Pattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Pattern::parse(&s).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Where a [`PatternSet`] came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    Sampled { seed: u64, requested: usize },
    Enumerated,
    Paired,
    Explicit,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Sampled { seed, requested } => write!(f, "sampled seed={seed} requested={requested}"),
            Provenance::Enumerated => f.write_str("enumerated"),
            Provenance::Paired => f.write_str("paired"),
            Provenance::Explicit => f.write_str("explicit"),
        }
    }
}

/// Ordered collection of distinct patterns.
#[derive(Clone, Debug)]
pub struct PatternSet {
    patterns: Vec<Pattern>,
    seen: HashSet<Pattern>,
    provenance: Provenance,
}

impl PartialEq for PatternSet {
    fn eq(&self, other: &Self) -> bool {
        self.patterns == other.patterns && self.provenance == other.provenance
    }
}

impl PatternSet {
    pub fn empty(provenance: Provenance) -> Self {
        Self { patterns: Vec::new(), seen: HashSet::new(), provenance }
    }

    /// Keeps the first occurrence of every pattern, in order.
    pub fn from_patterns(patterns: impl IntoIterator<Item = Pattern>, provenance: Provenance) -> Self {
        let mut set = Self::empty(provenance);
        for p in patterns {
            set.insert(p);
        }
        set
    }

    /// Returns `false` if the pattern was already present.
    pub fn insert(&mut self, p: Pattern) -> bool {
        if let Some(first) = self.patterns.first() {
            assert_eq!(first.len(), p.len(), "all patterns in a set share the sample count");
        }
        if self.seen.contains(&p) {
            return false;
        }
        self.seen.insert(p.clone());
        self.patterns.push(p);
        true
    }

    pub fn contains(&self, p: &Pattern) -> bool {
        self.seen.contains(p)
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Pattern> {
        self.patterns.iter()
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Sample count shared by the patterns (0 for an empty set).
    pub fn n(&self) -> usize {
        self.patterns.first().map_or(0, Pattern::len)
    }

    /// The first `k` patterns, same provenance.
    pub fn prefix(&self, k: usize) -> Self {
        Self::from_patterns(self.patterns.iter().take(k).cloned(), self.provenance.clone())
    }

    pub fn is_subset_of(&self, other: &PatternSet) -> bool {
        self.patterns.iter().all(|p| other.contains(p))
    }

    /// `n x P` matrix whose column `i` is the 0/1 diagonal of `D_i`.
    pub fn mask_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, self.len());
        for (j, p) in self.patterns.iter().enumerate() {
            for (i, &b) in p.mask().iter().enumerate() {
                if b {
                    m[(i, j)] = 1.0;
                }
            }
        }
        m
    }

    /// Text form: a `# provenance: ...` header then one 0/1 string per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("# provenance: {}\n", self.provenance);
        for p in &self.patterns {
            out.push_str(&p.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty pattern file".into()))?;
        let prov = header
            .strip_prefix("# provenance:")
            .ok_or_else(|| Error::Parse(format!("missing provenance header, got `{header}`")))?
            .trim();
        let provenance = parse_provenance(prov)?;
        let mut set = Self::empty(provenance);
        for line in lines {
            let p = Pattern::parse(line)?;
            if set.n() != 0 && p.len() != set.n() {
                return Err(Error::DimensionMismatch(format!(
                    "pattern `{line}` has length {}, expected {}",
                    p.len(),
                    set.n()
                )));
            }
            set.insert(p);
        }
        Ok(set)
    }
}

impl<'a> IntoIterator for &'a PatternSet {
    type Item = &'a Pattern;
    type IntoIter = std::slice::Iter<'a, Pattern>;

    fn into_iter(self) -> Self::IntoIter {
        self.patterns.iter()
    }
}

fn parse_provenance(text: &str) -> Result<Provenance> {
    let mut parts = text.split_whitespace();
    match parts.next() {
        Some("enumerated") => Ok(Provenance::Enumerated),
        Some("paired") => Ok(Provenance::Paired),
        Some("explicit") => Ok(Provenance::Explicit),
        Some("sampled") => {
            let mut seed = None;
            let mut requested = None;
            for kv in parts {
                match kv.split_once('=') {
                    Some(("seed", v)) => seed = v.parse().ok(),
                    Some(("requested", v)) => requested = v.parse().ok(),
                    _ => return Err(Error::Parse(format!("unknown provenance field `{kv}`"))),
                }
            }
            match (seed, requested) {
                (Some(seed), Some(requested)) => Ok(Provenance::Sampled { seed, requested }),
                _ => Err(Error::Parse("sampled provenance needs seed= and requested=".into())),
            }
        }
        _ => Err(Error::Parse(format!("unknown provenance `{text}`"))),
    }
}

/// Raw i.i.d. Gaussian gate draws `1[X g_k >= 0]`, duplicates kept.
///
/// Shares its random stream with [`sample_patterns`], so the distinct
/// patterns of the first `k` draws are exactly what sampling sees first.
pub fn sample_pattern_draws(ds: &Dataset, draws: usize, seed: u64) -> Vec<Pattern> {
    let mut rng = rng_stream(seed, stream::PATTERNS);
    (0..draws)
        .map(|_| Pattern::from_direction(ds.x(), &standard_normal_vector(&mut rng, ds.d())))
        .collect()
}

/// Up to `count` distinct patterns from Gaussian gates.
///
/// Draws stop after `RETRY_FACTOR * count` attempts; a shorter set is a
/// normal outcome (compare `len()` with the requested count). The sequence is
/// nested: for a fixed seed, a smaller `count` returns a prefix.
pub fn sample_patterns(ds: &Dataset, count: usize, seed: u64) -> Result<PatternSet> {
    if count == 0 {
        return Err(Error::InvalidInput("pattern count must be >= 1".into()));
    }
    let mut rng = rng_stream(seed, stream::PATTERNS);
    let mut set = PatternSet::empty(Provenance::Sampled { seed, requested: count });
    let budget = RETRY_FACTOR.saturating_mul(count);
    let mut draws = 0;
    while set.len() < count && draws < budget {
        let g = standard_normal_vector(&mut rng, ds.d());
        set.insert(Pattern::from_direction(ds.x(), &g));
        draws += 1;
    }
    Ok(set)
}

/// Minimum-norm witness of `(2D - I) X u >= ||x_k||` for all rows, if any.
fn strict_witness(x: &DMatrix<f64>, mask: &[bool]) -> Option<DVector<f64>> {
    let rows = mask.len();
    let mut g = DMatrix::zeros(rows, x.ncols());
    let mut h = DVector::zeros(rows);
    for (k, &active) in mask.iter().enumerate() {
        let sign = if active { 1.0 } else { -1.0 };
        for j in 0..x.ncols() {
            g[(k, j)] = sign * x[(k, j)];
        }
        h[k] = x.row(k).norm();
    }
    least_distance(&g, &h)
}

fn prefix_realizable(x: &DMatrix<f64>, mask: &[bool]) -> bool {
    // a unit vector with margin eps exists iff the margin-1 witness has norm <= 1/eps
    strict_witness(x, mask).is_some_and(|u| u.norm() <= 1.0 / REALIZABILITY_EPS)
}

/// Whether some direction `u` has `1[X u >= 0] = mask` with every sample a
/// strict margin away from its hyperplane.
pub fn is_realizable(ds: &Dataset, pattern: &Pattern) -> bool {
    pattern.len() == ds.n() && prefix_realizable(ds.x(), pattern.mask())
}

/// A direction realizing `pattern`, when one exists.
pub fn realizing_direction(ds: &Dataset, pattern: &Pattern) -> Option<DVector<f64>> {
    if pattern.len() != ds.n() {
        return None;
    }
    strict_witness(ds.x(), pattern.mask()).filter(|u| u.norm() <= 1.0 / REALIZABILITY_EPS)
}

/// Every realizable pattern of the dataset.
///
/// Masks are grown one sample at a time and a prefix is only extended while
/// it stays realizable on the rows seen so far, so the work scales with the
/// number of regions rather than `2^n`.
pub fn enumerate_patterns(ds: &Dataset) -> Result<PatternSet> {
    if ds.n() > ENUMERATION_MAX_N || ds.d() > ENUMERATION_MAX_D {
        return Err(Error::SizeGuard(format!(
            "exhaustive enumeration supports n <= {ENUMERATION_MAX_N}, d <= {ENUMERATION_MAX_D}; got {}x{}",
            ds.n(),
            ds.d()
        )));
    }
    let x = ds.x();
    let mut frontier: Vec<Vec<bool>> = vec![Vec::new()];
    for k in 0..ds.n() {
        let sub = x.rows(0, k + 1).into_owned();
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for prefix in &frontier {
            for bit in [true, false] {
                let mut mask = prefix.clone();
                mask.push(bit);
                if prefix_realizable(&sub, &mask) {
                    next.push(mask);
                }
            }
        }
        frontier = next;
    }
    frontier.sort_by(|a, b| b.cmp(a));
    Ok(PatternSet::from_patterns(frontier.into_iter().map(Pattern), Provenance::Enumerated))
}

/// Exact region count of a central arrangement of `n` hyperplanes in general
/// position in rank-`r` space: `2 * sum_{i<r} C(n-1, i)`.
pub fn central_region_count(n: usize, r: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for i in 0..r.min(n) {
        if i > 0 {
            binom = binom * (n as u128 - i as u128) / i as u128;
        }
        total += binom;
    }
    2 * total
}

/// `n` pairs of patterns, pair `i` differing only at sample `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedPatterns {
    pub pairs: Vec<(Pattern, Pattern)>,
}

impl PairedPatterns {
    /// All `2n` patterns, pair by pair, deduplicated.
    pub fn pattern_set(&self) -> PatternSet {
        PatternSet::from_patterns(
            self.pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]),
            Provenance::Paired,
        )
    }
}

/// Sine of the angle between the rows below which two rows count as parallel.
pub const PARALLEL_TOL: f64 = 1e-9;

/// For each sample `i`, two realizable patterns that differ only at `i`.
///
/// A point `c` on the `i`-th hyperplane that avoids all other hyperplanes is
/// pushed by `+-eps x_i` with `eps = min_j |c . x_j| / (2 |x_i . x_j|)`, which
/// crosses hyperplane `i` and no other.
pub fn paired_patterns(ds: &Dataset) -> Result<PairedPatterns> {
    let x = ds.x();
    let n = ds.n();
    let unit: Vec<DVector<f64>> = (0..n).map(|i| x.row(i).transpose().normalize()).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let cos = unit[i].dot(&unit[j]).clamp(-1.0, 1.0);
            if (1.0 - cos * cos).max(0.0).sqrt() < PARALLEL_TOL {
                return Err(Error::Precondition(format!("rows {i} and {j} are parallel")));
            }
        }
    }

    let mut rng = rng_stream(0, stream::DIRECTIONS);
    let mut pairs = Vec::with_capacity(n);
    for i in 0..n {
        let xi = x.row(i).transpose();
        // best of a few random points on hyperplane i, by worst normalized clearance
        let mut best: Option<(f64, DVector<f64>)> = None;
        for _ in 0..16 {
            let r = standard_normal_vector(&mut rng, ds.d());
            let c = &r - &unit[i] * unit[i].dot(&r);
            let cn = c.norm();
            let clearance = (0..n)
                .filter(|&j| j != i)
                .map(|j| if cn > 0.0 { unit[j].dot(&c).abs() / cn } else { 0.0 })
                .fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|(b, _)| clearance > *b) {
                best = Some((clearance, c));
            }
        }
        let (clearance, c) = best.expect("at least one candidate");
        if n > 1 && clearance <= 1e-12 {
            return Err(Error::Precondition(format!(
                "could not find a point on hyperplane {i} away from the others"
            )));
        }
        let eps = (0..n)
            .filter(|&j| j != i)
            .filter_map(|j| {
                let xj = x.row(j).transpose();
                let ij = xi.dot(&xj);
                (ij != 0.0).then(|| c.dot(&xj).abs() / (2.0 * ij.abs()))
            })
            .fold(f64::INFINITY, f64::min);
        let eps = if eps.is_finite() { eps } else { 1.0 };
        let plus = Pattern::from_direction(x, &(&c + &xi * eps));
        let minus = Pattern::from_direction(x, &(&c - &xi * eps));
        debug_assert!(plus.is_active(i) && !minus.is_active(i));
        pairs.push((plus, minus));
    }
    Ok(PairedPatterns { pairs })
}
