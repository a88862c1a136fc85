//! Weighted Squeezer: one-pass clustering of categorical tuples.
//!
//! Each cluster keeps a [`ClusterSummary`] (per attribute, the support of
//! every value seen among its members). A tuple's similarity to a cluster is
//!
//! ```text
//! sim(C, t) = sum_i  w_i * Sup(t.A_i) / sum_{a in VAL_i(C)} Sup(a)
//! ```
//!
//! Tuples are read once, in row order. The first founds cluster 1; every later
//! tuple joins its most similar cluster when `sim_max >= threshold` and founds
//! a new cluster otherwise. Ties on `sim_max` go to the lowest cluster index.

use std::collections::{BTreeMap, HashMap};

use crate::data::{AttributeKind, Cell, MixedDataset, Tid};
use crate::error::{Error, Result};
use crate::partition::Partition;

/// Value code within one attribute's dictionary.
pub type Code = u32;

/// Categorical rows with values interned per attribute.
#[derive(Debug, Clone)]
pub struct CategoricalTable {
    names: Vec<String>,
    dictionaries: Vec<Vec<String>>,
    tids: Vec<Tid>,
    codes: Vec<Code>,
}

impl CategoricalTable {
    /// Encodes a categorical-only dataset. Numeric columns and missing cells
    /// are rejected; resolve them with a missing-value policy first.
    pub fn from_dataset(ds: &MixedDataset) -> Result<Self> {
        let schema = ds.schema();
        let width = schema.len();
        if let Some(i) = (0..width).find(|&i| schema.kind(i) != AttributeKind::Categorical) {
            return Err(Error::InvalidArgument(format!(
                "squeezer needs categorical attributes only, `{}` is numeric",
                schema.name(i)
            )));
        }
        let mut lookup: Vec<HashMap<&str, Code>> = vec![HashMap::new(); width];
        let mut dictionaries: Vec<Vec<String>> = vec![Vec::new(); width];
        let mut codes = Vec::with_capacity(ds.len() * width);
        for row in ds.rows() {
            for (i, cell) in row.values.iter().enumerate() {
                let value = match cell {
                    Cell::Categorical(v) => v.as_str(),
                    _ => {
                        return Err(Error::InvalidArgument(format!(
                            "tid {}: missing value in `{}`",
                            row.tid,
                            schema.name(i)
                        )))
                    }
                };
                let next = dictionaries[i].len() as Code;
                let code = *lookup[i].entry(value).or_insert_with(|| {
                    dictionaries[i].push(value.to_string());
                    next
                });
                codes.push(code);
            }
        }
        Ok(CategoricalTable {
            names: schema.attributes().iter().map(|a| a.name.clone()).collect(),
            dictionaries,
            tids: ds.tids(),
            codes,
        })
    }

    pub fn len(&self) -> usize {
        self.tids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tids.is_empty()
    }

    /// Number of attributes, m.
    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tid(&self, row: usize) -> Tid {
        self.tids[row]
    }

    pub fn tids(&self) -> &[Tid] {
        &self.tids
    }

    pub fn row(&self, row: usize) -> &[Code] {
        let m = self.width();
        &self.codes[row * m..(row + 1) * m]
    }

    pub fn code_of(&self, attribute: usize, value: &str) -> Option<Code> {
        self.dictionaries[attribute]
            .iter()
            .position(|v| v == value)
            .map(|c| c as Code)
    }

    pub fn value(&self, attribute: usize, code: Code) -> &str {
        &self.dictionaries[attribute][code as usize]
    }

    /// Encodes a tuple of values against this table's dictionaries. Values the
    /// table has never seen get a fresh code that no cluster can contain.
    pub fn encode(&self, values: &[&str]) -> Vec<Code> {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                self.code_of(i, v)
                    .unwrap_or(self.dictionaries[i].len() as Code)
            })
            .collect()
    }
}

/// Per-attribute value supports of one cluster.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterSummary {
    supports: Vec<HashMap<Code, u32>>,
}

impl ClusterSummary {
    fn with_width(width: usize) -> Self {
        ClusterSummary {
            supports: vec![HashMap::new(); width],
        }
    }

    /// Rebuilds a summary from scratch over the given rows.
    pub fn from_rows<'a>(width: usize, rows: impl IntoIterator<Item = &'a [Code]>) -> Self {
        let mut s = ClusterSummary::with_width(width);
        for row in rows {
            s.insert(row);
        }
        s
    }

    fn insert(&mut self, row: &[Code]) {
        for (map, &code) in self.supports.iter_mut().zip(row) {
            *map.entry(code).or_insert(0) += 1;
        }
    }

    pub fn width(&self) -> usize {
        self.supports.len()
    }

    /// Sup(value) on `attribute`; zero when the value is absent.
    pub fn support(&self, attribute: usize, code: Code) -> u32 {
        self.supports[attribute].get(&code).copied().unwrap_or(0)
    }

    /// Sum of supports over VAL_i(C).
    pub fn total(&self, attribute: usize) -> u32 {
        self.supports[attribute].values().sum()
    }

    /// Distinct values on `attribute` with their supports.
    pub fn values(&self, attribute: usize) -> impl Iterator<Item = (Code, u32)> + '_ {
        self.supports[attribute].iter().map(|(&c, &s)| (c, s))
    }

    /// Decoded view, handy for inspection and tests.
    pub fn decode<'t>(&self, table: &'t CategoricalTable) -> Vec<BTreeMap<&'t str, u32>> {
        self.supports
            .iter()
            .enumerate()
            .map(|(i, map)| map.iter().map(|(&c, &s)| (table.value(i, c), s)).collect())
            .collect()
    }
}

/// A cluster's members together with its summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterStructure {
    members: Vec<Tid>,
    summary: ClusterSummary,
}

impl ClusterStructure {
    /// Singleton cluster holding one tuple.
    pub fn new(tid: Tid, row: &[Code]) -> Self {
        let mut summary = ClusterSummary::with_width(row.len());
        summary.insert(row);
        ClusterStructure {
            members: vec![tid],
            summary,
        }
    }

    pub fn members(&self) -> &[Tid] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn summary(&self) -> &ClusterSummary {
        &self.summary
    }

    fn absorb(&mut self, tid: Tid, row: &[Code]) {
        self.members.push(tid);
        self.summary.insert(row);
    }
}

/// Appends a new singleton cluster for `row`.
pub fn add_new_cluster_structure(model: &mut Vec<ClusterStructure>, tid: Tid, row: &[Code]) {
    model.push(ClusterStructure::new(tid, row));
}

/// Adds a tuple to an existing cluster, updating its supports.
pub fn add_tuple_to_cluster(cs: &mut ClusterStructure, tid: Tid, row: &[Code]) -> Result<()> {
    if row.len() != cs.summary.width() {
        return Err(Error::LengthMismatch {
            what: "row",
            expected: cs.summary.width(),
            found: row.len(),
        });
    }
    if cs.members.contains(&tid) {
        return Err(Error::DuplicateTid(tid));
    }
    cs.absorb(tid, row);
    Ok(())
}

/// Non-negative attribute weights with at least one positive entry.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weights must be finite and non-negative: {weights:?}"
            )));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::InvalidArgument(
                "at least one weight must be positive".into(),
            ));
        }
        Ok(WeightVector(weights))
    }

    pub fn unit(m: usize) -> Result<Self> {
        WeightVector::new(vec![1.0; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Σ w_i, the largest attainable similarity.
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        WeightVector::new(self.0.iter().map(|w| w * c).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqueezerConfig {
    threshold: f64,
    weights: WeightVector,
}

impl SqueezerConfig {
    pub fn new(threshold: f64, weights: WeightVector) -> Result<Self> {
        if !(threshold.is_finite() && threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "similarity threshold must be a non-negative number, got {threshold}"
            )));
        }
        Ok(SqueezerConfig { threshold, weights })
    }

    /// Unit weights over `m` attributes.
    pub fn unweighted(threshold: f64, m: usize) -> Result<Self> {
        SqueezerConfig::new(threshold, WeightVector::unit(m)?)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }
}

/// Similarity of `row` to the cluster. The sum is accumulated attribute by
/// attribute as `w_i * (Sup / total)`, left to right.
pub fn similarity(cs: &ClusterStructure, row: &[Code], weights: &WeightVector) -> Result<f64> {
    let m = cs.summary.width();
    if row.len() != m {
        return Err(Error::LengthMismatch {
            what: "row",
            expected: m,
            found: row.len(),
        });
    }
    if weights.len() != m {
        return Err(Error::LengthMismatch {
            what: "weights",
            expected: m,
            found: weights.len(),
        });
    }
    Ok(similarity_unchecked(cs, row, weights.as_slice()))
}

#[inline]
fn similarity_unchecked(cs: &ClusterStructure, row: &[Code], weights: &[f64]) -> f64 {
    // Without missing cells every attribute's supports sum to |C|.
    let size = cs.members.len() as f64;
    let mut sim = 0.0;
    for ((map, &code), &w) in cs.summary.supports.iter().zip(row).zip(weights) {
        let sup = map.get(&code).copied().unwrap_or(0);
        sim += w * (sup as f64 / size);
    }
    sim
}

/// Result of a Squeezer pass.
#[derive(Debug, Clone)]
pub struct SqueezerRun {
    pub partition: Partition,
    pub clusters: Vec<ClusterStructure>,
    /// Number of tuples read; equals n for a single scan.
    pub rows_visited: usize,
}

/// Clusters a categorical-only dataset.
pub fn squeezer(ds: &MixedDataset, cfg: &SqueezerConfig) -> Result<Partition> {
    let table = CategoricalTable::from_dataset(ds)?;
    Ok(squeeze(&table, cfg)?.partition)
}

/// Runs Squeezer over an encoded table, keeping the cluster structures.
pub fn squeeze(table: &CategoricalTable, cfg: &SqueezerConfig) -> Result<SqueezerRun> {
    if table.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.weights.len() != table.width() {
        return Err(Error::LengthMismatch {
            what: "weights",
            expected: table.width(),
            found: cfg.weights.len(),
        });
    }
    let weights = cfg.weights.as_slice();
    let mut clusters: Vec<ClusterStructure> = Vec::new();
    let mut labels = Vec::with_capacity(table.len());
    let mut rows_visited = 0;

    for r in 0..table.len() {
        let tid = table.tid(r);
        let row = table.row(r);
        rows_visited += 1;

        let mut best: Option<(usize, f64)> = None;
        for (index, cs) in clusters.iter().enumerate() {
            let sim = similarity_unchecked(cs, row, weights);
            if best.is_none_or(|(_, max)| sim > max) {
                best = Some((index, sim));
            }
        }
        match best {
            Some((index, sim_max)) if sim_max >= cfg.threshold => {
                clusters[index].absorb(tid, row);
                labels.push(index + 1);
            }
            _ => {
                add_new_cluster_structure(&mut clusters, tid, row);
                labels.push(clusters.len());
            }
        }
    }

    let k = clusters.len();
    Ok(SqueezerRun {
        partition: Partition::from_parts_unchecked(table.tids().to_vec(), labels, k),
        clusters,
        rows_visited,
    })
}

/// Maps a threshold in [0, 1] onto the raw similarity scale: `s_norm * Σ w_i`.
pub fn normalize_threshold(s_norm: f64, weights: &WeightVector) -> Result<f64> {
    if !(0.0..=1.0).contains(&s_norm) {
        return Err(Error::InvalidArgument(format!(
            "normalized threshold must lie in [0, 1], got {s_norm}"
        )));
    }
    Ok(s_norm * weights.total())
}

/// Outcome of [`search_threshold`].
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSearch {
    pub threshold: f64,
    pub k: usize,
    pub probes: usize,
    /// Partition produced by the chosen probe.
    pub partition: Partition,
}

pub const MAX_THRESHOLD_PROBES: usize = 40;

/// Bisects the raw threshold over `[0, Σw]` looking for a run with `target_k`
/// clusters. Targets of 1 and of n or more are answered directly with `0` and
/// a threshold just above `Σw`. Cluster count is emergent and not strictly
/// monotone in the threshold, so the probe whose count is nearest the target
/// is returned, preferring the smaller threshold on ties.
pub fn search_threshold(
    table: &CategoricalTable,
    weights: &WeightVector,
    target_k: usize,
) -> Result<ThresholdSearch> {
    if target_k == 0 {
        return Err(Error::InvalidArgument("target cluster count must be at least 1".into()));
    }
    // The extremes lie on or beyond the interval ends, which midpoints never
    // reach: s = 0 always yields one cluster, s > Σw one cluster per row.
    let extreme = if target_k == 1 {
        Some(0.0)
    } else if target_k >= table.len() {
        Some(weights.total().next_up())
    } else {
        None
    };
    if let Some(threshold) = extreme {
        let partition = squeeze(table, &SqueezerConfig::new(threshold, weights.clone())?)?.partition;
        return Ok(ThresholdSearch {
            threshold,
            k: partition.k(),
            probes: 1,
            partition,
        });
    }
    let mut lo = 0.0;
    let mut hi = weights.total();
    let mut best: Option<(usize, f64, Partition)> = None;
    let mut probes = 0;
    while probes < MAX_THRESHOLD_PROBES {
        let mid = 0.5 * (lo + hi);
        let partition = squeeze(table, &SqueezerConfig::new(mid, weights.clone())?)?.partition;
        let k = partition.k();
        probes += 1;
        let gap = k.abs_diff(target_k);
        let better = match &best {
            None => true,
            Some((g, s, _)) => gap < *g || (gap == *g && mid < *s),
        };
        if better {
            best = Some((gap, mid, partition));
        }
        if gap == 0 && hi - lo < f64::EPSILON * weights.total() {
            break;
        }
        if k < target_k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (_, threshold, partition) = best.expect("at least one probe runs");
    Ok(ThresholdSearch {
        threshold,
        k: partition.k(),
        probes,
        partition,
    })
}
