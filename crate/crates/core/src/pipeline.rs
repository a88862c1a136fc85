//! The divide-and-conquer pipeline: split a mixed dataset into its
//! categorical and numeric views, cluster each view, then treat the two label
//! vectors as a two-attribute categorical dataset weighted by (m_c, m_n) and
//! consolidate it with Squeezer.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::data::{
    apply_missing_policy, minmax_rescale, split_dataset, Attribute, Cell, MissingPolicy,
    MixedDataset, Row, Schema,
};
use crate::error::{Error, Result};
use crate::kmeans::{KMeans, NumericClusterer, NumericClustererConfig};
use crate::partition::Partition;
use crate::squeezer::{
    normalize_threshold, search_threshold, squeeze, CategoricalTable, SqueezerConfig, WeightVector,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Raw Squeezer threshold for the categorical view (unit weights).
    pub categorical_threshold: f64,
    /// When set, the categorical threshold is searched to produce this many
    /// clusters and `categorical_threshold` is ignored.
    pub categorical_target_k: Option<usize>,
    pub numeric: NumericClustererConfig,
    /// Ensemble threshold in [0, 1], scaled by the ensemble weight total.
    pub ensemble_threshold_norm: f64,
    /// Overrides the (m_c, m_n) ensemble weights.
    pub ensemble_weights: Option<[f64; 2]>,
    pub missing_policy: MissingPolicy,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            categorical_threshold: 1.0,
            categorical_target_k: None,
            numeric: NumericClustererConfig::new(4),
            ensemble_threshold_norm: 0.5,
            ensemble_weights: None,
            missing_policy: MissingPolicy::TreatAsCategory,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.categorical_threshold.is_finite() && self.categorical_threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "categorical threshold must be non-negative, got {}",
                self.categorical_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.ensemble_threshold_norm) {
            return Err(Error::InvalidArgument(format!(
                "ensemble threshold must lie in [0, 1], got {}",
                self.ensemble_threshold_norm
            )));
        }
        if let Some(w) = self.ensemble_weights {
            WeightVector::new(w.to_vec())?;
        }
        Ok(())
    }
}

/// The two label columns plus their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleDataset {
    pub dataset: MixedDataset,
    pub weights: WeightVector,
}

pub const CATEGORICAL_LABEL_COLUMN: &str = "categorical_cluster";
pub const NUMERIC_LABEL_COLUMN: &str = "numeric_cluster";

/// Builds the ensemble dataset: one row per tid in `part_c`'s order, labels
/// rendered as `c<i>` and `n<j>` so the two vocabularies never collide.
pub fn combine_labels(
    part_c: &Partition,
    part_n: &Partition,
    m_c: usize,
    m_n: usize,
) -> Result<EnsembleDataset> {
    combine_weighted(part_c, part_n, WeightVector::new(vec![m_c as f64, m_n as f64])?)
}

pub fn combine_weighted(
    part_c: &Partition,
    part_n: &Partition,
    weights: WeightVector,
) -> Result<EnsembleDataset> {
    if part_c.len() != part_n.len() {
        return Err(Error::TidMismatch);
    }
    let numeric = part_n.label_map();
    let rows = part_c
        .iter()
        .map(|(tid, c)| {
            let n = numeric.get(&tid).ok_or(Error::TidMismatch)?;
            Ok(Row::new(
                tid,
                vec![
                    Cell::Categorical(format!("c{c}")),
                    Cell::Categorical(format!("n{n}")),
                ],
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let schema = Schema::new(vec![
        Attribute::categorical(CATEGORICAL_LABEL_COLUMN),
        Attribute::categorical(NUMERIC_LABEL_COLUMN),
    ])?;
    Ok(EnsembleDataset {
        dataset: MixedDataset::new(schema, rows)?,
        weights,
    })
}

/// Clusters an ensemble dataset at a normalized threshold.
pub fn consolidate(ensemble: &EnsembleDataset, s_norm: f64) -> Result<Partition> {
    let raw = normalize_threshold(s_norm, &ensemble.weights)?;
    let table = CategoricalTable::from_dataset(&ensemble.dataset)?;
    Ok(squeeze(&table, &SqueezerConfig::new(raw, ensemble.weights.clone())?)?.partition)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Ensemble,
    CategoricalOnly,
    NumericOnly,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Ensemble => "ensemble",
            RunMode::CategoricalOnly => "categorical-only",
            RunMode::NumericOnly => "numeric-only",
        }
    }
}

/// Wall-clock spent in each clustering stage and in the whole run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub categorical: Duration,
    pub numeric: Duration,
    pub ensemble: Duration,
    pub total: Duration,
}

impl StageTimings {
    /// Share of the total not spent inside the three clustering stages.
    pub fn overhead_fraction(&self) -> f64 {
        let stages = self.categorical + self.numeric + self.ensemble;
        let total = self.total.as_secs_f64();
        if total == 0.0 {
            return 0.0;
        }
        (total - stages.as_secs_f64()).max(0.0) / total
    }
}

/// Base-view clusterings, computed once and reusable across ensemble
/// thresholds.
#[derive(Debug, Clone)]
pub struct BaseViews {
    pub categorical: Option<Partition>,
    pub numeric: Option<Partition>,
    pub categorical_threshold: Option<f64>,
    pub m_c: usize,
    pub m_n: usize,
    pub timings: StageTimings,
}

impl BaseViews {
    pub fn mode(&self) -> RunMode {
        match (&self.categorical, &self.numeric) {
            (Some(_), Some(_)) => RunMode::Ensemble,
            (Some(_), None) => RunMode::CategoricalOnly,
            _ => RunMode::NumericOnly,
        }
    }

    pub fn ensemble_weights(&self, cfg: &PipelineConfig) -> Result<WeightVector> {
        match cfg.ensemble_weights {
            Some(w) => WeightVector::new(w.to_vec()),
            None => WeightVector::new(vec![self.m_c as f64, self.m_n as f64]),
        }
    }

    pub fn ensemble(&self, cfg: &PipelineConfig) -> Result<Option<EnsembleDataset>> {
        match (&self.categorical, &self.numeric) {
            (Some(c), Some(n)) => Ok(Some(combine_weighted(c, n, self.ensemble_weights(cfg)?)?)),
            _ => Ok(None),
        }
    }
}

/// Applies the configured missing-value policy, then maps any categorical
/// gaps left over to the reserved `?` category.
pub fn prepare(ds: &MixedDataset, policy: &MissingPolicy) -> Result<MixedDataset> {
    let ds = apply_missing_policy(ds, policy)?;
    apply_missing_policy(&ds, &MissingPolicy::TreatAsCategory)
}

/// Clusters both views of an already prepared dataset.
pub fn cluster_views(prepared: &MixedDataset, cfg: &PipelineConfig) -> Result<BaseViews> {
    cfg.validate()?;
    if prepared.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (cat_view, num_view) = split_dataset(prepared);
    let m_c = cat_view.schema().len();
    let m_n = num_view.schema().len();
    let mut timings = StageTimings::default();

    let (categorical, categorical_threshold) = if m_c > 0 {
        let started = Instant::now();
        let table = CategoricalTable::from_dataset(&cat_view)?;
        let weights = WeightVector::unit(m_c)?;
        let threshold = match cfg.categorical_target_k {
            Some(k) => search_threshold(&table, &weights, k)?.threshold,
            None => cfg.categorical_threshold,
        };
        let part = squeeze(&table, &SqueezerConfig::new(threshold, weights)?)?.partition;
        timings.categorical = started.elapsed();
        (Some(part), Some(threshold))
    } else {
        (None, None)
    };

    let numeric = if m_n > 0 {
        let rescaled = minmax_rescale(&num_view)?;
        let started = Instant::now();
        let part = KMeans::new(cfg.numeric.clone()).cluster(&rescaled)?;
        timings.numeric = started.elapsed();
        Some(part)
    } else {
        None
    };

    Ok(BaseViews {
        categorical,
        numeric,
        categorical_threshold,
        m_c,
        m_n,
        timings,
    })
}

/// Flat record of what a pipeline run did.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: RunMode,
    pub n: usize,
    pub m_c: usize,
    pub m_n: usize,
    pub k_c: Option<usize>,
    pub k_n: Option<usize>,
    pub k: usize,
    pub categorical_threshold: Option<f64>,
    pub categorical_target_k: Option<usize>,
    pub numeric_clusterer: &'static str,
    pub numeric_k: Option<usize>,
    pub numeric_seed: Option<u64>,
    pub ensemble_weights: Option<[f64; 2]>,
    pub ensemble_threshold_norm: Option<f64>,
    pub ensemble_threshold: Option<f64>,
    pub fingerprint: String,
    #[serde(skip)]
    pub timings: StageTimings,
}

impl RunReport {
    /// `key=value` lines; absent values are written empty.
    pub fn to_key_value(&self) -> String {
        fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_default()
        }
        let weights = self
            .ensemble_weights
            .map(|[a, b]| format!("{a},{b}"))
            .unwrap_or_default();
        let lines = [
            ("mode", self.mode.as_str().to_string()),
            ("n", self.n.to_string()),
            ("m_c", self.m_c.to_string()),
            ("m_n", self.m_n.to_string()),
            ("k_c", opt(&self.k_c)),
            ("k_n", opt(&self.k_n)),
            ("k", self.k.to_string()),
            ("categorical_threshold", opt(&self.categorical_threshold)),
            ("categorical_target_k", opt(&self.categorical_target_k)),
            ("numeric_clusterer", self.numeric_clusterer.to_string()),
            ("numeric_k", opt(&self.numeric_k)),
            ("numeric_seed", opt(&self.numeric_seed)),
            ("ensemble_weights", weights),
            ("ensemble_threshold_norm", opt(&self.ensemble_threshold_norm)),
            ("ensemble_threshold", opt(&self.ensemble_threshold)),
            ("fingerprint", self.fingerprint.clone()),
        ];
        lines
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Consolidates precomputed base views at one ensemble threshold.
pub fn finish(views: &BaseViews, cfg: &PipelineConfig, s_norm: f64) -> Result<(Partition, RunReport)> {
    let mut timings = views.timings;
    let (partition, weights, raw) = match (&views.categorical, &views.numeric) {
        (Some(_), Some(_)) => {
            let ensemble = views.ensemble(cfg)?.expect("both views present");
            let started = Instant::now();
            let raw = normalize_threshold(s_norm, &ensemble.weights)?;
            let part = consolidate(&ensemble, s_norm)?;
            timings.ensemble = started.elapsed();
            let w = ensemble.weights.as_slice();
            (part, Some([w[0], w[1]]), Some(raw))
        }
        (Some(c), None) => (c.clone(), None, None),
        (None, Some(n)) => (n.clone(), None, None),
        (None, None) => {
            return Err(Error::InvalidArgument("dataset has no attributes to cluster".into()))
        }
    };
    let mode = views.mode();
    let report = RunReport {
        mode,
        n: partition.len(),
        m_c: views.m_c,
        m_n: views.m_n,
        k_c: views.categorical.as_ref().map(Partition::k),
        k_n: views.numeric.as_ref().map(Partition::k),
        k: partition.k(),
        categorical_threshold: views.categorical_threshold,
        categorical_target_k: views.categorical.as_ref().and(cfg.categorical_target_k),
        numeric_clusterer: "kmeans",
        numeric_k: views.numeric.as_ref().map(|_| cfg.numeric.k),
        numeric_seed: views.numeric.as_ref().map(|_| cfg.numeric.seed),
        ensemble_weights: weights,
        ensemble_threshold_norm: raw.map(|_| s_norm),
        ensemble_threshold: raw,
        fingerprint: partition.fingerprint(),
        timings,
    };
    Ok((partition, report))
}

/// Full run: missing-value policy, split, per-view clustering, ensemble.
pub fn run_cebmdc(ds: &MixedDataset, cfg: &PipelineConfig) -> Result<(Partition, RunReport)> {
    let started = Instant::now();
    let prepared = prepare(ds, &cfg.missing_policy)?;
    let views = cluster_views(&prepared, cfg)?;
    let (partition, mut report) = finish(&views, cfg, cfg.ensemble_threshold_norm)?;
    report.timings.total = started.elapsed();
    Ok((partition, report))
}
