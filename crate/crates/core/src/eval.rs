//! Clustering accuracy against known classes, ensemble-threshold sweeps and
//! per-view comparisons.
//!
//! Accuracy is `r = Σ a_i / n`, where `a_i` counts the members of cluster `i`
//! belonging to that cluster's most frequent class; the error is `e = 1 - r`.
//! A class may dominate several clusters.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::data::{Cell, MixedDataset, Tid, MISSING_TOKEN};
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::pipeline::{cluster_views, finish, prepare, BaseViews, PipelineConfig};
use crate::squeezer::{search_threshold, CategoricalTable};

pub type ClassLabels = HashMap<Tid, String>;

/// Turns a column taken out of a dataset into class labels. Missing cells
/// become the reserved `?` class.
pub fn class_labels(column: &[(Tid, Cell)]) -> ClassLabels {
    column
        .iter()
        .map(|(tid, cell)| {
            let label = match cell {
                Cell::Missing => MISSING_TOKEN.to_string(),
                other => other.to_string(),
            };
            (*tid, label)
        })
        .collect()
}

/// Splits the class column off a dataset.
pub fn hold_out_classes(ds: &MixedDataset, class_column: &str) -> Result<(MixedDataset, ClassLabels)> {
    let (rest, column) = ds.take_column(class_column)?;
    Ok((rest, class_labels(&column)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterAccuracy {
    pub cluster: usize,
    pub size: usize,
    pub dominant_class: String,
    pub dominant_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub per_cluster: Vec<ClusterAccuracy>,
    pub n: usize,
    /// Σ a_i
    pub correct: usize,
    pub r: f64,
    pub e: f64,
}

impl EvaluationReport {
    pub fn k(&self) -> usize {
        self.per_cluster.len()
    }

    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n={}", self.n);
        let _ = writeln!(out, "k={}", self.k());
        let _ = writeln!(out, "correct={}", self.correct);
        let _ = writeln!(out, "r={}", self.r);
        let _ = writeln!(out, "e={}", self.e);
        for c in &self.per_cluster {
            let _ = writeln!(
                out,
                "cluster.{}={},{},{}",
                c.cluster, c.size, c.dominant_class, c.dominant_count
            );
        }
        out
    }
}

pub fn accuracy(part: &Partition, classes: &ClassLabels) -> Result<EvaluationReport> {
    if part.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let missing: Vec<Tid> = part.tids().iter().copied().filter(|t| !classes.contains_key(t)).collect();
    if !missing.is_empty() {
        return Err(Error::MissingClass(missing));
    }
    let mut counts: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); part.k()];
    for (tid, label) in part.iter() {
        *counts[label - 1].entry(classes[&tid].as_str()).or_insert(0) += 1;
    }
    let per_cluster: Vec<ClusterAccuracy> = counts
        .iter()
        .enumerate()
        .map(|(i, by_class)| {
            // BTreeMap iterates in lexicographic order; keep the first maximum.
            let (class, count) = by_class
                .iter()
                .fold(("", 0), |best, (c, &n)| if n > best.1 { (c, n) } else { best });
            ClusterAccuracy {
                cluster: i + 1,
                size: by_class.values().sum(),
                dominant_class: class.to_string(),
                dominant_count: count,
            }
        })
        .collect();
    let n = part.len();
    let correct = per_cluster.iter().map(|c| c.dominant_count).sum();
    let r = correct as f64 / n as f64;
    Ok(EvaluationReport {
        per_cluster,
        n,
        correct,
        r,
        e: 1.0 - r,
    })
}

/// Fraction of rows in the most common class: the accuracy of one big cluster.
pub fn majority_fraction(tids: &[Tid], classes: &ClassLabels) -> Result<f64> {
    let part = Partition::new(tids.to_vec(), vec![1; tids.len()])?;
    Ok(accuracy(&part, classes)?.r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub s_norm: f64,
    pub k: usize,
    pub r: f64,
    pub e: f64,
    pub fingerprint: String,
}

/// Run of consecutive sweep rows sharing one fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plateau {
    pub start: f64,
    pub end: f64,
    pub points: usize,
    pub k: usize,
    pub fingerprint: String,
}

impl Plateau {
    pub fn width(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s_norm,k,r,e,fingerprint\n");
        for row in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", row.s_norm, row.k, row.r, row.e, row.fingerprint);
        }
        out
    }

    /// All maximal runs of identical fingerprints, in grid order.
    pub fn plateaus(&self) -> Vec<Plateau> {
        let mut out: Vec<Plateau> = Vec::new();
        for row in &self.rows {
            match out.last_mut() {
                Some(p) if p.fingerprint == row.fingerprint => {
                    p.end = row.s_norm;
                    p.points += 1;
                }
                _ => out.push(Plateau {
                    start: row.s_norm,
                    end: row.s_norm,
                    points: 1,
                    k: row.k,
                    fingerprint: row.fingerprint.clone(),
                }),
            }
        }
        out
    }

    /// Widest plateau; the earliest one wins ties.
    pub fn widest_plateau(&self) -> Option<Plateau> {
        self.plateaus()
            .into_iter()
            .fold(None, |best: Option<Plateau>, p| match best {
                Some(b) if b.width() >= p.width() => Some(b),
                _ => Some(p),
            })
    }
}

/// `0, 0.05, …, 1`.
pub fn default_grid() -> Vec<f64> {
    (0..=20).map(|i| round_grid(i as f64 * 0.05)).collect()
}

fn round_grid(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Parses `start:end:step`, inclusive of `end` when it lies on the grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let bad = || Error::InvalidArgument(format!("grid `{spec}` is not `start:end:step`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if step.is_nan() || step <= 0.0 || end < start || !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end) {
        return Err(Error::InvalidArgument(format!(
            "grid `{spec}` must satisfy 0 <= start <= end <= 1 and step > 0"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| round_grid(start + i as f64 * step)).collect())
}

/// Clusters the base views once, then consolidates them at every grid value.
pub fn sweep_ensemble_threshold(
    ds: &MixedDataset,
    cfg: &PipelineConfig,
    grid: &[f64],
    classes: &ClassLabels,
) -> Result<SweepReport> {
    let prepared = prepare(ds, &cfg.missing_policy)?;
    let views = cluster_views(&prepared, cfg)?;
    sweep_views(&views, cfg, grid, classes)
}

pub fn sweep_views(
    views: &BaseViews,
    cfg: &PipelineConfig,
    grid: &[f64],
    classes: &ClassLabels,
) -> Result<SweepReport> {
    if let Some(bad) = grid.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::InvalidArgument(format!("grid value {bad} outside [0, 1]")));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let rows = grid
        .iter()
        .map(|&s_norm| {
            let (part, _) = finish(views, cfg, s_norm)?;
            let eval = accuracy(&part, classes)?;
            Ok(SweepRow {
                s_norm,
                k: part.k(),
                r: eval.r,
                e: eval.e,
                fingerprint: part.fingerprint(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport { rows })
}

/// Final partition steered to a target cluster count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalKRun {
    pub target_k: usize,
    pub k: usize,
    pub s_norm: f64,
    pub e: f64,
}

/// For each target k, searches the ensemble threshold and records the error
/// of the resulting final partition.
pub fn error_by_final_k(
    views: &BaseViews,
    cfg: &PipelineConfig,
    targets: &[usize],
    classes: &ClassLabels,
) -> Result<Vec<FinalKRun>> {
    targets
        .iter()
        .map(|&target| {
            let (part, s_norm) = steer_final(views, cfg, target)?;
            Ok(FinalKRun {
                target_k: target,
                k: part.k(),
                s_norm,
                e: accuracy(&part, classes)?.e,
            })
        })
        .collect()
}

fn steer_final(views: &BaseViews, cfg: &PipelineConfig, target: usize) -> Result<(Partition, f64)> {
    match views.ensemble(cfg)? {
        Some(ensemble) => {
            let table = CategoricalTable::from_dataset(&ensemble.dataset)?;
            let found = search_threshold(&table, &ensemble.weights, target)?;
            let s_norm = found.threshold / ensemble.weights.total();
            Ok((found.partition, s_norm))
        }
        None => {
            let (part, _) = finish(views, cfg, cfg.ensemble_threshold_norm)?;
            Ok((part, cfg.ensemble_threshold_norm))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViewComparison {
    pub k: usize,
    pub k_c: usize,
    pub k_n: usize,
    pub k_final: usize,
    pub categorical_threshold: f64,
    pub ensemble_threshold_norm: f64,
    pub e_categorical: f64,
    pub e_numeric: f64,
    pub e_final: f64,
}

pub fn comparison_csv(rows: &[ViewComparison]) -> String {
    let mut out = String::from(
        "k,k_c,k_n,k_final,categorical_threshold,ensemble_threshold_norm,e_categorical,e_numeric,e_final\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.k,
            r.k_c,
            r.k_n,
            r.k_final,
            r.categorical_threshold,
            r.ensemble_threshold_norm,
            r.e_categorical,
            r.e_numeric,
            r.e_final
        );
    }
    out
}

/// For each k, clusters the categorical view to about k clusters (threshold
/// searched), the numeric view to exactly k, and steers the ensemble to k.
pub fn compare_views(
    ds: &MixedDataset,
    cfg: &PipelineConfig,
    k_values: &[usize],
    classes: &ClassLabels,
) -> Result<Vec<ViewComparison>> {
    let prepared = prepare(ds, &cfg.missing_policy)?;
    k_values
        .iter()
        .map(|&k| {
            let mut run_cfg = cfg.clone();
            run_cfg.categorical_target_k = Some(k);
            run_cfg.numeric.k = k;
            let views = cluster_views(&prepared, &run_cfg)?;
            let (cat, num) = match (&views.categorical, &views.numeric) {
                (Some(c), Some(n)) => (c, n),
                _ => {
                    return Err(Error::InvalidArgument(
                        "view comparison needs both categorical and numeric attributes".into(),
                    ))
                }
            };
            let (fin, s_norm) = steer_final(&views, &run_cfg, k)?;
            Ok(ViewComparison {
                k,
                k_c: cat.k(),
                k_n: num.k(),
                k_final: fin.k(),
                categorical_threshold: views.categorical_threshold.unwrap_or_default(),
                ensemble_threshold_norm: s_norm,
                e_categorical: accuracy(cat, classes)?.e,
                e_numeric: accuracy(num, classes)?.e,
                e_final: accuracy(&fin, classes)?.e,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Attribute, Row, Schema};
    use crate::kmeans::NumericClustererConfig;

    fn classes(labels: &[&str]) -> ClassLabels {
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| (i as Tid + 1, l.to_string()))
            .collect()
    }

    #[test]
    fn hand_counted_example() {
        let part = Partition::new(vec![1, 2, 3, 4, 5], vec![1, 1, 1, 2, 2]).unwrap();
        let report = accuracy(&part, &classes(&["+", "+", "-", "-", "-"])).unwrap();
        let a: Vec<usize> = report.per_cluster.iter().map(|c| c.dominant_count).collect();
        assert_eq!(a, vec![2, 2]);
        assert_eq!(report.correct, 4);
        assert!((report.r - 0.8).abs() < 1e-12);
        assert!((report.e - 0.2).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_single_cluster() {
        let c = classes(&["x", "y", "x", "z"]);
        let perfect = Partition::from_raw_labels(vec![1, 2, 3, 4], &["x", "y", "x", "z"]).unwrap();
        let report = accuracy(&perfect, &c).unwrap();
        assert_eq!(report.r, 1.0);
        assert_eq!(report.e, 0.0);
        assert_eq!(majority_fraction(&[1, 2, 3, 4], &c).unwrap(), 0.5);
    }

    #[test]
    fn dominant_ties_pick_lexicographic_label() {
        let part = Partition::new(vec![1, 2], vec![1, 1]).unwrap();
        let report = accuracy(&part, &classes(&["sick", "buff"])).unwrap();
        assert_eq!(report.per_cluster[0].dominant_class, "buff");
        assert_eq!(report.per_cluster[0].dominant_count, 1);
    }

    #[test]
    fn missing_class_is_reported() {
        let part = Partition::new(vec![1, 2, 9], vec![1, 1, 1]).unwrap();
        match accuracy(&part, &classes(&["a", "b"])) {
            Err(Error::MissingClass(t)) => assert_eq!(t, vec![9]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(default_grid().len(), 21);
        assert_eq!(default_grid()[3], 0.15);
        assert_eq!(parse_grid("0:1:0.05").unwrap(), default_grid());
        assert!(parse_grid("0:2:0.1").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn plateau_detection() {
        let rows = [(0.0, "a"), (0.25, "b"), (0.5, "b"), (0.75, "b"), (1.0, "c")]
            .iter()
            .map(|(s, f)| SweepRow {
                s_norm: *s,
                k: 1,
                r: 1.0,
                e: 0.0,
                fingerprint: f.to_string(),
            })
            .collect();
        let report = SweepReport { rows };
        let widest = report.widest_plateau().unwrap();
        assert_eq!((widest.start, widest.end, widest.points), (0.25, 0.75, 3));
        assert_eq!(report.plateaus().len(), 3);
    }

    fn toy() -> (MixedDataset, ClassLabels) {
        let schema = Schema::new(vec![
            Attribute::categorical("c1"),
            Attribute::categorical("c2"),
            Attribute::numeric("x"),
        ])
        .unwrap();
        let raw = [
            ("a", "p", 0.0, "+"),
            ("a", "p", 0.1, "+"),
            ("a", "q", 0.2, "+"),
            ("b", "q", 0.9, "-"),
            ("b", "q", 1.0, "-"),
            ("b", "p", 0.8, "-"),
        ];
        let rows = raw
            .iter()
            .enumerate()
            .map(|(i, (a, b, x, _))| {
                Row::new(
                    i as Tid + 1,
                    vec![
                        Cell::Categorical(a.to_string()),
                        Cell::Categorical(b.to_string()),
                        Cell::Numeric(*x),
                    ],
                )
            })
            .collect();
        let labels: Vec<&str> = raw.iter().map(|r| r.3).collect();
        (MixedDataset::new(schema, rows).unwrap(), classes(&labels))
    }

    #[test]
    fn sweep_floor_and_ceiling() {
        let (ds, cls) = toy();
        let cfg = PipelineConfig {
            categorical_threshold: 1.0,
            numeric: NumericClustererConfig::new(2),
            ..PipelineConfig::default()
        };
        let report = sweep_ensemble_threshold(&ds, &cfg, &[1.0, 0.0, 0.5], &cls).unwrap();
        let s: Vec<f64> = report.rows.iter().map(|r| r.s_norm).collect();
        assert_eq!(s, vec![0.0, 0.5, 1.0]);
        assert_eq!(report.rows[0].k, 1);

        let views = cluster_views(&prepare(&ds, &cfg.missing_policy).unwrap(), &cfg).unwrap();
        let ensemble = views.ensemble(&cfg).unwrap().unwrap();
        let distinct: std::collections::HashSet<_> = ensemble
            .dataset
            .rows()
            .iter()
            .map(|r| r.values.clone())
            .map(|v| format!("{v:?}"))
            .collect();
        assert_eq!(report.rows[2].k, distinct.len());
    }

    #[test]
    fn compare_views_extremes() {
        let (ds, cls) = toy();
        let cfg = PipelineConfig::default();
        let rows = compare_views(&ds, &cfg, &[1, 6], &cls).unwrap();
        assert_eq!(rows[0].k_n, 1);
        assert_eq!(rows[0].k_final, 1);
        for e in [rows[0].e_categorical, rows[0].e_numeric, rows[0].e_final] {
            assert!((e - 0.5).abs() < 1e-12);
        }
        assert_eq!(rows[1].k_n, 6);
        assert_eq!(rows[1].e_numeric, 0.0);
        assert_eq!(rows[1].e_final, 0.0);
    }
}
