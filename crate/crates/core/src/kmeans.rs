//! Numeric-view clustering.
//!
//! [`NumericClusterer`] is the slot the pipeline uses for the numeric view.
//! The reference implementation is deterministic Lloyd k-means with
//! farthest-point initialization on Euclidean distance.

use crate::data::{Cell, MixedDataset, Tid};
use crate::error::{Error, Result};
use crate::partition::Partition;

#[derive(Debug, Clone, PartialEq)]
pub struct NumericClustererConfig {
    /// Target cluster count, k_n.
    pub k: usize,
    /// Rotates the first initial center through the rows in tid order.
    /// Zero starts from the lowest tid.
    pub seed: u64,
    pub max_iterations: usize,
    pub convergence_tol: f64,
}

impl NumericClustererConfig {
    pub fn new(k: usize) -> Self {
        NumericClustererConfig {
            k,
            seed: 0,
            max_iterations: 100,
            convergence_tol: 1e-9,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.k > n {
            return Err(Error::InvalidArgument(format!(
                "k = {} exceeds the number of rows ({n})",
                self.k
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "convergence_tol must be non-negative, got {}",
                self.convergence_tol
            )));
        }
        Ok(())
    }
}

/// Anything that turns a numeric-only dataset into a partition.
pub trait NumericClusterer {
    fn name(&self) -> &str;
    fn cluster(&self, ds: &MixedDataset) -> Result<Partition>;
}

#[derive(Debug, Clone)]
pub struct KMeans {
    config: NumericClustererConfig,
}

impl KMeans {
    pub fn new(config: NumericClustererConfig) -> Self {
        KMeans { config }
    }

    pub fn config(&self) -> &NumericClustererConfig {
        &self.config
    }
}

impl NumericClusterer for KMeans {
    fn name(&self) -> &str {
        "kmeans"
    }

    fn cluster(&self, ds: &MixedDataset) -> Result<Partition> {
        kmeans(ds, &self.config)
    }
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub partition: Partition,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after every centroid update.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

pub fn kmeans(ds: &MixedDataset, cfg: &NumericClustererConfig) -> Result<Partition> {
    Ok(kmeans_fit(ds, cfg)?.partition)
}

pub fn kmeans_fit(ds: &MixedDataset, cfg: &NumericClustererConfig) -> Result<KMeansFit> {
    let points = numeric_points(ds)?;
    let n = points.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    cfg.validate(n)?;
    let tids = ds.tids();
    let k = cfg.k;

    let mut centroids = initial_centers(&points, &tids, k, cfg.seed);
    let mut assignment: Vec<usize> = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut iterations = 0;

    loop {
        iterations += 1;
        let mut next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        repair_empty(&points, &tids, &mut next, &mut centroids);

        let unchanged = next == assignment;
        assignment = next;
        let updated = means(&points, &assignment, k, &centroids);
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        trace.push(objective(&points, &assignment, &centroids));

        if unchanged || shift < cfg.convergence_tol || iterations >= cfg.max_iterations {
            break;
        }
    }

    let labels = assignment.iter().map(|&c| c + 1).collect();
    Ok(KMeansFit {
        partition: Partition::from_parts_unchecked(tids, labels, k),
        centroids,
        objective_trace: trace,
        iterations,
    })
}

/// Within-cluster sum of squared Euclidean distances.
pub fn objective(points: &[Vec<f64>], assignment: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum()
}

pub(crate) fn numeric_points(ds: &MixedDataset) -> Result<Vec<Vec<f64>>> {
    if ds.schema().is_empty() {
        return Err(Error::InvalidArgument(
            "numeric clustering needs at least one numeric attribute".into(),
        ));
    }
    ds.rows()
        .iter()
        .map(|row| {
            row.values
                .iter()
                .enumerate()
                .map(|(i, cell)| match cell {
                    Cell::Numeric(x) => Ok(*x),
                    Cell::Missing => Err(Error::MissingNumeric {
                        column: ds.schema().name(i).to_string(),
                        tid: row.tid,
                    }),
                    Cell::Categorical(_) => Err(Error::InvalidArgument(format!(
                        "`{}` is categorical; k-means needs numeric attributes only",
                        ds.schema().name(i)
                    ))),
                })
                .collect()
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest centroid; ties go to the lowest index.
fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Farthest-point initialization. Every tie goes to the lowest tid.
fn initial_centers(points: &[Vec<f64>], tids: &[Tid], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut by_tid: Vec<usize> = (0..points.len()).collect();
    by_tid.sort_by_key(|&i| tids[i]);
    let first = by_tid[(seed % points.len() as u64) as usize];

    let mut centers = vec![points[first].clone()];
    let mut closest: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centers.len() < k {
        let mut pick = by_tid[0];
        for &i in &by_tid {
            if closest[i] > closest[pick] {
                pick = i;
            }
        }
        let center = points[pick].clone();
        for (d, p) in closest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &center));
        }
        centers.push(center);
    }
    centers
}

/// Gives each empty cluster the point lying farthest from its own centroid,
/// taken from a cluster that keeps at least one member.
fn repair_empty(
    points: &[Vec<f64>],
    tids: &[Tid],
    assignment: &mut [usize],
    centroids: &mut [Vec<f64>],
) {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &c in assignment.iter() {
        sizes[c] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut pick: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            let c = assignment[i];
            if sizes[c] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[c]);
            let better = match pick {
                None => true,
                Some((j, best)) => d > best || (d == best && tids[i] < tids[j]),
            };
            if better {
                pick = Some((i, d));
            }
        }
        // k <= n guarantees a donor cluster with two or more members
        let (i, _) = pick.expect("a cluster with at least two members exists when k <= n");
        sizes[assignment[i]] -= 1;
        assignment[i] = empty;
        sizes[empty] = 1;
        centroids[empty] = points[i].clone();
    }
}

fn means(points: &[Vec<f64>], assignment: &[usize], k: usize, previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .enumerate()
        .map(|(c, (s, count))| {
            if count == 0 {
                previous[c].clone()
            } else {
                s.into_iter().map(|x| x / count as f64).collect()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ds(rows: &[Vec<f64>]) -> MixedDataset {
        let names: Vec<String> = (0..rows[0].len()).map(|i| format!("x{i}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        MixedDataset::from_numeric_rows(&names, rows).unwrap()
    }

    /// Minimum within-cluster SSE over every 2-partition, by enumeration.
    fn best_two_partition(points: &[Vec<f64>]) -> Vec<usize> {
        let n = points.len();
        let mut best = (f64::INFINITY, vec![]);
        for mask in 1u32..(1 << n) - 1 {
            let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            let mut sse = 0.0;
            for c in 0..2 {
                let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
                let dim = points[0].len();
                let mean: Vec<f64> = (0..dim).map(|d| members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64).collect();
                sse += members.iter().map(|p| sq_dist(p, &mean)).sum::<f64>();
            }
            if sse < best.0 {
                best = (sse, labels);
            }
        }
        best.1
    }

    #[test]
    fn separated_groups_match_enumeration() {
        let points = vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![1.0, 1.0], vec![0.9, 1.0]];
        let oracle = Partition::from_raw_labels(vec![1, 2, 3, 4], &best_two_partition(&points)).unwrap();
        let p = kmeans(&ds(&points), &NumericClustererConfig::new(2)).unwrap();
        assert_eq!(p.fingerprint(), oracle.fingerprint());
        assert_eq!(p.labels(), &[1, 1, 2, 2]);
    }

    #[test]
    fn k_one_and_k_n() {
        let points = vec![vec![0.0], vec![0.3], vec![0.7], vec![1.0]];
        let p = kmeans(&ds(&points), &NumericClustererConfig::new(1)).unwrap();
        assert_eq!(p.labels(), &[1, 1, 1, 1]);
        let p = kmeans(&ds(&points), &NumericClustererConfig::new(4)).unwrap();
        assert_eq!(p.k(), 4);
        assert_eq!(p.sizes(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let points = vec![vec![0.5]; 5];
        let p = kmeans(&ds(&points), &NumericClustererConfig::new(3)).unwrap();
        assert_eq!(p.k(), 3);
        assert!(p.sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn config_errors() {
        let d = ds(&[vec![0.0], vec![1.0]]);
        assert!(kmeans(&d, &NumericClustererConfig::new(3)).is_err());
        assert!(kmeans(&d, &NumericClustererConfig::new(0)).is_err());
        let mut cfg = NumericClustererConfig::new(1);
        cfg.max_iterations = 0;
        assert!(kmeans(&d, &cfg).is_err());
        let mut mixed = MixedDataset::from_categorical_rows(&["c"], &[vec!["a"]]).unwrap();
        assert!(kmeans(&mixed, &NumericClustererConfig::new(1)).is_err());
        mixed = MixedDataset::new(
            crate::data::Schema::new(vec![crate::data::Attribute::numeric("x")]).unwrap(),
            vec![crate::data::Row::new(1, vec![Cell::Missing])],
        )
        .unwrap();
        assert!(matches!(
            kmeans(&mixed, &NumericClustererConfig::new(1)),
            Err(Error::MissingNumeric { .. })
        ));
    }

    #[test]
    fn repeat_runs_agree_and_seed_wraps_modulo_n() {
        let points = vec![vec![0.0], vec![0.1], vec![0.5], vec![1.0]];
        let fit = |seed| {
            kmeans_fit(&ds(&points), &NumericClustererConfig { seed, ..NumericClustererConfig::new(2) }).unwrap()
        };
        let (a, b) = (fit(0), fit(0));
        assert_eq!(a.partition, b.partition);
        assert_eq!(a.centroids, b.centroids);
        assert_eq!(fit(4).centroids, a.centroids);
    }

    proptest! {
        #[test]
        fn objective_never_increases(
            points in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 2..40),
            k in 1usize..6,
            seed in 0u64..5,
        ) {
            prop_assume!(k <= points.len());
            let cfg = NumericClustererConfig { seed, ..NumericClustererConfig::new(k) };
            let fit = kmeans_fit(&ds(&points), &cfg).unwrap();
            for pair in fit.objective_trace.windows(2) {
                prop_assert!(pair[1] <= pair[0] + 1e-12 * pair[0].max(1.0));
            }
            prop_assert_eq!(fit.partition.k(), k);
            prop_assert!(fit.partition.sizes().iter().all(|&s| s > 0));
            prop_assert_eq!(fit.partition.len(), points.len());
        }
    }
}
