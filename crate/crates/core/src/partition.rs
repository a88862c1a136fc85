use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::data::Tid;
use crate::error::{Error, Result};

/// Assignment of every tid to a cluster index in `1..=k`.
///
/// Entries are kept in the row order of the dataset that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    tids: Vec<Tid>,
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Builds a partition from parallel tid/label vectors. Labels must form
    /// the contiguous set `1..=k` and tids must be unique.
    pub fn new(tids: Vec<Tid>, labels: Vec<usize>) -> Result<Self> {
        if tids.len() != labels.len() {
            return Err(Error::LengthMismatch {
                what: "labels",
                expected: tids.len(),
                found: labels.len(),
            });
        }
        let mut seen = HashSet::with_capacity(tids.len());
        if let Some(dup) = tids.iter().find(|t| !seen.insert(**t)) {
            return Err(Error::InvalidArgument(format!("tid {dup} labeled twice")));
        }
        let k = labels.iter().copied().max().unwrap_or(0);
        let mut used = vec![false; k + 1];
        for &l in &labels {
            if l == 0 {
                return Err(Error::InvalidArgument("cluster indices start at 1".into()));
            }
            used[l] = true;
        }
        if used[1..].iter().any(|u| !u) {
            return Err(Error::InvalidArgument(format!(
                "cluster indices are not contiguous in 1..={k}"
            )));
        }
        Ok(Partition { tids, labels, k })
    }

    /// Accepts arbitrary (non-zero or zero) labels and renumbers them densely
    /// in order of first appearance.
    pub fn from_raw_labels<L: Eq + std::hash::Hash + Clone>(tids: Vec<Tid>, raw: &[L]) -> Result<Self> {
        let mut map = HashMap::new();
        let labels = raw
            .iter()
            .map(|l| {
                let next = map.len() + 1;
                *map.entry(l.clone()).or_insert(next)
            })
            .collect();
        Partition::new(tids, labels)
    }

    pub(crate) fn from_parts_unchecked(tids: Vec<Tid>, labels: Vec<usize>, k: usize) -> Self {
        debug_assert!(matches!(Partition::new(tids.clone(), labels.clone()), Ok(p) if p.k == k));
        Partition { tids, labels, k }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.tids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tids.is_empty()
    }

    pub fn tids(&self) -> &[Tid] {
        &self.tids
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (Tid, usize)> + '_ {
        self.tids.iter().copied().zip(self.labels.iter().copied())
    }

    pub fn label_map(&self) -> HashMap<Tid, usize> {
        self.iter().collect()
    }

    /// Member tids of each cluster, indexed by `label - 1`.
    pub fn clusters(&self) -> Vec<Vec<Tid>> {
        let mut out = vec![Vec::new(); self.k];
        for (tid, label) in self.iter() {
            out[label - 1].push(tid);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &l in &self.labels {
            out[l - 1] += 1;
        }
        out
    }

    /// Hash of the grouping alone: independent of cluster numbering and of
    /// the order entries are stored in.
    pub fn fingerprint(&self) -> String {
        let mut pairs: Vec<(Tid, usize)> = self.iter().collect();
        pairs.sort_unstable();
        let mut canon = HashMap::new();
        let mut hasher = Sha256::new();
        for (tid, label) in pairs {
            let next = canon.len() + 1;
            let c = *canon.entry(label).or_insert(next);
            hasher.update(tid.to_le_bytes());
            hasher.update((c as u64).to_le_bytes());
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `tid,cluster` CSV, rows sorted by tid.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut pairs: Vec<(Tid, usize)> = self.iter().collect();
        pairs.sort_unstable();
        writeln!(w, "tid,cluster")?;
        for (tid, label) in pairs {
            writeln!(w, "{tid},{label}")?;
        }
        w.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_csv<R: Read>(reader: R, source: &Path) -> Result<Self> {
        let err = |message: String| Error::Csv {
            path: source.to_path_buf(),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers().map_err(|e| err(e.to_string()))?;
        if header.iter().collect::<Vec<_>>() != ["tid", "cluster"] {
            return Err(err("expected header `tid,cluster`".into()));
        }
        let mut tids = Vec::new();
        let mut labels = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| err(e.to_string()))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let parse = |i: usize| -> Result<u64> {
                record
                    .get(i)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| err(format!("line {line}: expected two unsigned integers")))
            };
            tids.push(parse(0)?);
            labels.push(parse(1)? as usize);
        }
        Partition::from_raw_labels(tids, &labels)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Partition::read_csv(file, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_gaps_zero_and_duplicates() {
        assert!(Partition::new(vec![1, 2], vec![1, 3]).is_err());
        assert!(Partition::new(vec![1, 2], vec![0, 1]).is_err());
        assert!(Partition::new(vec![1, 1], vec![1, 1]).is_err());
        assert!(Partition::new(vec![1], vec![1, 1]).is_err());
        assert_eq!(Partition::new(vec![3, 1, 2], vec![2, 1, 2]).unwrap().k(), 2);
    }

    #[test]
    fn raw_labels_are_densified_by_first_appearance() {
        let p = Partition::from_raw_labels(vec![1, 2, 3], &[7, 0, 7]).unwrap();
        assert_eq!(p.labels(), &[1, 2, 1]);
    }

    #[test]
    fn fingerprint_ignores_numbering_and_order() {
        let a = Partition::new(vec![1, 2, 3, 4], vec![1, 1, 2, 3]).unwrap();
        let b = Partition::new(vec![4, 3, 2, 1], vec![1, 2, 3, 3]).unwrap();
        let c = Partition::new(vec![1, 2, 3, 4], vec![1, 2, 2, 3]).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn csv_round_trip_sorts_by_tid() {
        let p = Partition::new(vec![3, 1, 2], vec![1, 2, 1]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "tid,cluster\n1,2\n2,1\n3,1\n");
        let back = Partition::read_csv(&buf[..], Path::new("x")).unwrap();
        assert_eq!(back.fingerprint(), p.fingerprint());
    }
}
