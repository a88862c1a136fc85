//! Mixed-attribute datasets: schema, CSV ingestion, missing-value handling,
//! min-max rescaling and the categorical/numeric split.
//!
//! Rows carry a stable tuple identifier (tid) that survives every operation
//! here, and row order is never changed: the one-pass clusterer downstream is
//! order dependent.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tuple identifier. Assigned 1..n in file order by [`load_csv`].
pub type Tid = u64;

/// Token used for categorical cells whose value is unknown.
pub const MISSING_TOKEN: &str = "?";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeKind::Numeric => f.write_str("numeric"),
            AttributeKind::Categorical => f.write_str("categorical"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn new(name: impl Into<String>, kind: AttributeKind) -> Self {
        Attribute {
            name: name.into(),
            kind,
        }
    }

    pub fn numeric(name: impl Into<String>) -> Self {
        Attribute::new(name, AttributeKind::Numeric)
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Attribute::new(name, AttributeKind::Categorical)
    }
}

/// Ordered list of named, typed attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    attributes: Vec<Attribute>,
}

impl Schema {
    /// Builds a schema, rejecting empty, blank or duplicate names and an empty
    /// attribute list.
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::Schema("a schema needs at least one attribute".into()));
        }
        Self::with_attributes(attributes)
    }

    /// Schema with no attributes. Only produced by splitting a dataset that
    /// lacks one of the two kinds.
    pub fn empty() -> Self {
        Schema {
            attributes: Vec::new(),
        }
    }

    fn with_attributes(attributes: Vec<Attribute>) -> Result<Self> {
        let mut seen = HashSet::new();
        for attr in &attributes {
            if attr.name.trim().is_empty() {
                return Err(Error::Schema("attribute names must be non-empty".into()));
            }
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate attribute name `{}`",
                    attr.name
                )));
            }
        }
        Ok(Schema { attributes })
    }

    /// Parses the sidecar format: one `name,numeric` or `name,categorical`
    /// line per attribute. Blank lines and lines starting with `#` are skipped.
    pub fn parse_sidecar(text: &str) -> Result<Self> {
        let mut attributes = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, kind) = line.rsplit_once(',').ok_or_else(|| {
                Error::Schema(format!("line {}: expected `name,kind`", lineno + 1))
            })?;
            let kind = match kind.trim() {
                "numeric" => AttributeKind::Numeric,
                "categorical" => AttributeKind::Categorical,
                other => {
                    return Err(Error::Schema(format!(
                        "line {}: unknown kind `{other}` (expected `numeric` or `categorical`)",
                        lineno + 1
                    )))
                }
            };
            attributes.push(Attribute::new(name.trim(), kind));
        }
        Schema::new(attributes)
    }

    pub fn from_sidecar(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Schema::parse_sidecar(&text)
    }

    pub fn to_sidecar(&self) -> String {
        self.attributes
            .iter()
            .map(|a| format!("{},{}\n", a.name, a.kind))
            .collect()
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn kind(&self, index: usize) -> AttributeKind {
        self.attributes[index].kind
    }

    pub fn name(&self, index: usize) -> &str {
        &self.attributes[index].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn count(&self, kind: AttributeKind) -> usize {
        self.attributes.iter().filter(|a| a.kind == kind).count()
    }

    /// m_c
    pub fn categorical_count(&self) -> usize {
        self.count(AttributeKind::Categorical)
    }

    /// m_n
    pub fn numeric_count(&self) -> usize {
        self.count(AttributeKind::Numeric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Numeric(f64),
    Categorical(String),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_numeric(&self) -> Option<f64> {
        match self {
            Cell::Numeric(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_categorical(&self) -> Option<&str> {
        match self {
            Cell::Categorical(s) => Some(s),
            _ => None,
        }
    }

    fn fits(&self, kind: AttributeKind) -> bool {
        match self {
            Cell::Missing => true,
            Cell::Numeric(_) => kind == AttributeKind::Numeric,
            Cell::Categorical(_) => kind == AttributeKind::Categorical,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Numeric(x) => write!(f, "{x}"),
            Cell::Categorical(s) => f.write_str(s),
            Cell::Missing => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub tid: Tid,
    pub values: Vec<Cell>,
}

impl Row {
    pub fn new(tid: Tid, values: Vec<Cell>) -> Self {
        Row { tid, values }
    }
}

/// A table of rows over a [`Schema`]. Immutable once built; every operation
/// returns a new dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedDataset {
    schema: Schema,
    rows: Vec<Row>,
}

impl MixedDataset {
    /// Validates tid uniqueness, row width and cell kinds.
    pub fn new(schema: Schema, rows: Vec<Row>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(rows.len());
        for row in &rows {
            if !seen.insert(row.tid) {
                return Err(Error::InvalidArgument(format!("duplicate tid {}", row.tid)));
            }
            if row.values.len() != schema.len() {
                return Err(Error::LengthMismatch {
                    what: "row",
                    expected: schema.len(),
                    found: row.values.len(),
                });
            }
            for (i, cell) in row.values.iter().enumerate() {
                if !cell.fits(schema.kind(i)) {
                    return Err(Error::InvalidArgument(format!(
                        "tid {}: cell in column `{}` does not match kind {}",
                        row.tid,
                        schema.name(i),
                        schema.kind(i)
                    )));
                }
            }
        }
        Ok(MixedDataset { schema, rows })
    }

    /// Categorical-only dataset from string rows; tids are 1..n.
    pub fn from_categorical_rows<S: AsRef<str>>(names: &[&str], rows: &[Vec<S>]) -> Result<Self> {
        let schema = Schema::new(names.iter().map(|n| Attribute::categorical(*n)).collect())?;
        let rows = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                Row::new(
                    i as Tid + 1,
                    r.iter()
                        .map(|v| Cell::Categorical(v.as_ref().to_string()))
                        .collect(),
                )
            })
            .collect();
        MixedDataset::new(schema, rows)
    }

    /// Numeric-only dataset from coordinate rows; tids are 1..n.
    pub fn from_numeric_rows(names: &[&str], rows: &[Vec<f64>]) -> Result<Self> {
        let schema = Schema::new(names.iter().map(|n| Attribute::numeric(*n)).collect())?;
        let rows = rows
            .iter()
            .enumerate()
            .map(|(i, r)| Row::new(i as Tid + 1, r.iter().map(|&x| Cell::Numeric(x)).collect()))
            .collect();
        MixedDataset::new(schema, rows)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn tids(&self) -> Vec<Tid> {
        self.rows.iter().map(|r| r.tid).collect()
    }

    pub fn column(&self, index: usize) -> impl Iterator<Item = &Cell> + '_ {
        self.rows.iter().map(move |r| &r.values[index])
    }

    pub fn missing_count(&self, kind: AttributeKind) -> usize {
        (0..self.schema.len())
            .filter(|&i| self.schema.kind(i) == kind)
            .map(|i| self.column(i).filter(|c| c.is_missing()).count())
            .sum()
    }

    /// Keeps the columns whose index satisfies `keep`, preserving order and tids.
    fn project(&self, keep: impl Fn(usize) -> bool) -> MixedDataset {
        let indices: Vec<usize> = (0..self.schema.len()).filter(|&i| keep(i)).collect();
        let schema = Schema {
            attributes: indices
                .iter()
                .map(|&i| self.schema.attributes[i].clone())
                .collect(),
        };
        let rows = self
            .rows
            .iter()
            .map(|r| Row::new(r.tid, indices.iter().map(|&i| r.values[i].clone()).collect()))
            .collect();
        MixedDataset { schema, rows }
    }

    /// Removes the named column and returns it alongside the remaining dataset.
    /// Used to hold the class column out of clustering.
    pub fn take_column(&self, name: &str) -> Result<(MixedDataset, Vec<(Tid, Cell)>)> {
        let index = self
            .schema
            .index_of(name)
            .ok_or_else(|| Error::Schema(format!("no column named `{name}`")))?;
        let column = self
            .rows
            .iter()
            .map(|r| (r.tid, r.values[index].clone()))
            .collect();
        Ok((self.project(|i| i != index), column))
    }

    /// Writes the dataset in the same CSV dialect [`load_csv`] reads.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let to_err = |e: csv::Error| Error::Csv {
            path: "<output>".into(),
            message: e.to_string(),
        };
        w.write_record(self.schema.attributes.iter().map(|a| a.name.as_str()))
            .map_err(to_err)?;
        for row in &self.rows {
            w.write_record(row.values.iter().map(|c| c.to_string()))
                .map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))
    }

    pub fn dump(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Loads a headered CSV file. Empty fields and `?` become [`Cell::Missing`].
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<MixedDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema, path)
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema, source: &Path) -> Result<MixedDataset> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: source.to_path_buf(),
        message: e.to_string(),
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);

    let header = rdr.headers().map_err(csv_err)?.clone();
    let names: Vec<&str> = header.iter().collect();
    let expected: Vec<&str> = schema.attributes.iter().map(|a| a.name.as_str()).collect();
    if names != expected {
        return Err(Error::Schema(format!(
            "{}: header {:?} does not match schema {:?}",
            source.display(),
            names,
            expected
        )));
    }

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(i + 2);
        if record.len() != schema.len() {
            return Err(Error::ColumnCount {
                row: line,
                expected: schema.len(),
                found: record.len(),
            });
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(col, field)| parse_cell(field, schema, col, line))
            .collect::<Result<Vec<_>>>()?;
        rows.push(Row::new(i as Tid + 1, values));
    }
    MixedDataset::new(schema.clone(), rows)
}

fn parse_cell(field: &str, schema: &Schema, col: usize, line: usize) -> Result<Cell> {
    if field.is_empty() || field == MISSING_TOKEN {
        return Ok(Cell::Missing);
    }
    match schema.kind(col) {
        AttributeKind::Categorical => Ok(Cell::Categorical(field.to_string())),
        AttributeKind::Numeric => match field.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Cell::Numeric(x)),
            _ => Err(Error::NotNumeric {
                row: line,
                column: schema.name(col).to_string(),
                token: field.to_string(),
            }),
        },
    }
}

/// Which columns a [`MissingPolicy::DropRow`] inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnScope {
    Numeric,
    Categorical,
    All,
}

impl ColumnScope {
    fn covers(self, kind: AttributeKind) -> bool {
        match self {
            ColumnScope::All => true,
            ColumnScope::Numeric => kind == AttributeKind::Numeric,
            ColumnScope::Categorical => kind == AttributeKind::Categorical,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub enum MissingPolicy {
    /// Remove rows with a missing cell in any column of the scope.
    DropRow(ColumnScope),
    /// Replace missing numeric cells with a constant.
    FillNumeric(f64),
    /// Replace missing categorical cells with a token.
    FillCategorical(String),
    /// Replace missing categorical cells with [`MISSING_TOKEN`].
    #[default]
    TreatAsCategory,
}


pub fn apply_missing_policy(ds: &MixedDataset, policy: &MissingPolicy) -> Result<MixedDataset> {
    let schema = &ds.schema;
    let rows = match policy {
        MissingPolicy::DropRow(scope) => ds
            .rows
            .iter()
            .filter(|r| {
                !r.values
                    .iter()
                    .enumerate()
                    .any(|(i, c)| c.is_missing() && scope.covers(schema.kind(i)))
            })
            .cloned()
            .collect(),
        MissingPolicy::FillNumeric(value) => {
            if !value.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "numeric fill value must be finite, got {value}"
                )));
            }
            fill(ds, AttributeKind::Numeric, || Cell::Numeric(*value))
        }
        MissingPolicy::FillCategorical(token) => {
            if token.is_empty() {
                return Err(Error::InvalidArgument("fill token must be non-empty".into()));
            }
            fill(ds, AttributeKind::Categorical, || Cell::Categorical(token.clone()))
        }
        MissingPolicy::TreatAsCategory => fill(ds, AttributeKind::Categorical, || {
            Cell::Categorical(MISSING_TOKEN.to_string())
        }),
    };
    Ok(MixedDataset {
        schema: schema.clone(),
        rows,
    })
}

fn fill(ds: &MixedDataset, kind: AttributeKind, value: impl Fn() -> Cell) -> Vec<Row> {
    ds.rows
        .iter()
        .map(|r| {
            let values = r
                .values
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if c.is_missing() && ds.schema.kind(i) == kind {
                        value()
                    } else {
                        c.clone()
                    }
                })
                .collect();
            Row::new(r.tid, values)
        })
        .collect()
}

/// Splits into (categorical view, numeric view). A kind with no columns
/// yields an empty-schema dataset that still carries every tid.
pub fn split_dataset(ds: &MixedDataset) -> (MixedDataset, MixedDataset) {
    let categorical = ds.project(|i| ds.schema.kind(i) == AttributeKind::Categorical);
    let numeric = ds.project(|i| ds.schema.kind(i) == AttributeKind::Numeric);
    (categorical, numeric)
}

/// Maps every numeric column onto [0, 1] with `(x - min) / (max - min)`.
/// Constant columns become all zeros.
pub fn minmax_rescale(ds: &MixedDataset) -> Result<MixedDataset> {
    let mut rows = ds.rows.clone();
    for col in 0..ds.schema.len() {
        if ds.schema.kind(col) != AttributeKind::Numeric {
            continue;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &ds.rows {
            match row.values[col] {
                Cell::Numeric(x) => {
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
                _ => {
                    return Err(Error::MissingNumeric {
                        column: ds.schema.name(col).to_string(),
                        tid: row.tid,
                    })
                }
            }
        }
        let span = hi - lo;
        for row in &mut rows {
            if let Cell::Numeric(x) = &mut row.values[col] {
                *x = if span > 0.0 { (*x - lo) / span } else { 0.0 };
            }
        }
    }
    Ok(MixedDataset {
        schema: ds.schema.clone(),
        rows,
    })
}
