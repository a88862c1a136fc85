//! Downloads the two UCI benchmark files and converts them to the CSV layout
//! the loader expects (header row, schema sidecar next to it).

use std::io::Read;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const UCI: &str = "https://archive.ics.uci.edu/ml/machine-learning-databases";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Dataset {
    Credit,
    Cleve,
    All,
}

pub struct Source {
    pub name: &'static str,
    pub url: String,
    pub csv: &'static str,
    pub schema_file: &'static str,
    pub schema: &'static str,
    pub convert: fn(&str) -> Result<String>,
}

pub const CREDIT_SCHEMA: &str = "\
a1,categorical
a2,numeric
a3,numeric
a4,categorical
a5,categorical
a6,categorical
a7,categorical
a8,numeric
a9,categorical
a10,categorical
a11,numeric
a12,categorical
a13,categorical
a14,numeric
a15,numeric
class,categorical
";

pub const CLEVE_SCHEMA: &str = "\
age,numeric
sex,categorical
cp,categorical
trestbps,numeric
chol,numeric
fbs,categorical
restecg,categorical
thalach,numeric
exang,categorical
oldpeak,numeric
slope,categorical
ca,numeric
thal,categorical
class,categorical
";

pub fn sources(which: Dataset) -> Vec<Source> {
    let credit = Source {
        name: "credit",
        url: format!("{UCI}/credit-screening/crx.data"),
        csv: "credit/crx.csv",
        schema_file: "credit/credit.schema",
        schema: CREDIT_SCHEMA,
        convert: convert_credit,
    };
    let cleve = Source {
        name: "cleve",
        url: format!("{UCI}/heart-disease/processed.cleveland.data"),
        csv: "cleve/cleve.csv",
        schema_file: "cleve/cleve.schema",
        schema: CLEVE_SCHEMA,
        convert: convert_cleveland,
    };
    match which {
        Dataset::Credit => vec![credit],
        Dataset::Cleve => vec![cleve],
        Dataset::All => vec![credit, cleve],
    }
}

fn header(schema: &str) -> String {
    let names: Vec<&str> = schema
        .lines()
        .filter_map(|l| l.rsplit_once(',').map(|(n, _)| n))
        .collect();
    names.join(",")
}

fn data_lines(raw: &str) -> impl Iterator<Item = (usize, &str)> {
    raw.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// `crx.data` is already comma separated with `?` for gaps; it only lacks a
/// header.
pub fn convert_credit(raw: &str) -> Result<String> {
    let mut out = header(CREDIT_SCHEMA);
    out.push('\n');
    for (line, row) in data_lines(raw) {
        let fields = row.split(',').count();
        if fields != 16 {
            return Err(Error::ColumnCount {
                row: line,
                expected: 16,
                found: fields,
            });
        }
        out.push_str(row);
        out.push('\n');
    }
    Ok(out)
}

/// `processed.cleveland.data` codes every attribute numerically; the
/// categorical ones are mapped back to their names and the 0..4 diagnosis
/// collapses to `buff` (healthy) or `sick`.
pub fn convert_cleveland(raw: &str) -> Result<String> {
    const NAMES: [&[(&str, &str)]; 14] = [
        &[],
        &[("0", "female"), ("1", "male")],
        &[
            ("1", "typical ang"),
            ("2", "atypical ang"),
            ("3", "non-anginal"),
            ("4", "asymptomatic"),
        ],
        &[],
        &[],
        &[("0", "false"), ("1", "true")],
        &[("0", "normal"), ("1", "ST-T abnormal"), ("2", "left vent hypertrophy")],
        &[],
        &[("0", "no"), ("1", "yes")],
        &[],
        &[("1", "upsloping"), ("2", "flat"), ("3", "downsloping")],
        &[],
        &[("3", "normal"), ("6", "fixed defect"), ("7", "reversable defect")],
        &[("0", "buff"), ("1", "sick"), ("2", "sick"), ("3", "sick"), ("4", "sick")],
    ];
    let mut out = header(CLEVE_SCHEMA);
    out.push('\n');
    for (line, row) in data_lines(raw) {
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != 14 {
            return Err(Error::ColumnCount {
                row: line,
                expected: 14,
                found: fields.len(),
            });
        }
        let mut cells = Vec::with_capacity(14);
        for (col, token) in fields.iter().enumerate() {
            if *token == "?" {
                cells.push("?".to_string());
                continue;
            }
            let value: f64 = token.parse().map_err(|_| Error::NotNumeric {
                row: line,
                column: format!("column {}", col + 1),
                token: token.to_string(),
            })?;
            let plain = value.to_string();
            if NAMES[col].is_empty() {
                cells.push(plain);
            } else {
                let name = NAMES[col]
                    .iter()
                    .find(|(code, _)| *code == plain)
                    .map(|(_, name)| *name)
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!("line {line}: unknown code {token} in column {}", col + 1))
                    })?;
                cells.push(name.to_string());
            }
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn download(url: &str) -> Result<String> {
    let fail = |message: String| Error::Fetch {
        url: url.to_string(),
        message,
    };
    let response = ureq::get(url).call().map_err(|e| fail(e.to_string()))?;
    let mut body = String::new();
    response
        .into_reader()
        .read_to_string(&mut body)
        .map_err(|e| fail(e.to_string()))?;
    Ok(body)
}

/// Fetches (or, with `local`, converts an already downloaded copy of) each
/// source under `dest`. Existing CSVs are left alone unless `force`.
/// Returns one status line per dataset.
pub fn fetch(dest: &Path, which: Dataset, local: Option<&Path>, force: bool) -> Result<Vec<String>> {
    let sources = sources(which);
    if local.is_some() && sources.len() != 1 {
        return Err(Error::InvalidArgument("--from needs a single --dataset".into()));
    }
    let mut status = Vec::new();
    for src in sources {
        let csv_path: PathBuf = dest.join(src.csv);
        let schema_path = dest.join(src.schema_file);
        if let Some(dir) = csv_path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(&schema_path, src.schema).map_err(|e| Error::io(&schema_path, e))?;
        if csv_path.exists() && !force {
            status.push(format!("{}: {} exists, skipped", src.name, csv_path.display()));
            continue;
        }
        let raw = match local {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => download(&src.url)?,
        };
        let converted = (src.convert)(&raw)?;
        let rows = converted.lines().count() - 1;
        std::fs::write(&csv_path, converted).map_err(|e| Error::io(&csv_path, e))?;
        status.push(format!("{}: wrote {} rows to {}", src.name, rows, csv_path.display()));
    }
    Ok(status)
}
