//! TOML run configuration.
//!
//! Every key is optional; command-line flags take precedence. Relative paths
//! are resolved against the directory containing the config file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::data::{ColumnScope, MissingPolicy};
use crate::error::{Error, Result};
use crate::kmeans::NumericClustererConfig;
use crate::pipeline::PipelineConfig;

/// Reference text for `--help`.
pub const CONFIG_KEYS: &str = "\
CONFIG FILE KEYS (TOML; paths are relative to the config file):
  data = \"x.csv\"                  input CSV with a header row
  schema = \"x.schema\"             one `name,numeric|categorical` line per column
  class_column = \"class\"          held out of clustering, used by eval/sweep
  labels_out = \"labels.csv\"       `tid,cluster` output
  report_out = \"report.txt\"       key=value report; a .json mirror is written alongside
  eval_out = \"eval.txt\"           evaluation report (eval)
  sweep_out = \"sweep.csv\"         sweep table (sweep)
  compare_out = \"compare.csv\"     per-k view comparison (compare-views)

  [pipeline]
  categorical_threshold = 4.0     raw Squeezer threshold for the categorical view
  categorical_target_k = 4        search the threshold for this many clusters instead
  ensemble_threshold_norm = 0.5   ensemble threshold in [0, 1]
  ensemble_weights = [9.0, 6.0]   override the (m_c, m_n) weights

  [numeric]
  k = 4                           k-means cluster count
  seed = 0                        rotates the first initial center
  max_iterations = 100
  convergence_tol = 1e-9

  [missing]
  policy = \"treat_as_category\"    drop_row | fill_numeric | fill_categorical | treat_as_category
  scope = \"all\"                   drop_row only: numeric | categorical | all
  value = 0.0                     fill_numeric only
  token = \"unknown\"               fill_categorical only";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub class_column: Option<String>,
    pub labels_out: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
    pub eval_out: Option<PathBuf>,
    pub sweep_out: Option<PathBuf>,
    pub compare_out: Option<PathBuf>,
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub numeric: NumericSection,
    #[serde(default)]
    pub missing: MissingSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub categorical_threshold: Option<f64>,
    pub categorical_target_k: Option<usize>,
    pub ensemble_threshold_norm: Option<f64>,
    pub ensemble_weights: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericSection {
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub max_iterations: Option<usize>,
    pub convergence_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissingSection {
    pub policy: Option<String>,
    pub scope: Option<ColumnScope>,
    pub value: Option<f64>,
    pub token: Option<String>,
}

impl MissingSection {
    pub fn to_policy(&self) -> Result<Option<MissingPolicy>> {
        let Some(name) = &self.policy else {
            if self.scope.is_some() || self.value.is_some() || self.token.is_some() {
                return Err(Error::Config("[missing] options given without `policy`".into()));
            }
            return Ok(None);
        };
        let stray = |key: &str| Error::Config(format!("[missing] `{key}` does not apply to policy `{name}`"));
        let policy = match name.as_str() {
            "drop_row" => MissingPolicy::DropRow(self.scope.unwrap_or(ColumnScope::All)),
            "fill_numeric" => MissingPolicy::FillNumeric(
                self.value
                    .ok_or_else(|| Error::Config("fill_numeric needs `value`".into()))?,
            ),
            "fill_categorical" => MissingPolicy::FillCategorical(
                self.token
                    .clone()
                    .ok_or_else(|| Error::Config("fill_categorical needs `token`".into()))?,
            ),
            "treat_as_category" => MissingPolicy::TreatAsCategory,
            other => return Err(Error::Config(format!("unknown missing policy `{other}`"))),
        };
        if self.scope.is_some() && name != "drop_row" {
            return Err(stray("scope"));
        }
        if self.value.is_some() && name != "fill_numeric" {
            return Err(stray("value"));
        }
        if self.token.is_some() && name != "fill_categorical" {
            return Err(stray("token"));
        }
        Ok(Some(policy))
    }
}

/// Parses the flag form `drop_row[:scope]`, `fill_numeric:V`,
/// `fill_categorical:TOKEN` or `treat_as_category`.
pub fn parse_missing_flag(spec: &str) -> Result<MissingPolicy> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let mut section = MissingSection {
        policy: Some(name.replace('-', "_")),
        ..MissingSection::default()
    };
    match (section.policy.as_deref(), arg) {
        (Some("drop_row"), Some(scope)) => {
            section.scope = Some(match scope {
                "numeric" => ColumnScope::Numeric,
                "categorical" => ColumnScope::Categorical,
                "all" => ColumnScope::All,
                other => return Err(Error::Config(format!("unknown column scope `{other}`"))),
            })
        }
        (Some("fill_numeric"), Some(v)) => {
            section.value = Some(
                v.parse()
                    .map_err(|_| Error::Config(format!("`{v}` is not a number")))?,
            )
        }
        (Some("fill_categorical"), Some(t)) => section.token = Some(t.to_string()),
        (_, Some(_)) => return Err(Error::Config(format!("unexpected argument in `{spec}`"))),
        _ => {}
    }
    Ok(section.to_policy()?.expect("policy is set"))
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    /// Reads a config file and makes its paths absolute-or-relative to the
    /// caller's working directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = ConfigFile::parse(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e_msg(&e))))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.data,
            &mut cfg.schema,
            &mut cfg.labels_out,
            &mut cfg.report_out,
            &mut cfg.eval_out,
            &mut cfg.sweep_out,
            &mut cfg.compare_out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        let p = &self.pipeline;
        if let Some(v) = p.categorical_threshold {
            cfg.categorical_threshold = v;
        }
        cfg.categorical_target_k = p.categorical_target_k;
        if let Some(v) = p.ensemble_threshold_norm {
            cfg.ensemble_threshold_norm = v;
        }
        cfg.ensemble_weights = p.ensemble_weights;
        let n = &self.numeric;
        let mut numeric = NumericClustererConfig::new(n.k.unwrap_or(cfg.numeric.k));
        if let Some(v) = n.seed {
            numeric.seed = v;
        }
        if let Some(v) = n.max_iterations {
            numeric.max_iterations = v;
        }
        if let Some(v) = n.convergence_tol {
            numeric.convergence_tol = v;
        }
        cfg.numeric = numeric;
        if let Some(policy) = self.missing.to_policy()? {
            cfg.missing_policy = policy;
        }
        Ok(cfg)
    }
}

fn e_msg(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}
