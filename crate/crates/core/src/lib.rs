//! Clustering of mixed numeric and categorical data through a cluster
//! ensemble.
//!
//! A dataset is split into its categorical and numeric views. The categorical
//! view is clustered with Squeezer, the numeric view with k-means, and the two
//! resulting label vectors are consolidated by a weighted Squeezer pass.
//!
//! ```no_run
//! use cebmdc::{load_csv, run_cebmdc, PipelineConfig, Schema};
//!
//! let schema = Schema::from_sidecar("data/cleve/cleve.schema")?;
//! let ds = load_csv("data/cleve/cleve.csv", &schema)?;
//! let (ds, _class) = ds.take_column("class")?;
//! let (labels, report) = run_cebmdc(&ds, &PipelineConfig::default())?;
//! println!("{} clusters, fingerprint {}", labels.k(), report.fingerprint);
//! # Ok::<(), cebmdc::Error>(())
//! ```

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod kmeans;
pub mod partition;
pub mod pipeline;
pub mod squeezer;

pub use data::{
    apply_missing_policy, load_csv, minmax_rescale, split_dataset, Attribute, AttributeKind, Cell,
    ColumnScope, MissingPolicy, MixedDataset, Row, Schema, Tid,
};
pub use error::{Error, Result};
pub use eval::{accuracy, sweep_ensemble_threshold, ClassLabels, EvaluationReport, SweepReport};
pub use kmeans::{kmeans, KMeans, NumericClusterer, NumericClustererConfig};
pub use partition::Partition;
pub use pipeline::{run_cebmdc, PipelineConfig, RunReport};
pub use squeezer::{squeezer, SqueezerConfig, WeightVector};
