//! The `cebmdc` command-line tool.

pub mod config;
pub mod fetch;

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::data::{load_csv, minmax_rescale, split_dataset, MixedDataset, Schema};
use crate::error::{Error, Result};
use crate::eval::{accuracy, class_labels, compare_views, comparison_csv, parse_grid, sweep_ensemble_threshold, ClassLabels};
use crate::kmeans::kmeans_fit;
use crate::partition::Partition;
use crate::pipeline::{prepare, run_cebmdc, PipelineConfig};
use crate::squeezer::{search_threshold, squeeze, CategoricalTable, SqueezerConfig, WeightVector};

use config::{parse_missing_flag, ConfigFile, CONFIG_KEYS};

#[derive(Debug, Parser)]
#[command(
    name = "cebmdc",
    version,
    about = "Cluster mixed numeric/categorical data through a cluster ensemble",
    after_long_help = CONFIG_KEYS
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline and write labels plus a run report.
    Cluster(RunArgs),
    /// Cluster only the categorical view with Squeezer.
    Squeezer(RunArgs),
    /// Cluster only the numeric view (min-max rescaled) with k-means.
    Kmeans(RunArgs),
    /// Score a labels file against the class column.
    Eval(EvalArgs),
    /// Sweep the ensemble threshold over a grid with fixed base views.
    Sweep(SweepArgs),
    /// Compare categorical, numeric and final errors for a range of k.
    CompareViews(CompareArgs),
    /// Download the benchmark datasets and write their schema files.
    FetchData(FetchArgs),
}

#[derive(Debug, Args, Default)]
pub struct InputArgs {
    /// TOML config file (see `cebmdc --help` for keys).
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Input CSV [key: data].
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Schema sidecar [key: schema].
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Class column excluded from clustering [key: class_column].
    #[arg(long)]
    pub class_column: Option<String>,
    /// drop_row[:numeric|categorical|all], fill_numeric:V, fill_categorical:T
    /// or treat_as_category [key: missing.policy].
    #[arg(long)]
    pub missing: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct PipelineArgs {
    /// Raw Squeezer threshold for the categorical view [key: pipeline.categorical_threshold].
    #[arg(long)]
    pub categorical_threshold: Option<f64>,
    /// Search the categorical threshold for this many clusters [key: pipeline.categorical_target_k].
    #[arg(long)]
    pub categorical_k: Option<usize>,
    /// Normalized ensemble threshold in [0, 1] [key: pipeline.ensemble_threshold_norm].
    #[arg(long)]
    pub ensemble_threshold: Option<f64>,
    /// Ensemble weights as `w_c,w_n` [key: pipeline.ensemble_weights].
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<[f64; 2]>,
    /// k-means cluster count [key: numeric.k].
    #[arg(long)]
    pub k_n: Option<usize>,
    /// k-means seed [key: numeric.seed].
    #[arg(long)]
    pub seed: Option<u64>,
    /// k-means iteration cap [key: numeric.max_iterations].
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Labels output [key: labels_out].
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
    /// Report output; a .json mirror is written next to it [key: report_out].
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// `tid,cluster` file to score [default: key labels_out].
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
    /// Evaluation report output [key: eval_out].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Grid as `start:end:step`.
    #[arg(long, default_value = "0:1:0.05")]
    pub grid: String,
    /// Print the widest run of identical partitions.
    #[arg(long)]
    pub plateau: bool,
    /// Sweep CSV output [key: sweep_out].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Inclusive range `lo:hi` of k values.
    #[arg(long, default_value = "2:10")]
    pub k: String,
    /// Comparison CSV output [key: compare_out].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Directory that receives `credit/` and `cleve/`.
    #[arg(long, default_value = "data")]
    pub dest: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub dataset: fetch::Dataset,
    /// Convert an already downloaded raw UCI file instead of fetching.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Overwrite existing CSVs.
    #[arg(long)]
    pub force: bool,
}

fn parse_weights(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok([
            a.parse().map_err(|_| format!("`{a}` is not a number"))?,
            b.parse().map_err(|_| format!("`{b}` is not a number"))?,
        ]),
        _ => Err("expected `w_c,w_n`".into()),
    }
}

fn parse_k_range(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("k range `{s}` is not `lo:hi` with 1 <= lo <= hi"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

/// Config file merged with flags.
struct Settings {
    file: ConfigFile,
    pipeline: PipelineConfig,
}

impl Settings {
    fn resolve(input: &InputArgs, flags: Option<&PipelineArgs>) -> Result<Self> {
        let mut file = match &input.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        if input.data.is_some() {
            file.data = input.data.clone();
        }
        if input.schema.is_some() {
            file.schema = input.schema.clone();
        }
        if input.class_column.is_some() {
            file.class_column = input.class_column.clone();
        }
        let mut pipeline = file.pipeline_config()?;
        if let Some(spec) = &input.missing {
            pipeline.missing_policy = parse_missing_flag(spec)?;
        }
        if let Some(f) = flags {
            if let Some(v) = f.categorical_threshold {
                pipeline.categorical_threshold = v;
                pipeline.categorical_target_k = None;
            }
            if f.categorical_k.is_some() {
                pipeline.categorical_target_k = f.categorical_k;
            }
            if let Some(v) = f.ensemble_threshold {
                pipeline.ensemble_threshold_norm = v;
            }
            if f.weights.is_some() {
                pipeline.ensemble_weights = f.weights;
            }
            if let Some(v) = f.k_n {
                pipeline.numeric.k = v;
            }
            if let Some(v) = f.seed {
                pipeline.numeric.seed = v;
            }
            if let Some(v) = f.max_iterations {
                pipeline.numeric.max_iterations = v;
            }
        }
        pipeline.validate()?;
        Ok(Settings { file, pipeline })
    }

    fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| Error::Config(format!("no `{key}` given (config key or --{})", key.replace('_', "-"))))
    }

    /// Loads the dataset and splits off the class column when one is named.
    fn load(&self) -> Result<(MixedDataset, Option<ClassLabels>)> {
        let schema = Schema::from_sidecar(Settings::required(&self.file.schema, "schema")?)?;
        let ds = load_csv(Settings::required(&self.file.data, "data")?, &schema)?;
        match &self.file.class_column {
            Some(name) => {
                let (rest, column) = ds.take_column(name)?;
                Ok((rest, Some(class_labels(&column))))
            }
            None => Ok((ds, None)),
        }
    }

    fn load_with_classes(&self) -> Result<(MixedDataset, ClassLabels)> {
        match self.load()? {
            (ds, Some(classes)) => Ok((ds, classes)),
            _ => Err(Error::Config("no `class_column` given (config key or --class-column)".into())),
        }
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
        }
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Path of the JSON mirror written next to a key=value report.
pub fn json_mirror(path: &Path) -> PathBuf {
    if path.extension().is_some_and(|e| e == "json") {
        let mut os = path.as_os_str().to_owned();
        os.push(".mirror.json");
        PathBuf::from(os)
    } else {
        path.with_extension("json")
    }
}

fn write_report<T: Serialize>(path: &Path, key_value: &str, doc: &T) -> Result<()> {
    write_text(path, key_value)?;
    let json = serde_json::to_string_pretty(doc).expect("report serializes") + "\n";
    write_text(&json_mirror(path), &json)
}

fn write_labels(path: Option<&PathBuf>, part: &Partition) -> Result<()> {
    if let Some(path) = path {
        ensure_parent(path)?;
        part.save(path)?;
    }
    Ok(())
}

fn outputs(args: &RunArgs, s: &Settings) -> (Option<PathBuf>, Option<PathBuf>) {
    (
        args.labels_out.clone().or_else(|| s.file.labels_out.clone()),
        args.report_out.clone().or_else(|| s.file.report_out.clone()),
    )
}

fn key_value(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

fn cmd_cluster(args: &RunArgs) -> Result<()> {
    let s = Settings::resolve(&args.input, Some(&args.pipeline))?;
    let (ds, _) = s.load()?;
    let (part, report) = run_cebmdc(&ds, &s.pipeline)?;
    let (labels_out, report_out) = outputs(args, &s);
    write_labels(labels_out.as_ref(), &part)?;
    let kv = report.to_key_value();
    if let Some(path) = &report_out {
        write_report(path, &kv, &report)?;
    }
    print!("{kv}");
    Ok(())
}

#[derive(Serialize)]
struct SqueezerReport {
    n: usize,
    m: usize,
    threshold: f64,
    target_k: Option<usize>,
    k: usize,
    rows_visited: usize,
    fingerprint: String,
}

fn cmd_squeezer(args: &RunArgs) -> Result<()> {
    let s = Settings::resolve(&args.input, Some(&args.pipeline))?;
    let (ds, _) = s.load()?;
    let (cat, _) = split_dataset(&prepare(&ds, &s.pipeline.missing_policy)?);
    let table = CategoricalTable::from_dataset(&cat)?;
    let weights = WeightVector::unit(table.width())?;
    let threshold = match s.pipeline.categorical_target_k {
        Some(k) => search_threshold(&table, &weights, k)?.threshold,
        None => s.pipeline.categorical_threshold,
    };
    let run = squeeze(&table, &SqueezerConfig::new(threshold, weights)?)?;
    let report = SqueezerReport {
        n: table.len(),
        m: table.width(),
        threshold,
        target_k: s.pipeline.categorical_target_k,
        k: run.partition.k(),
        rows_visited: run.rows_visited,
        fingerprint: run.partition.fingerprint(),
    };
    let kv = key_value(&[
        ("n", report.n.to_string()),
        ("m", report.m.to_string()),
        ("threshold", report.threshold.to_string()),
        ("target_k", report.target_k.map(|k| k.to_string()).unwrap_or_default()),
        ("k", report.k.to_string()),
        ("rows_visited", report.rows_visited.to_string()),
        ("fingerprint", report.fingerprint.clone()),
    ]);
    let (labels_out, report_out) = outputs(args, &s);
    write_labels(labels_out.as_ref(), &run.partition)?;
    if let Some(path) = &report_out {
        write_report(path, &kv, &report)?;
    }
    print!("{kv}");
    Ok(())
}

#[derive(Serialize)]
struct KMeansReport {
    n: usize,
    m: usize,
    k: usize,
    seed: u64,
    iterations: usize,
    objective: f64,
    fingerprint: String,
}

fn cmd_kmeans(args: &RunArgs) -> Result<()> {
    let s = Settings::resolve(&args.input, Some(&args.pipeline))?;
    let (ds, _) = s.load()?;
    let (_, num) = split_dataset(&prepare(&ds, &s.pipeline.missing_policy)?);
    if num.schema().is_empty() {
        return Err(Error::InvalidArgument("dataset has no numeric attributes".into()));
    }
    let fit = kmeans_fit(&minmax_rescale(&num)?, &s.pipeline.numeric)?;
    let report = KMeansReport {
        n: num.len(),
        m: num.schema().len(),
        k: fit.partition.k(),
        seed: s.pipeline.numeric.seed,
        iterations: fit.iterations,
        objective: fit.objective_trace.last().copied().unwrap_or(0.0),
        fingerprint: fit.partition.fingerprint(),
    };
    let kv = key_value(&[
        ("n", report.n.to_string()),
        ("m", report.m.to_string()),
        ("k", report.k.to_string()),
        ("seed", report.seed.to_string()),
        ("iterations", report.iterations.to_string()),
        ("objective", report.objective.to_string()),
        ("fingerprint", report.fingerprint.clone()),
    ]);
    let (labels_out, report_out) = outputs(args, &s);
    write_labels(labels_out.as_ref(), &fit.partition)?;
    if let Some(path) = &report_out {
        write_report(path, &kv, &report)?;
    }
    print!("{kv}");
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let s = Settings::resolve(&args.input, None)?;
    let labels_path = args
        .labels
        .clone()
        .or_else(|| s.file.labels_out.clone())
        .ok_or_else(|| Error::Config("no labels file given (--labels or config key labels_out)".into()))?;
    let part = Partition::load(&labels_path)?;
    let (ds, classes) = s.load_with_classes()?;
    // Rows removed by the missing-value policy were never clustered.
    let kept = prepare(&ds, &s.pipeline.missing_policy)?;
    let labeled: HashSet<_> = part.tids().iter().copied().collect();
    let unlabeled: Vec<_> = kept.tids().into_iter().filter(|t| !labeled.contains(t)).collect();
    if !unlabeled.is_empty() {
        return Err(Error::MissingLabel(unlabeled));
    }
    let kept_tids: HashSet<_> = kept.tids().into_iter().collect();
    let extra: Vec<_> = part.tids().iter().copied().filter(|t| !kept_tids.contains(t)).collect();
    if !extra.is_empty() {
        return Err(Error::MissingClass(extra));
    }
    let report = accuracy(&part, &classes)?;
    let kv = report.to_key_value();
    if let Some(path) = args.out.clone().or_else(|| s.file.eval_out.clone()) {
        write_report(&path, &kv, &report)?;
    }
    print!("{kv}");
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let s = Settings::resolve(&args.input, Some(&args.pipeline))?;
    let grid = parse_grid(&args.grid)?;
    let (ds, classes) = s.load_with_classes()?;
    let report = sweep_ensemble_threshold(&ds, &s.pipeline, &grid, &classes)?;
    let csv = report.to_csv();
    match args.out.clone().or_else(|| s.file.sweep_out.clone()) {
        Some(path) => write_text(&path, &csv)?,
        None => print!("{csv}"),
    }
    if args.plateau {
        if let Some(p) = report.widest_plateau() {
            println!(
                "plateau s_norm=[{}, {}] width={} points={} k={} fingerprint={}",
                p.start,
                p.end,
                p.width(),
                p.points,
                p.k,
                p.fingerprint
            );
        }
    }
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let s = Settings::resolve(&args.input, Some(&args.pipeline))?;
    let ks = parse_k_range(&args.k)?;
    let (ds, classes) = s.load_with_classes()?;
    let rows = compare_views(&ds, &s.pipeline, &ks, &classes)?;
    let csv = comparison_csv(&rows);
    match args.out.clone().or_else(|| s.file.compare_out.clone()) {
        Some(path) => write_text(&path, &csv)?,
        None => print!("{csv}"),
    }
    let n = rows.len() as f64;
    let gap = rows.iter().map(|r| (r.e_final - r.e_categorical).abs()).sum::<f64>() / n;
    println!("mean_abs_final_minus_categorical={gap}");
    Ok(())
}

fn cmd_fetch(args: &FetchArgs) -> Result<()> {
    for line in fetch::fetch(&args.dest, args.dataset, args.from.as_deref(), args.force)? {
        println!("{line}");
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Cluster(a) => cmd_cluster(a),
        Command::Squeezer(a) => cmd_squeezer(a),
        Command::Kmeans(a) => cmd_kmeans(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::CompareViews(a) => cmd_compare(a),
        Command::FetchData(a) => cmd_fetch(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn weight_and_range_parsing() {
        assert_eq!(parse_weights("9, 6").unwrap(), [9.0, 6.0]);
        assert!(parse_weights("9").is_err());
        assert_eq!(parse_k_range("2:4").unwrap(), vec![2, 3, 4]);
        assert!(parse_k_range("0:4").is_err());
        assert!(parse_k_range("5:4").is_err());
    }

    #[test]
    fn mirror_path() {
        assert_eq!(json_mirror(Path::new("out/r.txt")), PathBuf::from("out/r.json"));
        assert_eq!(json_mirror(Path::new("r")), PathBuf::from("r.json"));
        assert_eq!(json_mirror(Path::new("r.json")), PathBuf::from("r.json.mirror.json"));
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[numeric]\nk = 3\nseed = 1\n[pipeline]\ncategorical_target_k = 5\n").unwrap();
        let input = InputArgs {
            config: Some(path),
            missing: Some("fill_numeric:0".into()),
            ..InputArgs::default()
        };
        let flags = PipelineArgs {
            seed: Some(9),
            categorical_threshold: Some(2.0),
            ..PipelineArgs::default()
        };
        let s = Settings::resolve(&input, Some(&flags)).unwrap();
        assert_eq!(s.pipeline.numeric.k, 3);
        assert_eq!(s.pipeline.numeric.seed, 9);
        assert_eq!(s.pipeline.categorical_target_k, None);
        assert_eq!(s.pipeline.categorical_threshold, 2.0);
        assert_eq!(s.pipeline.missing_policy, crate::data::MissingPolicy::FillNumeric(0.0));
    }
}
