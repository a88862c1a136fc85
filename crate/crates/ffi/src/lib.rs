//! C ABI over the `cebmdc` crate.
//!
//! Datasets and partitions cross the boundary as opaque handles that the
//! caller releases with the matching `_free` function. Every function returns
//! a [`CebmdcStatus`]; on failure a description is available from
//! [`cebmdc_last_error_message`] on the same thread. Strings returned through
//! out-parameters are owned by the caller and released with
//! [`cebmdc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cebmdc::data::{load_csv, split_dataset, ColumnScope, MissingPolicy, MixedDataset, Schema};
use cebmdc::eval::{accuracy, class_labels};
use cebmdc::kmeans::NumericClustererConfig;
use cebmdc::partition::Partition;
use cebmdc::pipeline::{prepare, run_cebmdc, PipelineConfig};
use cebmdc::squeezer::{squeezer, SqueezerConfig, WeightVector};
use cebmdc::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CebmdcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidArgument = 5,
    Data = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CebmdcMissingPolicy {
    TreatAsCategory = 0,
    DropRow = 1,
    FillNumeric = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CebmdcColumnScope {
    All = 0,
    Numeric = 1,
    Categorical = 2,
}

/// Pipeline settings. Start from [`cebmdc_pipeline_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CebmdcPipelineConfig {
    pub categorical_threshold: f64,
    /// When nonzero the categorical threshold is searched for this many
    /// clusters and `categorical_threshold` is ignored.
    pub categorical_target_k: usize,
    pub numeric_k: usize,
    pub numeric_seed: u64,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub ensemble_threshold_norm: f64,
    /// Both zero means the default (m_c, m_n) weights.
    pub weight_categorical: f64,
    pub weight_numeric: f64,
    pub missing_policy: CebmdcMissingPolicy,
    /// Used by `DropRow`.
    pub missing_scope: CebmdcColumnScope,
    /// Used by `FillNumeric`.
    pub fill_value: f64,
}

/// Opaque dataset handle.
pub struct CebmdcDataset(MixedDataset);

/// Opaque partition handle.
pub struct CebmdcPartition(Partition);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CebmdcStatus {
    match e {
        Error::Io { .. } | Error::Fetch { .. } => CebmdcStatus::Io,
        Error::Csv { .. }
        | Error::Schema(_)
        | Error::ColumnCount { .. }
        | Error::NotNumeric { .. }
        | Error::Config(_) => CebmdcStatus::Parse,
        Error::InvalidArgument(_) => CebmdcStatus::InvalidArgument,
        _ => CebmdcStatus::Data,
    }
}

struct Failure(CebmdcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status plus last-error text.
fn guard<F>(f: F) -> CebmdcStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CebmdcStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {message}"));
            CebmdcStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(CebmdcStatus::NullArgument, format!("`{name}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CebmdcStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

fn without(ds: &MixedDataset, column: Option<&str>) -> Result<MixedDataset, Failure> {
    match column {
        Some(name) => Ok(ds.take_column(name)?.0),
        None => Ok(ds.clone()),
    }
}

impl CebmdcPipelineConfig {
    fn to_config(self) -> Result<PipelineConfig, Failure> {
        let mut numeric = NumericClustererConfig::new(self.numeric_k);
        numeric.seed = self.numeric_seed;
        numeric.max_iterations = self.max_iterations;
        numeric.convergence_tol = self.convergence_tol;
        let weights = match (self.weight_categorical, self.weight_numeric) {
            (c, n) if c == 0.0 && n == 0.0 => None,
            (c, n) => Some([c, n]),
        };
        let missing_policy = match self.missing_policy {
            CebmdcMissingPolicy::TreatAsCategory => MissingPolicy::TreatAsCategory,
            CebmdcMissingPolicy::FillNumeric => MissingPolicy::FillNumeric(self.fill_value),
            CebmdcMissingPolicy::DropRow => MissingPolicy::DropRow(match self.missing_scope {
                CebmdcColumnScope::All => ColumnScope::All,
                CebmdcColumnScope::Numeric => ColumnScope::Numeric,
                CebmdcColumnScope::Categorical => ColumnScope::Categorical,
            }),
        };
        let cfg = PipelineConfig {
            categorical_threshold: self.categorical_threshold,
            categorical_target_k: (self.categorical_target_k > 0).then_some(self.categorical_target_k),
            numeric,
            ensemble_threshold_norm: self.ensemble_threshold_norm,
            ensemble_weights: weights,
            missing_policy,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Library defaults: threshold 1, k_n = 4, s_norm = 0.5, missing categorical
/// cells treated as their own category.
#[no_mangle]
pub extern "C" fn cebmdc_pipeline_config_default() -> CebmdcPipelineConfig {
    let d = PipelineConfig::default();
    CebmdcPipelineConfig {
        categorical_threshold: d.categorical_threshold,
        categorical_target_k: 0,
        numeric_k: d.numeric.k,
        numeric_seed: d.numeric.seed,
        max_iterations: d.numeric.max_iterations,
        convergence_tol: d.numeric.convergence_tol,
        ensemble_threshold_norm: d.ensemble_threshold_norm,
        weight_categorical: 0.0,
        weight_numeric: 0.0,
        missing_policy: CebmdcMissingPolicy::TreatAsCategory,
        missing_scope: CebmdcColumnScope::All,
        fill_value: 0.0,
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cebmdc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, freed only once.
#[no_mangle]
pub unsafe extern "C" fn cebmdc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a CSV described by a schema sidecar.
///
/// # Safety
/// Paths must be valid NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cebmdc_dataset_load(
    csv_path: *const c_char,
    schema_path: *const c_char,
    out_dataset: *mut *mut CebmdcDataset,
) -> CebmdcStatus {
    guard(|| {
        let slot = out(out_dataset, "out_dataset")?;
        *slot = ptr::null_mut();
        let csv_path = str_arg(csv_path, "csv_path")?;
        let schema = Schema::from_sidecar(str_arg(schema_path, "schema_path")?)?;
        let ds = load_csv(csv_path, &schema)?;
        *slot = Box::into_raw(Box::new(CebmdcDataset(ds)));
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a handle from this library, freed only once.
#[no_mangle]
pub unsafe extern "C" fn cebmdc_dataset_free(ds: *mut CebmdcDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Row count, attribute counts by kind.
///
/// # Safety
/// `ds` must be a live handle; out pointers may be null to skip a value.
#[no_mangle]
pub unsafe extern "C" fn cebmdc_dataset_shape(
    ds: *const CebmdcDataset,
    out_rows: *mut usize,
    out_categorical: *mut usize,
    out_numeric: *mut usize,
) -> CebmdcStatus {
    guard(|| {
        let ds = &handle(ds, "ds")?.0;
        if let Some(p) = out_rows.as_mut() {
            *p = ds.len();
        }
        if let Some(p) = out_categorical.as_mut() {
            *p = ds.schema().categorical_count();
        }
        if let Some(p) = out_numeric.as_mut() {
            *p = ds.schema().numeric_count();
        }
        Ok(())
    })
}

/// Runs the full pipeline. `exclude_column` (nullable) names a column, such
/// as the class, left out of clustering. `out_report_json` (nullable)
/// receives the run report as JSON.
///
/// # Safety
/// `ds` and `cfg` must be valid; out pointers must be writable or null where
/// documented.
#[no_mangle]
pub unsafe extern "C" fn cebmdc_run(
    ds: *const CebmdcDataset,
    cfg: *const CebmdcPipelineConfig,
    exclude_column: *const c_char,
    out_partition: *mut *mut CebmdcPartition,
    out_report_json: *mut *mut c_char,
) -> CebmdcStatus {
    guard(|| {
        let slot = out(out_partition, "out_partition")?;
        *slot = ptr::null_mut();
        if let Some(r) = out_report_json.as_mut() {
            *r = ptr::null_mut();
        }
        let cfg = handle(cfg, "cfg")?.to_config()?;
        let ds = without(&handle(ds, "ds")?.0, opt_str_arg(exclude_column, "exclude_column")?)?;
        let (part, report) = run_cebmdc(&ds, &cfg)?;
        if let Some(r) = out_report_json.as_mut() {
            *r = owned_string(report.to_json());
        }
        *slot = Box::into_raw(Box::new(CebmdcPartition(part)));
        Ok(())
    })
}

/// Clusters the categorical attributes alone with Squeezer. `weights` holds
/// one weight per categorical attribute, or is null for unit weights.
///
/// # Safety
/// `weights` must point to `n_weights` doubles when non-null.
#[no_mangle]
pub unsafe extern "C" fn cebmdc_squeezer(
    ds: *const CebmdcDataset,
    exclude_column: *const c_char,
    threshold: f64,
    weights: *const f64,
    n_weights: usize,
    out_partition: *mut *mut CebmdcPartition,
) -> CebmdcStatus {
    guard(|| {
        let slot = out(out_partition, "out_partition")?;
        *slot = ptr::null_mut();
        let ds = without(&handle(ds, "ds")?.0, opt_str_arg(exclude_column, "exclude_column")?)?;
        let (cat, _) = split_dataset(&prepare(&ds, &MissingPolicy::TreatAsCategory)?);
        let weights = if weights.is_null() {
            WeightVector::unit(cat.schema().len())?
        } else {
            WeightVector::new(std::slice::from_raw_parts(weights, n_weights).to_vec())?
        };
        let part = squeezer(&cat, &SqueezerConfig::new(threshold, weights)?)?;
        *slot = Box::into_raw(Box::new(CebmdcPartition(part)));
        Ok(())
    })
}

/// Accuracy r of a partition against a class column of `ds`.
///
/// # Safety
/// Handles must be live; `out_r` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cebmdc_accuracy(
    part: *const CebmdcPartition,
    ds: *const CebmdcDataset,
    class_column: *const c_char,
    out_r: *mut f64,
) -> CebmdcStatus {
    guard(|| {
        let slot = out(out_r, "out_r")?;
        let part = &handle(part, "part")?.0;
        let (_, column) = handle(ds, "ds")?.0.take_column(str_arg(class_column, "class_column")?)?;
        *slot = accuracy(part, &class_labels(&column))?.r;
        Ok(())
    })
}

/// # Safety
/// `part` must be null or a handle from this library, freed only once.
#[no_mangle]
pub unsafe extern "C" fn cebmdc_partition_free(part: *mut CebmdcPartition) {
    if !part.is_null() {
        drop(Box::from_raw(part));
    }
}

/// Number of labeled rows and clusters.
///
/// # Safety
/// `part` must be live; out pointers may be null to skip a value.
#[no_mangle]
pub unsafe extern "C" fn cebmdc_partition_shape(
    part: *const CebmdcPartition,
    out_len: *mut usize,
    out_k: *mut usize,
) -> CebmdcStatus {
    guard(|| {
        let part = &handle(part, "part")?.0;
        if let Some(p) = out_len.as_mut() {
            *p = part.len();
        }
        if let Some(p) = out_k.as_mut() {
            *p = part.k();
        }
        Ok(())
    })
}

/// Copies tids and 1-based cluster labels, in dataset row order, into
/// caller buffers of `capacity` entries. Either buffer may be null.
///
/// # Safety
/// Non-null buffers must hold `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn cebmdc_partition_copy(
    part: *const CebmdcPartition,
    tids: *mut u64,
    labels: *mut usize,
    capacity: usize,
) -> CebmdcStatus {
    guard(|| {
        let part = &handle(part, "part")?.0;
        if capacity < part.len() {
            return Err(Failure(
                CebmdcStatus::BufferTooSmall,
                format!("capacity {capacity} below partition length {}", part.len()),
            ));
        }
        if !tids.is_null() {
            std::slice::from_raw_parts_mut(tids, part.len()).copy_from_slice(part.tids());
        }
        if !labels.is_null() {
            std::slice::from_raw_parts_mut(labels, part.len()).copy_from_slice(part.labels());
        }
        Ok(())
    })
}

/// Relabeling-invariant hash of the grouping, as 16 hex digits.
///
/// # Safety
/// `part` must be live; `out_fingerprint` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cebmdc_partition_fingerprint(
    part: *const CebmdcPartition,
    out_fingerprint: *mut *mut c_char,
) -> CebmdcStatus {
    guard(|| {
        let slot = out(out_fingerprint, "out_fingerprint")?;
        *slot = owned_string(handle(part, "part")?.0.fingerprint());
        Ok(())
    })
}
