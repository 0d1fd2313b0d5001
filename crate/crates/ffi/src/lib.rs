//! C ABI over `alm-svm`.
//!
//! Datasets and models are opaque heap handles released with their `_free`
//! function. Every fallible call returns an [`AlmStatus`]; on failure a
//! message for the calling thread is available from [`alm_last_error`].
//! Panics are caught at the boundary and reported as `ALM_STATUS_PANIC`.
//!
//! The generated header lives in `include/alm_svm.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use alm_svm::alm::{AlmError, SolverConfig, Task};
use alm_svm::data::{normalize_labels, read_libsvm_file, DataError, Dataset};
use alm_svm::metrics::{accuracy, fit, mse, Model};
use alm_svm::model_file::{load_model, save_model, ModelFileError};
use alm_svm::synthetic::default_c;

pub const ALM_TASK_SVC: i32 = 0;
pub const ALM_TASK_SVR: i32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Solver = 5,
    Panic = 6,
}

/// Training options. Fill with [`alm_params_default`] and override fields.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AlmParams {
    /// `ALM_TASK_SVC` or `ALM_TASK_SVR`.
    pub task: i32,
    /// Penalty. Zero selects `550 / m` for classification and
    /// `5 / n_features` for regression.
    pub c: f64,
    pub epsilon: f64,
    pub sigma0: f64,
    pub sigma_max: f64,
    pub theta: f64,
    pub max_outer: u32,
    pub tol: f64,
    /// Append a constant feature; its weight is the last one.
    pub bias: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AlmReport {
    pub outer_iterations: usize,
    pub newton_iterations: usize,
    pub cg_iterations: usize,
    pub time_seconds: f64,
    pub kkt_residual: f64,
    pub relative_gap: f64,
    pub objective: f64,
    pub converged: bool,
}

/// Opaque dataset handle.
pub struct AlmDataset(Dataset);

/// Opaque model handle.
pub struct AlmModel(Model);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

type Outcome<T> = Result<T, (AlmStatus, String)>;

fn fail<T>(status: AlmStatus, msg: impl Into<String>) -> Outcome<T> {
    Err((status, msg.into()))
}

/// Runs `body`, records its error message and converts panics.
fn guard(body: impl FnOnce() -> Outcome<()>) -> AlmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            AlmStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AlmStatus::Panic
        }
    }
}

fn data_status(e: &DataError) -> AlmStatus {
    match e {
        DataError::Io(_) => AlmStatus::Io,
        DataError::Parse { .. } => AlmStatus::Parse,
        _ => AlmStatus::InvalidArgument,
    }
}

fn model_status(e: &ModelFileError) -> AlmStatus {
    match e {
        ModelFileError::Io(_) => AlmStatus::Io,
        ModelFileError::Parse { .. } => AlmStatus::Parse,
        ModelFileError::NonFinite(_) => AlmStatus::InvalidArgument,
    }
}

fn task_of(code: i32) -> Outcome<Task> {
    match code {
        ALM_TASK_SVC => Ok(Task::Svc),
        ALM_TASK_SVR => Ok(Task::Svr),
        other => fail(AlmStatus::InvalidArgument, format!("unknown task code {other}")),
    }
}

unsafe fn path_arg(path: *const c_char) -> Outcome<String> {
    if path.is_null() {
        return fail(AlmStatus::NullPointer, "path is null");
    }
    CStr::from_ptr(path)
        .to_str()
        .map(str::to_owned)
        .or_else(|_| fail(AlmStatus::InvalidArgument, "path is not valid UTF-8"))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Outcome<&'a T> {
    p.as_ref().map_or_else(|| fail(AlmStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, want: usize) -> Outcome<&'a mut [f64]> {
    if p.is_null() {
        return fail(AlmStatus::NullPointer, "output buffer is null");
    }
    if len < want {
        return fail(AlmStatus::InvalidArgument, format!("output buffer holds {len} values, need {want}"));
    }
    Ok(std::slice::from_raw_parts_mut(p, want))
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn alm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn alm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Writes the default options for `task` into `out`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `AlmParams`.
#[no_mangle]
pub unsafe extern "C" fn alm_params_default(task: i32, out: *mut AlmParams) -> AlmStatus {
    guard(|| {
        let t = task_of(task)?;
        if out.is_null() {
            return fail(AlmStatus::NullPointer, "params is null");
        }
        let cfg = SolverConfig::for_task(t);
        out.write(AlmParams {
            task,
            c: 0.0,
            epsilon: 0.1,
            sigma0: cfg.sigma0,
            sigma_max: cfg.sigma_max,
            theta: cfg.theta,
            max_outer: cfg.max_outer as u32,
            tol: cfg.kkt_tol,
            bias: false,
        });
        Ok(())
    })
}

/// Reads a LIBSVM-format file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn alm_dataset_load(path: *const c_char, out: *mut *mut AlmDataset) -> AlmStatus {
    guard(|| {
        if out.is_null() {
            return fail(AlmStatus::NullPointer, "out is null");
        }
        let path = path_arg(path)?;
        let data = read_libsvm_file(&path).map_err(|e| (data_status(&e), format!("{path}: {e}")))?;
        out.write(Box::into_raw(Box::new(AlmDataset(data))));
        Ok(())
    })
}

/// Builds a dataset from a row-major `rows x cols` matrix and `rows` labels.
/// Zero entries are dropped.
///
/// # Safety
/// `x` must hold `rows * cols` values and `labels` `rows` values.
#[no_mangle]
pub unsafe extern "C" fn alm_dataset_from_dense(
    x: *const f64,
    labels: *const f64,
    rows: usize,
    cols: usize,
    out: *mut *mut AlmDataset,
) -> AlmStatus {
    guard(|| {
        if out.is_null() || (rows > 0 && (labels.is_null() || (cols > 0 && x.is_null()))) {
            return fail(AlmStatus::NullPointer, "null argument");
        }
        let len = rows.checked_mul(cols).ok_or((AlmStatus::InvalidArgument, "rows * cols overflows".to_string()))?;
        let values = if len == 0 { &[][..] } else { std::slice::from_raw_parts(x, len) };
        let labels = if rows == 0 { &[][..] } else { std::slice::from_raw_parts(labels, rows) };
        if let Some(i) = values.iter().chain(labels).position(|v| !v.is_finite()) {
            return fail(AlmStatus::InvalidArgument, format!("non-finite input value at position {i}"));
        }
        let samples = (0..rows)
            .map(|i| (0..cols).filter_map(|j| Some((j, values[i * cols + j])).filter(|(_, v)| *v != 0.0)).collect())
            .collect();
        out.write(Box::into_raw(Box::new(AlmDataset(Dataset { samples, labels: labels.to_vec(), n_features: cols }))));
        Ok(())
    })
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn alm_dataset_rows(data: *const AlmDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.len())
}

/// Number of features; 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn alm_dataset_cols(data: *const AlmDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.n_features)
}

/// # Safety
/// `data` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn alm_dataset_free(data: *mut AlmDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Trains a model. `report` may be null.
///
/// # Safety
/// `data` and `params` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn alm_train(
    data: *const AlmDataset,
    params: *const AlmParams,
    out: *mut *mut AlmModel,
    report: *mut AlmReport,
) -> AlmStatus {
    guard(|| {
        let data = &handle(data, "dataset")?.0;
        let p = *handle(params, "params")?;
        if out.is_null() {
            return fail(AlmStatus::NullPointer, "out is null");
        }
        let task = task_of(p.task)?;
        if data.is_empty() {
            return fail(AlmStatus::InvalidArgument, "training set is empty");
        }
        let cfg = SolverConfig {
            sigma0: p.sigma0,
            sigma_max: p.sigma_max,
            theta: p.theta,
            max_outer: p.max_outer as usize,
            kkt_tol: p.tol,
            ..SolverConfig::for_task(task)
        };
        let c = if p.c == 0.0 { default_c(task, data.len(), data.n_features.max(1)) } else { p.c };
        let (train, map) = match task {
            Task::Svc => {
                let (d, map) = normalize_labels(data.clone()).map_err(|e| (data_status(&e), e.to_string()))?;
                (d, Some(map))
            }
            Task::Svr => (data.clone(), None),
        };
        let (model, r) = fit(task, &train, map, c, p.epsilon, p.bias, &cfg).map_err(|e| match e {
            AlmError::InvalidProblem(_) | AlmError::InvalidConfig(_) => (AlmStatus::InvalidArgument, e.to_string()),
            other => (AlmStatus::Solver, other.to_string()),
        })?;
        if !report.is_null() {
            report.write(AlmReport {
                outer_iterations: r.k,
                newton_iterations: r.it_sn,
                cg_iterations: r.it_cg,
                time_seconds: r.time_seconds,
                kkt_residual: r.kkt_residual,
                relative_gap: r.relative_gap,
                objective: r.objective,
                converged: r.converged,
            });
        }
        out.write(Box::into_raw(Box::new(AlmModel(model))));
        Ok(())
    })
}

/// Predicts every sample of `data` into `out[0..rows]`: labels in the
/// original label space for classification, scores for regression.
///
/// # Safety
/// `out` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn alm_model_predict(
    model: *const AlmModel,
    data: *const AlmDataset,
    out: *mut f64,
    len: usize,
) -> AlmStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        let data = &handle(data, "dataset")?.0;
        let out = out_slice(out, len, data.len())?;
        for (o, x) in out.iter_mut().zip(&data.samples) {
            *o = model.predict(x);
        }
        Ok(())
    })
}

/// Predicts one dense sample of `n` features.
///
/// # Safety
/// `x` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn alm_model_predict_dense(
    model: *const AlmModel,
    x: *const f64,
    n: usize,
    out: *mut f64,
) -> AlmStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        if out.is_null() || (n > 0 && x.is_null()) {
            return fail(AlmStatus::NullPointer, "null argument");
        }
        let x = if n == 0 { &[][..] } else { std::slice::from_raw_parts(x, n) };
        let sample: Vec<(usize, f64)> = x.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
        out.write(model.predict(&sample));
        Ok(())
    })
}

/// Accuracy in percent for classification models, mean squared error for
/// regression models.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn alm_model_evaluate(model: *const AlmModel, data: *const AlmDataset, out: *mut f64) -> AlmStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        let data = &handle(data, "dataset")?.0;
        if out.is_null() {
            return fail(AlmStatus::NullPointer, "out is null");
        }
        out.write(match model.task {
            Task::Svc => accuracy(model, data),
            Task::Svr => mse(model, data),
        });
        Ok(())
    })
}

/// Number of weights, including the bias weight; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn alm_model_num_weights(model: *const AlmModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.n())
}

/// Copies the weights into `out`.
///
/// # Safety
/// `out` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn alm_model_weights(model: *const AlmModel, out: *mut f64, len: usize) -> AlmStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        out_slice(out, len, model.n())?.copy_from_slice(&model.w);
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn alm_model_save(model: *const AlmModel, path: *const c_char) -> AlmStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        let path = path_arg(path)?;
        save_model(model, &path).map_err(|e| (model_status(&e), format!("{path}: {e}")))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn alm_model_load(path: *const c_char, out: *mut *mut AlmModel) -> AlmStatus {
    guard(|| {
        if out.is_null() {
            return fail(AlmStatus::NullPointer, "out is null");
        }
        let path = path_arg(path)?;
        let model = load_model(&path).map_err(|e| (model_status(&e), format!("{path}: {e}")))?;
        out.write(Box::into_raw(Box::new(AlmModel(model))));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn alm_model_free(model: *mut AlmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
