//! C ABI over `tf4ctr`.
//!
//! Every function returns a [`Tf4Status`]; on failure the message is
//! available from [`tf4_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use tf4ctr::data::Batch;
use tf4ctr::diffcore::{Graph, ParamStore, Tensor, PROB_EPS};
use tf4ctr::losses::{loss_ctr, loss_focal, loss_tf, TfHyper};
use tf4ctr::metrics;
use tf4ctr::model::Tf4Ctr;
use tf4ctr::trainer::{load_run, run_experiment, ModelConfig};
use tf4ctr::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tf4Status {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    Config = 3,
    Data = 4,
    MissingCheckpoint = 5,
    MetricUndefined = 6,
    Internal = 7,
    Panic = 8,
}

/// Opaque experiment configuration.
pub struct Tf4Config {
    inner: ModelConfig,
}

/// Opaque trained model.
pub struct Tf4Model {
    inner: Tf4Ctr,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn status_of(err: &Error) -> Tf4Status {
    match err {
        Error::Config { .. } | Error::UnknownKey(_) | Error::Argument(_) => Tf4Status::Config,
        Error::Data(_) | Error::Csv(_) | Error::Index { .. } => Tf4Status::Data,
        Error::MissingCheckpoint(_) => Tf4Status::MissingCheckpoint,
        Error::MetricUndefined(_) => Tf4Status::MetricUndefined,
        _ => Tf4Status::Internal,
    }
}

enum Fail {
    Null(&'static str),
    Utf8(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> Tf4Status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            Tf4Status::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            Tf4Status::NullPointer
        }
        Ok(Err(Fail::Utf8(what))) => {
            set_error(format!("{what} is not valid UTF-8"));
            Tf4Status::InvalidString
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            Tf4Status::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Utf8(what))
}

unsafe fn slice_arg<'a, T>(p: *const T, n: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn tf4_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tf4_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New configuration holding the defaults.
#[no_mangle]
pub unsafe extern "C" fn tf4_config_new(out: *mut *mut Tf4Config) -> Tf4Status {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(Tf4Config {
            inner: ModelConfig::default(),
        }));
        Ok(())
    })
}

/// Configuration read from a `key = value` file.
#[no_mangle]
pub unsafe extern "C" fn tf4_config_from_file(path: *const c_char, out: *mut *mut Tf4Config) -> Tf4Status {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let inner = ModelConfig::from_file(Path::new(path))?;
        *out = Box::into_raw(Box::new(Tf4Config { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tf4_config_set(cfg: *mut Tf4Config, key: *const c_char, value: *const c_char) -> Tf4Status {
    guard(|| {
        let cfg = out_arg(cfg, "cfg")?;
        let key = str_arg(key, "key")?;
        let value = str_arg(value, "value")?;
        cfg.inner.set(key, value)?;
        Ok(())
    })
}

/// Copies the value of `key` into `buf` (NUL-terminated, truncated to
/// `len`); `needed` receives the full length including the NUL.
#[no_mangle]
pub unsafe extern "C" fn tf4_config_get(
    cfg: *const Tf4Config,
    key: *const c_char,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> Tf4Status {
    guard(|| {
        let cfg = cfg.as_ref().ok_or(Fail::Null("cfg"))?;
        let key = str_arg(key, "key")?;
        let value = cfg.inner.get(key)?;
        let bytes = value.as_bytes();
        if let Some(n) = needed.as_mut() {
            *n = bytes.len() + 1;
        }
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, k);
            *buf.add(k) = 0;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tf4_config_free(cfg: *mut Tf4Config) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Trains `cfg` into `out_dir`; on success `out` receives the best model.
#[no_mangle]
pub unsafe extern "C" fn tf4_train(
    cfg: *const Tf4Config,
    out_dir: *const c_char,
    out: *mut *mut Tf4Model,
) -> Tf4Status {
    guard(|| {
        let cfg = cfg.as_ref().ok_or(Fail::Null("cfg"))?;
        let dir = str_arg(out_dir, "out_dir")?;
        let out = out_arg(out, "out")?;
        let summary = run_experiment(&cfg.inner, Path::new(dir))?;
        *out = Box::into_raw(Box::new(Tf4Model {
            inner: summary.outcome.model,
        }));
        Ok(())
    })
}

/// Loads the best checkpoint of a run directory.
#[no_mangle]
pub unsafe extern "C" fn tf4_model_load(run_dir: *const c_char, out: *mut *mut Tf4Model) -> Tf4Status {
    guard(|| {
        let dir = str_arg(run_dir, "run_dir")?;
        let out = out_arg(out, "out")?;
        let loaded = load_run(Path::new(dir), None)?;
        *out = Box::into_raw(Box::new(Tf4Model { inner: loaded.model }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tf4_model_num_fields(model: *const Tf4Model, out: *mut usize) -> Tf4Status {
    guard(|| {
        let model = model.as_ref().ok_or(Fail::Null("model"))?;
        *out_arg(out, "out")? = model.inner.field_sizes.len();
        Ok(())
    })
}

/// Click probabilities for `n_rows` encoded rows (`ids` is row-major
/// `n_rows × n_fields`, id 0 is out-of-vocabulary). Writes `n_rows` values.
#[no_mangle]
pub unsafe extern "C" fn tf4_model_predict(
    model: *const Tf4Model,
    ids: *const u32,
    n_rows: usize,
    n_fields: usize,
    out_scores: *mut f64,
) -> Tf4Status {
    guard(|| {
        let model = model.as_ref().ok_or(Fail::Null("model"))?;
        let expected = model.inner.field_sizes.len();
        if n_fields != expected {
            return Err(Error::Data(format!("model has {expected} fields, got {n_fields}")).into());
        }
        let total = n_rows
            .checked_mul(n_fields)
            .ok_or(Error::Argument("size overflow".into()))?;
        let ids = slice_arg(ids, total, "ids")?;
        if n_rows == 0 {
            return Ok(());
        }
        if out_scores.is_null() {
            return Err(Fail::Null("out_scores"));
        }
        let batch = Batch {
            num_fields: n_fields,
            ids: ids.to_vec(),
            labels: vec![0.0; n_rows],
            user_ids: None,
        };
        let scores = model.inner.predict_batch(&batch)?;
        ptr::copy_nonoverlapping(scores.as_ptr(), out_scores, n_rows);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tf4_model_free(model: *mut Tf4Model) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

#[no_mangle]
pub unsafe extern "C" fn tf4_auc(scores: *const f64, labels: *const f64, n: usize, out: *mut f64) -> Tf4Status {
    guard(|| {
        let s = slice_arg(scores, n, "scores")?;
        let y = slice_arg(labels, n, "labels")?;
        *out_arg(out, "out")? = metrics::auc(s, y)?;
        Ok(())
    })
}

/// `present` is set to 0 when no group holds both classes.
#[no_mangle]
pub unsafe extern "C" fn tf4_gauc(
    scores: *const f64,
    labels: *const f64,
    groups: *const u32,
    n: usize,
    out: *mut f64,
    present: *mut i32,
) -> Tf4Status {
    guard(|| {
        let s = slice_arg(scores, n, "scores")?;
        let y = slice_arg(labels, n, "labels")?;
        let u = slice_arg(groups, n, "groups")?;
        let v = metrics::gauc(s, y, u)?;
        *out_arg(present, "present")? = i32::from(v.is_some());
        *out_arg(out, "out")? = v.unwrap_or(0.0);
        Ok(())
    })
}

fn probs(values: &[f64]) -> Tensor {
    Tensor::column(values.iter().map(|v| v.clamp(PROB_EPS, 1.0 - PROB_EPS)).collect())
}

/// Mean log loss of the label-aligned probabilities.
#[no_mangle]
pub unsafe extern "C" fn tf4_loss_ctr(y_hat: *const f64, labels: *const f64, n: usize, out: *mut f64) -> Tf4Status {
    guard(|| {
        let p = slice_arg(y_hat, n, "y_hat")?;
        let y = slice_arg(labels, n, "labels")?;
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let node = g.input(probs(p))?;
        let l = loss_ctr(&mut g, node, y)?;
        *out_arg(out, "out")? = g.value(l).item();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tf4_loss_focal(
    y_hat: *const f64,
    labels: *const f64,
    n: usize,
    gamma_f: f64,
    out: *mut f64,
) -> Tf4Status {
    guard(|| {
        let p = slice_arg(y_hat, n, "y_hat")?;
        let y = slice_arg(labels, n, "labels")?;
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let node = g.input(probs(p))?;
        let l = loss_focal(&mut g, node, y, gamma_f)?;
        *out_arg(out, "out")? = g.value(l).item();
        Ok(())
    })
}

/// Twin focus loss terms for simple-head `y_s` and complex-head `y_c`.
#[no_mangle]
pub unsafe extern "C" fn tf4_loss_tf(
    y_s: *const f64,
    y_c: *const f64,
    labels: *const f64,
    n: usize,
    alpha: f64,
    c: f64,
    gamma: f64,
    out_simple: *mut f64,
    out_complex: *mut f64,
    out_tf: *mut f64,
) -> Tf4Status {
    guard(|| {
        let ps = slice_arg(y_s, n, "y_s")?;
        let pc = slice_arg(y_c, n, "y_c")?;
        let y = slice_arg(labels, n, "labels")?;
        let hyper = TfHyper {
            alpha,
            c,
            gamma,
            ..TfHyper::default()
        };
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let s = g.input(probs(ps))?;
        let cn = g.input(probs(pc))?;
        let t = loss_tf(&mut g, s, cn, y, &hyper)?;
        *out_arg(out_simple, "out_simple")? = g.value(t.simple).item();
        *out_arg(out_complex, "out_complex")? = g.value(t.complex).item();
        *out_arg(out_tf, "out_tf")? = g.value(t.tf).item();
        Ok(())
    })
}
