//! C interface to model loading, story generation and the text metrics.
//!
//! Conventions:
//! - Every fallible function returns a `SocpStatus`; on failure a message is
//!   kept per thread and read with `socp_last_error_message`.
//! - Strings going in are NUL-terminated UTF-8 and are only borrowed.
//! - Strings coming out are owned by the caller and released with
//!   `socp_string_free`; models with `socp_model_free`.
//! - Panics never cross the boundary; they surface as `SOCP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use socp::corpus::tokenize;
use socp::evaluation::{bleu, meteor_lite, rouge, RougeVariant};
use socp::interface::api;
use socp::{Error, Model};

/// Outcome of a call. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SocpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    MalformedJson = 3,
    /// Well-formed input that fails validation (labels, arc lengths, ...).
    InvalidRequest = 4,
    Io = 5,
    Checkpoint = 6,
    /// Any other library error; the message carries its code.
    Internal = 7,
    Panic = 8,
}

/// Loaded model. Immutable after loading, so one handle may be shared by
/// threads that only call `socp_generate_json` and `socp_labels_json`.
pub struct SocpModel {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: SocpStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::MalformedJson(_) | Error::Json(_) => SocpStatus::MalformedJson,
            Error::Io { .. } => SocpStatus::Io,
            Error::Checkpoint(_) => SocpStatus::Checkpoint,
            other if api::status_code(other) == 422 => SocpStatus::InvalidRequest,
            _ => SocpStatus::Internal,
        };
        let field = e.field().map(|f| format!(" (field `{f}`)")).unwrap_or_default();
        Failure {
            status,
            message: format!("{}: {e}{field}", e.code()),
        }
    }
}

fn fail(status: SocpStatus, message: impl Into<String>) -> Failure {
    Failure {
        status,
        message: message.into(),
    }
}

fn set_last_error(message: Option<String>) {
    let c = message.map(|m| CString::new(m.replace('\0', " ")).expect("interior NULs removed"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SocpStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|payload| {
        let what = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(fail(SocpStatus::Panic, format!("PANIC: {what}")))
    });
    match outcome {
        Ok(()) => {
            set_last_error(None);
            SocpStatus::Ok
        }
        Err(f) => {
            set_last_error(Some(f.message));
            f.status
        }
    }
}

/// Borrows a C string as UTF-8.
///
/// # Safety
/// `p` is null or points to a NUL-terminated string live for `'a`.
unsafe fn borrow_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(SocpStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SocpStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

/// # Safety
/// `p` is null or writable for `'a`.
unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(SocpStatus::NullArgument, format!("`{name}` is null")))
}

fn into_c_string(bytes: Vec<u8>) -> Result<*mut c_char, Failure> {
    CString::new(bytes)
        .map(CString::into_raw)
        .map_err(|_| fail(SocpStatus::Internal, "output contains a NUL byte"))
}

/// Loads a checkpoint. On success `*out` owns a new handle.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn socp_model_load(path: *const c_char, out: *mut *mut SocpModel) -> SocpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let path = borrow_str(path, "path")?;
        let model = Model::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(SocpModel { model }));
        Ok(())
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` came from `socp_model_load` and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn socp_model_free(model: *mut SocpModel) {
    if !model.is_null() {
        // A panicking destructor must not unwind into C.
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(model))));
    }
}

/// Runs a generation request (the HTTP `/generate` body) and writes the
/// response JSON to `*out`.
///
/// # Safety
/// `model` is a live handle, `request_json` a NUL-terminated string, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn socp_generate_json(
    model: *const SocpModel,
    request_json: *const c_char,
    out: *mut *mut c_char,
) -> SocpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let model = model.as_ref().ok_or_else(|| fail(SocpStatus::NullArgument, "`model` is null"))?;
        let body = borrow_str(request_json, "request_json")?;
        *out = into_c_string(api::generate_json(Some(&model.model), body.as_bytes())?)?;
        Ok(())
    })
}

/// Writes the model's label inventories (the `/labels` body) to `*out`.
///
/// # Safety
/// `model` is a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn socp_labels_json(model: *const SocpModel, out: *mut *mut c_char) -> SocpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let model = model.as_ref().ok_or_else(|| fail(SocpStatus::NullArgument, "`model` is null"))?;
        *out = into_c_string(api::labels_json(&model.model)?)?;
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` came from this library and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn socp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the most recent failed call on this thread, or null if the
/// most recent call succeeded. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn socp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn socp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a JSON array of sentences into token lists.
fn sentences(json: &str, name: &str) -> Result<Vec<Vec<String>>, Failure> {
    let list: Vec<String> = serde_json::from_str(json)
        .map_err(|e| fail(SocpStatus::MalformedJson, format!("`{name}` is not a JSON array of strings: {e}")))?;
    Ok(list.iter().map(|s| tokenize(s)).collect())
}

/// Shared body of the metric entry points.
///
/// # Safety
/// As for the public metric functions.
unsafe fn metric(
    candidates_json: *const c_char,
    references_json: *const c_char,
    out: *mut f64,
    score: impl FnOnce(&[Vec<String>], &[Vec<String>]) -> socp::Result<f64>,
) -> SocpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let c = sentences(borrow_str(candidates_json, "candidates_json")?, "candidates_json")?;
        let r = sentences(borrow_str(references_json, "references_json")?, "references_json")?;
        *out = score(&c, &r)?;
        Ok(())
    })
}

/// Corpus BLEU-`n` of candidate sentences against references, both given as
/// JSON arrays of strings of equal length.
///
/// # Safety
/// Both inputs are NUL-terminated strings; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn socp_bleu(
    candidates_json: *const c_char,
    references_json: *const c_char,
    n: u32,
    out: *mut f64,
) -> SocpStatus {
    metric(candidates_json, references_json, out, |c, r| bleu(c, r, n as usize))
}

/// Mean ROUGE-L F1 over sentence pairs.
///
/// # Safety
/// As for `socp_bleu`.
#[no_mangle]
pub unsafe extern "C" fn socp_rouge_l(
    candidates_json: *const c_char,
    references_json: *const c_char,
    out: *mut f64,
) -> SocpStatus {
    metric(candidates_json, references_json, out, |c, r| rouge(c, r, RougeVariant::L))
}

/// Mean METEOR-lite over sentence pairs.
///
/// # Safety
/// As for `socp_bleu`.
#[no_mangle]
pub unsafe extern "C" fn socp_meteor_lite(
    candidates_json: *const c_char,
    references_json: *const c_char,
    out: *mut f64,
) -> SocpStatus {
    metric(candidates_json, references_json, out, meteor_lite)
}
