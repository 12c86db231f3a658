//! C interface to the blm toolkit.
//!
//! Models and contracts are opaque handles released with their `_free`
//! function. Every fallible call returns a [`BlmStatus`]; on failure the
//! message is available from [`blm_last_error`] on the same thread. Strings
//! handed out through `char **` parameters belong to the caller and are
//! released with [`blm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use blm::audit::{impact, Verdict};
use blm::blps;
use blm::integrate::{integrate, BindingSpec, IntegrationError};
use blm::{abstract_flow, build_flow, evaluate_all, load_contract, parse_source, print_model, Contract, LogicModel};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    SchemaError = 4,
    ContractError = 5,
    FlowError = 6,
    IntegrationError = 7,
    /// The call completed but reported integration violations.
    Violations = 8,
    UnknownService = 9,
    Panic = 10,
}

/// Parsed logic model.
pub struct BlmModel {
    inner: LogicModel,
}

/// Loaded contract.
pub struct BlmContract {
    inner: Contract,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(BlmStatus, String);

impl Fail {
    fn new(status: BlmStatus, msg: impl ToString) -> Fail {
        Fail(status, msg.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<BlmStatus, Fail>) -> BlmStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BlmStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::new(BlmStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::new(BlmStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn model<'a>(p: *const BlmModel, what: &str) -> Result<&'a LogicModel, Fail> {
    p.as_ref().map(|m| &m.inner).ok_or_else(|| Fail::new(BlmStatus::NullArgument, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut *mut T) -> Result<&'a mut *mut T, Fail> {
    let slot = p.as_mut().ok_or_else(|| Fail::new(BlmStatus::NullArgument, "output pointer is null"))?;
    *slot = ptr::null_mut();
    Ok(slot)
}

fn into_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

fn contract_or_default(p: *const BlmContract) -> Contract {
    // SAFETY: callers pass either null or a handle from blm_contract_load.
    unsafe { p.as_ref() }.map(|c| c.inner.clone()).unwrap_or_default()
}

/// Parses model source text into `*out`.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blm_model_parse(source: *const c_char, out: *mut *mut BlmModel) -> BlmStatus {
    guard(|| {
        let slot = out_ptr(out)?;
        let src = text(source, "source")?;
        let inner = parse_source(src).map_err(|e| Fail::new(BlmStatus::ParseError, e))?;
        *slot = Box::into_raw(Box::new(BlmModel { inner }));
        Ok(BlmStatus::Ok)
    })
}

/// Reads a BLPS document into `*out`.
///
/// # Safety
/// `xml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blm_model_from_blps(xml: *const c_char, out: *mut *mut BlmModel) -> BlmStatus {
    guard(|| {
        let slot = out_ptr(out)?;
        let xml = text(xml, "xml")?;
        let doc = blps::deserialize(xml).map_err(|e| Fail::new(BlmStatus::SchemaError, e))?;
        let inner = blps::to_model(&doc).map_err(|e| Fail::new(BlmStatus::SchemaError, e))?;
        *slot = Box::into_raw(Box::new(BlmModel { inner }));
        Ok(BlmStatus::Ok)
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn blm_model_free(model: *mut BlmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Canonical source text of the model.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blm_model_print(model: *const BlmModel, out: *mut *mut c_char) -> BlmStatus {
    guard(|| {
        let slot = out_ptr(out)?;
        *slot = into_c(print_model(self::model(model, "model")?));
        Ok(BlmStatus::Ok)
    })
}

/// Number of services in the model, or -1 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn blm_model_service_count(model: *const BlmModel) -> i64 {
    model.as_ref().map(|m| m.inner.services.len() as i64).unwrap_or(-1)
}

/// Loads contract text into `*out`.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blm_contract_load(source: *const c_char, out: *mut *mut BlmContract) -> BlmStatus {
    guard(|| {
        let slot = out_ptr(out)?;
        let src = text(source, "source")?;
        let inner = load_contract(src).map_err(|e| Fail::new(BlmStatus::ContractError, e))?;
        *slot = Box::into_raw(Box::new(BlmContract { inner }));
        Ok(BlmStatus::Ok)
    })
}

/// # Safety
/// `contract` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn blm_contract_free(contract: *mut BlmContract) {
    if !contract.is_null() {
        drop(Box::from_raw(contract));
    }
}

/// Flow productions, concrete or abstract.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blm_flow(model: *const BlmModel, abstract_view: bool, out: *mut *mut c_char) -> BlmStatus {
    guard(|| {
        let slot = out_ptr(out)?;
        let m = self::model(model, "model")?;
        let graph = if abstract_view { abstract_flow(m) } else { build_flow(m) };
        *slot = into_c(graph.map_err(|e| Fail::new(BlmStatus::FlowError, e))?.to_string());
        Ok(BlmStatus::Ok)
    })
}

/// Evaluates the model and writes a BLPS document for `service`, or an
/// integrated document named `service` holding every service when the model
/// has none by that name. A null `contract` means the default contract.
///
/// # Safety
/// `model` must be a live handle, `contract` null or live, `service` a
/// NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blm_eval(
    model: *const BlmModel,
    contract: *const BlmContract,
    service: *const c_char,
    out: *mut *mut c_char,
) -> BlmStatus {
    guard(|| {
        let slot = out_ptr(out)?;
        let m = self::model(model, "model")?;
        let service = text(service, "service")?;
        let props = evaluate_all(m, &contract_or_default(contract)).map_err(|e| Fail::new(BlmStatus::FlowError, e))?;
        let doc = if m.service(service).is_some() {
            blps::generate_blps(m, &props, service).map_err(|e| Fail::new(BlmStatus::UnknownService, e))?
        } else {
            blps::generate_integrated_blps(m, &props, service)
        };
        *slot = into_c(blps::serialize(&doc));
        Ok(BlmStatus::Ok)
    })
}

/// Integrates `source` and `target` through `binding`
/// (`service.INDEX->target(var, var:param)`). On success `*out_blps` holds
/// the integrated document named `name`. When the binding breaks the
/// contract the status is `Violations` and `*out_violations` lists them one
/// per line; `out_violations` may be null.
///
/// # Safety
/// Handles must be live or null where documented, strings NUL-terminated,
/// `out_blps` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blm_integrate(
    source: *const BlmModel,
    target: *const BlmModel,
    binding: *const c_char,
    contract: *const BlmContract,
    name: *const c_char,
    out_blps: *mut *mut c_char,
    out_violations: *mut *mut c_char,
) -> BlmStatus {
    guard(|| {
        let slot = out_ptr(out_blps)?;
        let mut vslot = if out_violations.is_null() { None } else { Some(out_ptr(out_violations)?) };
        let a = self::model(source, "source")?;
        let b = self::model(target, "target")?;
        let name = text(name, "name")?;
        let spec =
            BindingSpec::parse(text(binding, "binding")?).map_err(|e| Fail::new(BlmStatus::IntegrationError, e))?;
        let contract = contract_or_default(contract);
        let result = integrate(a, b, &spec, &contract).map_err(|e| match e {
            IntegrationError::Flow(_) => Fail::new(BlmStatus::FlowError, e),
            _ => Fail::new(BlmStatus::IntegrationError, e),
        })?;
        if !result.violations.is_empty() {
            let mut listing = String::new();
            for v in &result.violations {
                let _ = writeln!(listing, "{v}");
            }
            set_error(format!("{} violation(s)", result.violations.len()));
            if let Some(v) = vslot.as_mut() {
                **v = into_c(listing);
            }
            return Ok(BlmStatus::Violations);
        }
        let doc = blps::generate_integrated_blps(&result.model, &result.properties, name);
        *slot = into_c(blps::serialize(&doc));
        Ok(BlmStatus::Ok)
    })
}

/// Compares `old` against `updated` under `contract` (null for the default). `*changed`
/// becomes 1 when any property set moved, 0 otherwise.
///
/// # Safety
/// Handles must be live, `contract` null or live, `changed` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blm_impact(
    old: *const BlmModel,
    updated: *const BlmModel,
    contract: *const BlmContract,
    changed: *mut i32,
) -> BlmStatus {
    guard(|| {
        let changed = changed.as_mut().ok_or_else(|| Fail::new(BlmStatus::NullArgument, "changed is null"))?;
        let a = self::model(old, "old")?;
        let b = self::model(updated, "updated")?;
        let report = impact(a, b, &contract_or_default(contract)).map_err(|e| Fail::new(BlmStatus::FlowError, e))?;
        *changed = i32::from(report.verdict == Verdict::PropertiesChanged);
        Ok(BlmStatus::Ok)
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn blm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn blm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map(|s| s.as_ptr()).unwrap_or(ptr::null()))
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn blm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
