use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use blm_ffi::*;

fn fixture(name: &str) -> CString {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name);
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { blm_string_free(s) };
    out
}

fn last_error() -> String {
    let p = blm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn parse(name: &str) -> *mut BlmModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { blm_model_parse(fixture(name).as_ptr(), &mut m) }, BlmStatus::Ok);
    m
}

fn contract() -> *mut BlmContract {
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { blm_contract_load(fixture("epay.ctr").as_ptr(), &mut c) }, BlmStatus::Ok);
    c
}

#[test]
fn eval_matches_golden_document() {
    let (m, c) = (parse("billing.blm"), contract());
    let svc = CString::new("billing").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { blm_eval(m, c, svc.as_ptr(), &mut out) }, BlmStatus::Ok);
    assert_eq!(take(out), fixture("golden/billing.blps.xml").to_str().unwrap());
    assert!(blm_last_error().is_null());
    unsafe {
        blm_model_free(m);
        blm_contract_free(c);
    }
}

#[test]
fn abstract_flow_and_blps_reload() {
    let m = parse("billing.blm");
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { blm_flow(m, true, &mut out) }, BlmStatus::Ok);
    assert_eq!(take(out), fixture("golden/billing.abstract.flow").to_str().unwrap());

    let mut reloaded = ptr::null_mut();
    let xml = fixture("golden/transact.blps.xml");
    assert_eq!(unsafe { blm_model_from_blps(xml.as_ptr(), &mut reloaded) }, BlmStatus::Ok);
    assert_eq!(unsafe { blm_model_service_count(reloaded) }, 1);
    let mut src = ptr::null_mut();
    assert_eq!(unsafe { blm_model_print(reloaded, &mut src) }, BlmStatus::Ok);
    assert!(take(src).contains("service transact as transaction"));
    unsafe {
        blm_model_free(m);
        blm_model_free(reloaded);
    }
}

#[test]
fn integrate_reports_violations() {
    let (a, b, c) = (parse("billing.blm"), parse("transact.blm"), contract());
    let name = CString::new("e-billing").unwrap();
    let good = CString::new("billing.BFf1->transact(accno, amount, accno1)").unwrap();
    let (mut doc, mut violations) = (ptr::null_mut(), ptr::null_mut());
    let status = unsafe { blm_integrate(a, b, good.as_ptr(), c, name.as_ptr(), &mut doc, &mut violations) };
    assert_eq!(status, BlmStatus::Ok);
    assert!(violations.is_null());
    assert_eq!(take(doc), fixture("golden/e-billing.blps.xml").to_str().unwrap());

    let bad = CString::new("billing.BF1->transact(accno, amount, accno1)").unwrap();
    let status = unsafe { blm_integrate(a, b, bad.as_ptr(), c, name.as_ptr(), &mut doc, &mut violations) };
    assert_eq!(status, BlmStatus::Violations);
    assert!(doc.is_null());
    let listing = take(violations);
    assert_eq!(listing.lines().count(), 1);
    assert!(listing.starts_with("AccessViolation billing.BF1"));

    let junk = CString::new("nonsense").unwrap();
    let status = unsafe { blm_integrate(a, b, junk.as_ptr(), c, name.as_ptr(), &mut doc, ptr::null_mut()) };
    assert_eq!(status, BlmStatus::IntegrationError);
    assert!(last_error().contains("nonsense"));
    unsafe {
        blm_model_free(a);
        blm_model_free(b);
        blm_contract_free(c);
    }
}

#[test]
fn impact_flags_property_changes() {
    let (old, c) = (parse("transact.blm"), contract());
    let mut changed = -1;
    for (name, want) in [("transact-threshold5000.blm", 0), ("transact-no-drr2.blm", 1)] {
        let new = parse(name);
        assert_eq!(unsafe { blm_impact(old, new, c, &mut changed) }, BlmStatus::Ok);
        assert_eq!(changed, want, "{name}");
        unsafe { blm_model_free(new) };
    }
    unsafe {
        blm_model_free(old);
        blm_contract_free(c);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut m = ptr::null_mut();
    let bad = CString::new("service s {\n  BF1: frobnicate\n}").unwrap();
    assert_eq!(unsafe { blm_model_parse(bad.as_ptr(), &mut m) }, BlmStatus::ParseError);
    assert!(m.is_null());
    assert!(last_error().contains("2:"));

    assert_eq!(unsafe { blm_model_parse(ptr::null(), &mut m) }, BlmStatus::NullArgument);
    assert_eq!(unsafe { blm_model_parse(bad.as_ptr(), ptr::null_mut()) }, BlmStatus::NullArgument);

    let invalid = [0xffu8, 0xfe, 0];
    assert_eq!(unsafe { blm_model_parse(invalid.as_ptr().cast(), &mut m) }, BlmStatus::InvalidUtf8);

    let mut c = ptr::null_mut();
    let no_header = CString::new("contract c\nbudget 1\n").unwrap();
    assert_eq!(unsafe { blm_contract_load(no_header.as_ptr(), &mut c) }, BlmStatus::ContractError);

    let mut xml_model = ptr::null_mut();
    let broken = CString::new("<service name=\"x\">").unwrap();
    assert_eq!(unsafe { blm_model_from_blps(broken.as_ptr(), &mut xml_model) }, BlmStatus::SchemaError);

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { blm_flow(ptr::null(), false, &mut out) }, BlmStatus::NullArgument);
    assert_eq!(unsafe { blm_model_service_count(ptr::null()) }, -1);
    unsafe {
        blm_model_free(ptr::null_mut());
        blm_contract_free(ptr::null_mut());
        blm_string_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_per_thread() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { blm_model_parse(ptr::null(), &mut m) }, BlmStatus::NullArgument);
    std::thread::spawn(|| assert!(blm_last_error().is_null())).join().unwrap();
    assert!(!blm_last_error().is_null());
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(blm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
