use std::ffi::{c_char, c_int, CStr, CString};
use std::ptr;

use paraf_ffi::*;

fn last_error() -> String {
    let p = paraf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn take(s: *mut c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_string_lossy().into_owned();
    unsafe { paraf_string_free(s) };
    out
}

fn catalog(key: &str, params: Option<&str>) -> (ParafStatus, *mut ParafBundle) {
    let key = CString::new(key).unwrap();
    let params = params.map(|p| CString::new(p).unwrap());
    let mut b = ptr::null_mut();
    let st = unsafe { paraf_bundle_from_catalog(key.as_ptr(), params.as_ref().map_or(ptr::null(), |p| p.as_ptr()), &mut b) };
    (st, b)
}

#[test]
fn classify_through_handle() {
    let (st, b) = catalog("para_c_product", Some("a=2, n=1, p=2"));
    assert_eq!(st, ParafStatus::Ok);
    assert_eq!(unsafe { (paraf_bundle_dim(b), paraf_bundle_p(b)) }, (4, 2));
    let mut class = ptr::null_mut();
    assert_eq!(unsafe { paraf_classify(b, 20, 1, &mut class) }, ParafStatus::Ok);
    assert_eq!(take(class), "weak_para_C");
    unsafe { paraf_bundle_free(b) };
}

#[test]
fn error_codes_and_messages() {
    let (st, b) = catalog("para_sasakan_r3", None);
    assert_eq!(st, ParafStatus::UnknownKey);
    assert!(b.is_null());
    assert!(last_error().contains("para_sasakian_r3"));

    let (st, _) = catalog("para_c_product", Some("a=0"));
    assert_eq!(st, ParafStatus::Construction);
    assert!(last_error().contains("rank"));

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { paraf_bundle_from_text(ptr::null(), &mut out) }, ParafStatus::NullArgument);
    let empty = CString::new("").unwrap();
    assert_eq!(unsafe { paraf_bundle_from_text(empty.as_ptr(), &mut out) }, ParafStatus::Parse);
    assert!(last_error().contains("line 1"));

    let (st, b) = catalog("para_sasakian_r3", Some("eps=0.1"));
    assert_eq!(st, ParafStatus::Ok);
    let mut class = ptr::null_mut();
    assert_eq!(unsafe { paraf_classify(b, 10, 1, &mut class) }, ParafStatus::AxiomsFailed);
    unsafe { paraf_bundle_free(b) };

    assert_eq!(unsafe { paraf_bundle_dim(ptr::null()) }, 0);
}

#[test]
fn report_and_describe_round_trip() {
    let (_, b) = catalog("para_sasakian_r3", None);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { paraf_bundle_describe(b, &mut text) }, ParafStatus::Ok);
    let text = CString::new(take(text)).unwrap();
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { paraf_bundle_from_text(text.as_ptr(), &mut back) }, ParafStatus::Ok);

    let checks = CString::new("classify").unwrap();
    let mut json = ptr::null_mut();
    let mut code: c_int = -1;
    assert_eq!(unsafe { paraf_report_json(back, 10, 1, checks.as_ptr(), &mut json, &mut code) }, ParafStatus::Ok);
    assert_eq!(code, 0);
    assert!(take(json).contains("\"class\": \"para_S\""));
    unsafe {
        paraf_bundle_free(back);
        paraf_bundle_free(b);
    }
}

#[test]
fn curvature_checks_lengths() {
    let (_, b) = catalog("para_c_product", None);
    let (x, y, p) = ([0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0; 4]);
    let mut k = f64::NAN;
    assert_eq!(unsafe { paraf_sectional_curvature(b, x.as_ptr(), y.as_ptr(), p.as_ptr(), 4, &mut k) }, ParafStatus::Ok);
    assert_eq!(k, 0.0);
    let st = unsafe { paraf_sectional_curvature(b, x.as_ptr(), y.as_ptr(), p.as_ptr(), 3, &mut k) };
    assert_eq!(st, ParafStatus::Construction);
    unsafe { paraf_bundle_free(b) };
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(paraf_version()) }.to_str().unwrap();
    assert!(v.starts_with("paraf "));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/paraf.h");
    let src = format!("#include \"{header}\"\nint main(void) {{ ParafStatus s = PARAF_STATUS_OK; return (int)s; }}\n");
    let dir = tempfile_dir();
    let c = dir.join("probe.c");
    std::fs::write(&c, src).unwrap();
    let status = std::process::Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&c).status();
    match status {
        Ok(s) => assert!(s.success(), "header does not compile"),
        Err(e) => panic!("no C compiler available: {e}"),
    }
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("paraf-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
