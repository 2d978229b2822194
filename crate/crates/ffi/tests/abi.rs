use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use gaussharm_ffi::*;

fn last_error() -> String {
    let p = gh_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn admissibility_and_measures() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(gh_admissibility_m([4.0, 3.0].as_ptr(), 2, &mut v), GhStatus::Ok);
        assert_eq!(v, 0.2);

        let mut err = 0.0;
        assert_eq!(gh_gamma_cube([-1.0].as_ptr(), [1.0].as_ptr(), 1, &mut v, &mut err), GhStatus::Ok);
        assert!((v - 0.682_689_492_137_085_9).abs() < 1e-14);

        assert_eq!(gh_gamma_ball([0.0].as_ptr(), 1, 1.0, 1e-10, &mut v, ptr::null_mut()), GhStatus::Ok);
        assert!((v - 0.682_689_492_137_085_9).abs() < 1e-10);
    }
    assert!(gh_last_error_message().is_null());
}

#[test]
fn errors_are_reported() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(gh_admissibility_m(ptr::null(), 2, &mut v), GhStatus::NullPointer);
        assert!(last_error().contains("x is null"));
        assert_eq!(gh_gamma_ball([0.0].as_ptr(), 1, -1.0, 1e-8, &mut v, ptr::null_mut()), GhStatus::InvalidArgument);
        let four = CString::new(r#"{"kind":"hermite","beta":[1,0,0,0]}"#).unwrap();
        let mut h = ptr::null_mut();
        assert_eq!(gh_test_function_new(four.as_ptr(), &mut h), GhStatus::Dimension);
        assert!(last_error().contains("dimension 4"));

        let bad = CString::new("{\"kind\":\"nope\"}").unwrap();
        assert_eq!(gh_test_function_new(bad.as_ptr(), &mut h), GhStatus::Config);
        assert!(h.is_null());
    }
}

#[test]
fn semigroup_on_hermite() {
    let spec = CString::new(r#"{"kind":"hermite","beta":[2]}"#).unwrap();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(gh_test_function_new(spec.as_ptr(), &mut h), GhStatus::Ok);
        let mut n = 0;
        assert_eq!(gh_test_function_dim(h, &mut n), GhStatus::Ok);
        assert_eq!(n, 1);
        // H_2 is an eigenfunction of L with eigenvalue 2.
        let (t, x) = (0.3_f64, 0.7_f64);
        let (mut v, mut g) = (0.0, [0.0]);
        assert_eq!(gh_ou_apply(h, t, [x].as_ptr(), 1, 0, &mut v, g.as_mut_ptr()), GhStatus::Ok);
        let decay = (-2.0 * t).exp();
        assert!((v - decay * (x * x - 1.0)).abs() < 1e-12);
        assert!((g[0] - decay * 2.0 * x).abs() < 1e-12);
        gh_test_function_free(h);
        gh_test_function_free(ptr::null_mut());
    }
}

#[test]
fn covering_json() {
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(gh_cover_admissible([0.0].as_ptr(), 1, 1, 1.0, 1.0, 1.0, 7, &mut s), GhStatus::Ok);
        let text = CStr::from_ptr(s).to_str().unwrap().to_owned();
        gh_string_free(s);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(!v["centers"].as_array().unwrap().is_empty());
        assert!(v["coverage_fraction"].as_f64().unwrap() >= 0.99);

        assert_eq!(gh_cover_admissible(ptr::null(), 0, 1, 1.0, 1.0, 1.0, 7, &mut s), GhStatus::InvalidArgument);
        assert!(last_error().contains("non-empty"));
        assert!(s.is_null());
    }
}

#[test]
fn suite_round_trip() {
    let cfg = CString::new(r#"{"dim":1,"checks":["weak11"]}"#).unwrap();
    let mut s = ptr::null_mut();
    let mut ok = -1;
    unsafe {
        assert_eq!(gh_run_suite(cfg.as_ptr(), &mut s, &mut ok), GhStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
        gh_string_free(s);
        assert_eq!(ok, 1);
        assert_eq!(v["schema"], 1);
        assert!(v["reports"].as_array().unwrap().iter().all(|r| r["check_id"] == "weak11"));

        let bad = CString::new(r#"{"dim":1,"bogus":3}"#).unwrap();
        assert_eq!(gh_run_suite(bad.as_ptr(), &mut s, ptr::null_mut()), GhStatus::Config);
    }
}

#[test]
fn header_is_current_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/gaussharm.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "gh_last_error_message",
        "gh_version",
        "gh_string_free",
        "gh_admissibility_m",
        "gh_gamma_ball",
        "gh_gamma_cube",
        "gh_test_function_new",
        "gh_test_function_dim",
        "gh_test_function_free",
        "gh_ou_apply",
        "gh_cover_admissible",
        "gh_run_suite",
    ] {
        assert!(text.contains(&format!("{f}(")), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(&src, "#include \"gaussharm.h\"\nint main(void) { GhTestFunction *h = 0; (void)h; return GH_STATUS_OK; }\n").unwrap();
    match Command::new("cc").arg("-fsyntax-only").arg("-Wall").arg("-Werror").arg("-I").arg(header.parent().unwrap()).arg(&src).status() {
        Ok(st) => assert!(st.success(), "header does not compile"),
        Err(_) => eprintln!("no C compiler found; skipped compile check"),
    }
}
