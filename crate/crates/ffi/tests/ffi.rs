use std::ffi::{CStr, CString};
use std::ptr;

use nclab_ffi::*;

fn last_error() -> String {
    let p = nclab_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn diagonal_martingale(family: NclabFamily) -> *mut NclabMartingale {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(nclab_filtration_new(family, 2, &mut f), NclabStatus::Ok);
        assert_eq!(nclab_filtration_dim(f), 4);
        assert_eq!(nclab_filtration_levels(f), 2);
        let mut re = [0.0; 16];
        for (i, v) in [1.3, -0.2, 0.6, 0.9].into_iter().enumerate() {
            re[i * 4 + i] = v;
        }
        let mut m = ptr::null_mut();
        assert_eq!(nclab_martingale_from_operator(f, re.as_ptr(), ptr::null(), 4, &mut m), NclabStatus::Ok);
        nclab_filtration_free(f);
        m
    }
}

#[test]
fn norms_through_handles() {
    let m = diagonal_martingale(NclabFamily::CommutativePartition);
    unsafe {
        let (mut h, mut l) = (0.0, 0.0);
        assert_eq!(nclab_hardy_norm(m, NclabHardyKind::ConditionedColumn, 1.0, &mut h), NclabStatus::Ok);
        assert_eq!(nclab_lp_norm(m, 1.0, &mut l), NclabStatus::Ok);
        assert!((l - 0.75).abs() < 1e-15);
        assert!(h > 0.0 && l <= 2f64.sqrt() * h + 1e-12);
        nclab_martingale_free(m);
    }
}

#[test]
fn json_round_trip_and_decomposition() {
    let m = diagonal_martingale(NclabFamily::TensorDyadic);
    unsafe {
        let mut text = ptr::null_mut();
        assert_eq!(nclab_martingale_to_json(m, &mut text), NclabStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(nclab_martingale_from_json(text, &mut back), NclabStatus::Ok);
        assert_eq!(nclab_martingale_levels(back), 2);

        let mut d = ptr::null_mut();
        assert_eq!(nclab_decompose(back, NclabMethod::Algebraic, 0.5, 1.5, &mut d), NclabStatus::Ok);
        let (mut lhs, mut rhs) = (0.0, 0.0);
        assert_eq!(nclab_decomposition_bound(d, &mut lhs, &mut rhs), NclabStatus::Ok);
        assert!(lhs <= rhs + 1e-8);
        assert!(nclab_decomposition_reconstruction_error(d) <= 1e-8);
        assert!(nclab_decomposition_certificates_valid(d));
        let n = nclab_decomposition_coefficient_count(d);
        let mut buf = vec![0.0; n + 2];
        assert_eq!(nclab_decomposition_coefficients(d, buf.as_mut_ptr(), buf.len()), n);
        let mut json = ptr::null_mut();
        assert_eq!(nclab_decomposition_to_json(d, &mut json), NclabStatus::Ok);
        let parsed: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(parsed["method"], "algebraic");
        nclab_string_free(json);
        nclab_decomposition_free(d);

        let mut w = ptr::null_mut();
        assert_eq!(nclab_decompose(back, NclabMethod::WeakAtomic, 1.0, 1.5, &mut w), NclabStatus::Ok);
        nclab_decomposition_free(w);
        let mut c = ptr::null_mut();
        assert_eq!(nclab_decompose(back, NclabMethod::CrudeSlice, 1.0, 1.5, &mut c), NclabStatus::InvalidArgument);
        assert!(c.is_null());

        nclab_string_free(text);
        nclab_martingale_free(back);
        nclab_martingale_free(m);
    }
}

#[test]
fn crude_decomposition_from_instance_json() {
    // y = dx_2 with E_1(y) = 0 and ||y||_2 = 1, b = 1 at level 1.
    let json = r#"{"dim": 4, "family": "CommutativePartition", "partitions": [[[0, 1], [2, 3]], [[0], [1], [2], [3]]],
        "diffs": [{"re": [[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]], "im": [[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]},
                  {"re": [[1,0,0,0],[0,-1,0,0],[0,0,1,0],[0,0,0,-1]], "im": [[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}],
        "atom": {"level": 1,
                 "y": {"re": [[1,0,0,0],[0,-1,0,0],[0,0,1,0],[0,0,0,-1]], "im": [[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]},
                 "b": {"re": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]], "im": [[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}}}"#;
    let json = CString::new(json).unwrap();
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(nclab_decompose_json(json.as_ptr(), NclabMethod::CrudeSlice, 1.0, 1.5, 0.0, 0, 0.0, &mut d), NclabStatus::Ok, "{}", last_error());
        let (mut lhs, mut rhs) = (0.0, 0.0);
        nclab_decomposition_bound(d, &mut lhs, &mut rhs);
        assert!(lhs <= rhs + 1e-8 && (rhs - 1.5).abs() < 1e-12);
        assert!(nclab_decomposition_certificates_valid(d));
        assert!(nclab_decomposition_reconstruction_error(d) <= 1e-12);
        nclab_decomposition_free(d);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(nclab_filtration_new(NclabFamily::BlockPinching, 0, &mut f), NclabStatus::InvalidArgument);
        assert!(last_error().contains("depth"));
        assert_eq!(nclab_filtration_new(NclabFamily::BlockPinching, 2, ptr::null_mut()), NclabStatus::NullPointer);
        assert!(last_error().contains("out"));

        let bad = CString::new(r#"{"dim": 3, "family": "TensorDyadic", "N": 1, "diffs": []}"#).unwrap();
        let mut m = ptr::null_mut();
        assert_ne!(nclab_martingale_from_json(bad.as_ptr(), &mut m), NclabStatus::Ok);
        let garbage = CString::new("{").unwrap();
        assert_eq!(nclab_martingale_from_json(garbage.as_ptr(), &mut m), NclabStatus::Serialization);
        assert!(m.is_null());

        let m = diagonal_martingale(NclabFamily::BlockPinching);
        let mut v = 0.0;
        assert_eq!(nclab_hardy_norm(m, NclabHardyKind::Column, -1.0, &mut v), NclabStatus::InvalidArgument);
        nclab_martingale_free(m);

        nclab_filtration_free(ptr::null_mut());
        nclab_martingale_free(ptr::null_mut());
        nclab_decomposition_free(ptr::null_mut());
        nclab_string_free(ptr::null_mut());
    }
}

#[test]
fn suites_run_through_the_boundary() {
    let suite = CString::new("rev-triangle").unwrap();
    let family = CString::new("TensorDyadic").unwrap();
    let (mut passed, mut failed) = (0, 0);
    unsafe {
        assert_eq!(nclab_verify_suite(suite.as_ptr(), family.as_ptr(), 3, 1, &mut passed, &mut failed), NclabStatus::Ok);
        assert_eq!((passed, failed), (12, 0));
        let unknown = CString::new("nope").unwrap();
        assert_eq!(nclab_verify_suite(unknown.as_ptr(), ptr::null(), 1, 1, &mut passed, &mut failed), NclabStatus::UnknownSuite);
    }
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/nclab.h");
    let source = include_str!("../src/lib.rs");
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 20);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for ty in ["NclabStatus", "NclabFiltration", "NclabMartingale", "NclabDecomposition"] {
        assert!(header.contains(ty));
    }
}

/// Compiles `tests/c/smoke.c` against the static library and runs it.
#[test]
fn c_program_links_against_the_header() {
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libnclab_ffi.a");
    if !lib.exists() || std::process::Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let out = std::env::temp_dir().join(format!("nclab_smoke_{}", std::process::id()));
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let run = std::process::Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(run.status.success(), "{run:?}");
}
