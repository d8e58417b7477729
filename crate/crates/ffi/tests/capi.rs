use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use serde_json::Value;
use sparsecut_ffi::*;

const P3: &str =
    r#"{"n":3,"cap_edges":[{"u":0,"v":1,"w":"1"},{"u":1,"v":2,"w":"1"}],"dem_edges":[{"u":0,"v":2,"w":"1"}]}"#;

/// Bag-local demands on a 4-cycle with a chord; every demand shares a bag.
const CHORDED: &str = r#"{"n":4,"cap_edges":[{"u":0,"v":1,"w":"1"},{"u":1,"v":2,"w":"2"},{"u":2,"v":3,"w":"1"},{"u":3,"v":0,"w":"3"},{"u":0,"v":2,"w":"1"}],"dem_edges":[{"u":0,"v":2,"w":"1"},{"u":1,"v":3,"w":"2"}]}"#;

fn instance(json: &str) -> *mut ScInstance {
    let c = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { sc_instance_from_json(c.as_ptr(), &mut out) }, ScStatus::Ok);
    out
}

fn take_string(s: *mut c_char) -> String {
    let owned = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { sc_string_free(s) };
    owned
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(sc_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn oracle_through_the_c_interface() {
    let inst = instance(P3);
    assert_eq!(unsafe { sc_instance_vertex_count(inst) }, 3);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { sc_oracle_brute_force(inst, &mut out) }, ScStatus::Ok);
    let v: Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(v["phi"], "1");
    unsafe { sc_instance_free(inst) };
}

#[test]
fn decomposition_lifecycle() {
    let inst = instance(CHORDED);
    let mut t = ptr::null_mut();
    let mut b = ptr::null_mut();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(sc_decomposition_min_fill(inst, &mut t), ScStatus::Ok);
        assert_eq!(sc_decomposition_balance(t, &mut b), ScStatus::Ok);
        assert_eq!(sc_decomposition_transform(b, ScMode::Highways, 1, &mut h), ScStatus::Ok);
        let mut width = 0;
        let mut depth = 0;
        assert_eq!(sc_decomposition_width(t, &mut width), ScStatus::Ok);
        assert_eq!(sc_decomposition_depth(b, &mut depth), ScStatus::Ok);
        assert_eq!(width, 2);
        let mut diam = usize::MAX;
        assert_eq!(sc_combinatorial_diameter(h, ScMethod::Exact, 1_000_000, &mut diam), ScStatus::Ok);
        assert!(diam <= 3);

        let mut json = ptr::null_mut();
        assert_eq!(sc_decomposition_to_json(h, &mut json), ScStatus::Ok);
        let text = CString::new(take_string(json)).unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(sc_decomposition_from_json(text.as_ptr(), &mut back), ScStatus::Ok);
        sc_decomposition_free(back);

        let mut bad = ptr::null_mut();
        assert_eq!(sc_decomposition_transform(b, ScMode::Bridges, 0, &mut bad), ScStatus::InvalidParams);
        assert!(bad.is_null());
        assert!(last_error().contains("InvalidParams"));

        sc_decomposition_free(h);
        sc_decomposition_free(b);
        sc_decomposition_free(t);
        sc_instance_free(inst);
    }
}

#[test]
fn solve_matches_oracle_on_bag_local_demands() {
    let inst = instance(CHORDED);
    let mut a = ptr::null_mut();
    let mut o = ptr::null_mut();
    unsafe {
        assert_eq!(sc_solve(inst, ptr::null(), ScMode::None, 0, 64, 5, &mut a), ScStatus::Ok);
        assert_eq!(sc_oracle_brute_force(inst, &mut o), ScStatus::Ok);
        sc_instance_free(inst);
    }
    let solved: Value = serde_json::from_str(&take_string(a)).unwrap();
    let oracle: Value = serde_json::from_str(&take_string(o)).unwrap();
    assert_eq!(solved["sparsity"], oracle["phi"]);
    assert_eq!(solved["alpha"], oracle["phi"]);
}

#[test]
fn errors_set_codes_and_messages() {
    let bad = CString::new(r#"{"n":2,"cap_edges":[],"dem_edges":[]}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { sc_instance_from_json(bad.as_ptr(), &mut out) }, ScStatus::InvalidInput);
    assert!(out.is_null());
    assert!(last_error().starts_with("InvalidInstance"));

    let not_utf8 = [0xffu8, 0xfe, 0];
    assert_eq!(unsafe { sc_instance_from_json(not_utf8.as_ptr().cast(), &mut out) }, ScStatus::InvalidUtf8);

    let mut n = 0;
    assert_eq!(unsafe { sc_decomposition_width(ptr::null(), &mut n) }, ScStatus::NullPointer);
    assert_eq!(unsafe { sc_instance_vertex_count(ptr::null()) }, 0);

    let inst = instance(P3);
    assert_eq!(unsafe { sc_oracle_brute_force(inst, ptr::null_mut()) }, ScStatus::NullPointer);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { sc_oracle_brute_force(inst, &mut s) }, ScStatus::Ok);
    assert!(last_error().is_empty());
    unsafe {
        sc_string_free(s);
        sc_instance_free(inst);
        sc_instance_free(ptr::null_mut());
        sc_string_free(ptr::null_mut());
    }
}

#[test]
fn generated_header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("sparsecut.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "sc_instance_from_json",
        "sc_decomposition_transform",
        "sc_combinatorial_diameter",
        "sc_oracle_brute_force",
        "sc_solve",
        "sc_string_free",
        "sc_last_error_message",
        "SC_STATUS_OK",
        "typedef struct ScInstance ScInstance",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"sparsecut.h\"\n\
         int probe(const char *json) {\n\
           ScInstance *inst = NULL;\n\
           char *out = NULL;\n\
           if (sc_instance_from_json(json, &inst) != SC_STATUS_OK) return 1;\n\
           ScStatus s = sc_solve(inst, NULL, SC_MODE_SUPER_HIGHWAYS, 2, 100, 0, &out);\n\
           sc_string_free(out);\n\
           sc_instance_free(inst);\n\
           return (int)s;\n\
         }\n",
    )
    .unwrap();
    let status = Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .status()
        .expect("a C compiler is available");
    assert!(status.success());
}
