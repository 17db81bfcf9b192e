use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use berg_op_lab_ffi::*;

const SCHATTEN: &str = r#"
task = "schatten"
alpha = 0
p = 2
q = 2
u = { poly = [1] }
v = { poly = [0] }
phi = { poly = [0, 0.5] }
psi = { poly = [0] }
"#;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = bol_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    bol_string_free(p);
    s
}

#[test]
fn schatten_run_through_handles() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(bol_config_parse(cstr(SCHATTEN).as_ptr(), &mut cfg), BolStatus::Ok);
        assert_eq!(bol_config_set_seed(cfg, 7), BolStatus::Ok);
        let mut emitted = ptr::null_mut();
        assert_eq!(bol_config_emit(cfg, &mut emitted), BolStatus::Ok);
        assert!(take(emitted).contains("seed = 7"));

        let mut report = ptr::null_mut();
        assert_eq!(bol_run(cfg, &mut report), BolStatus::Ok);
        let mut fro = 0.0;
        assert_eq!(bol_report_quantity(report, cstr("frobenius_sq").as_ptr(), &mut fro), BolStatus::Ok);
        assert!((fro - 4.0 / 3.0).abs() < 1e-10);
        let mut v = ptr::null_mut();
        assert_eq!(bol_report_verdict(report, cstr("operator").as_ptr(), &mut v), BolStatus::Ok);
        assert_eq!(take(v), "finite-looking");
        assert_eq!(bol_report_coherent(report), 1);
        assert_eq!(bol_report_exit_code(report), 0);

        let mut json = ptr::null_mut();
        assert_eq!(bol_report_json(report, &mut json), BolStatus::Ok);
        let parsed: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        assert_eq!(parsed["title"], "schatten");
        let mut csv = ptr::null_mut();
        assert_eq!(bol_report_csv(report, &mut csv), BolStatus::Ok);
        assert!(take(csv).contains("frobenius_sq"));

        assert_eq!(bol_report_quantity(report, cstr("nope").as_ptr(), &mut fro), BolStatus::NotFound);
        assert!(last_error().contains("nope"));
        bol_report_free(report);
        bol_config_free(cfg);
    }
}

#[test]
fn run_config_returns_json_and_exit_code() {
    unsafe {
        let mut json = ptr::null_mut();
        let mut code = -1;
        assert_eq!(bol_run_config(cstr(SCHATTEN).as_ptr(), &mut json, &mut code), BolStatus::Ok);
        assert_eq!(code, 0);
        assert!(take(json).contains("\"frobenius_sq\""));
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut cfg = ptr::null_mut();
        let bad = SCHATTEN.replace("alpha = 0", "alpha = -1.5");
        assert_eq!(bol_config_parse(cstr(&bad).as_ptr(), &mut cfg), BolStatus::Config);
        assert!(cfg.is_null());
        assert!(last_error().contains("alpha > -1"));

        assert_eq!(bol_config_parse(ptr::null(), &mut cfg), BolStatus::NullOrInvalidArgument);
        assert_eq!(bol_run(ptr::null(), ptr::null_mut()), BolStatus::NullOrInvalidArgument);
        assert_eq!(bol_report_exit_code(ptr::null()), -1);

        let mut d = 0.0;
        assert_eq!(bol_pseudo_distance(0.0, 0.0, 0.5, 0.0, &mut d), BolStatus::Ok);
        assert!((d - 0.5).abs() < 1e-15);
        assert_eq!(bol_pseudo_distance(1.5, 0.0, 0.0, 0.0, &mut d), BolStatus::InvalidParameter);
        bol_string_free(ptr::null_mut());
        bol_config_free(ptr::null_mut());
        bol_report_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(bol_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn shared_library() -> Option<PathBuf> {
    let deps = std::env::current_exe().ok()?.parent()?.to_path_buf();
    let name = format!("{}berg_op_lab_ffi{}", std::env::consts::DLL_PREFIX, std::env::consts::DLL_SUFFIX);
    [deps.join(&name), deps.parent()?.join(&name)].into_iter().find(|p| p.exists())
}

#[test]
fn c_program_links_against_generated_header() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = manifest.join("include/berg_op_lab.h");
    assert!(header.exists(), "header not generated");
    let Some(lib) = shared_library() else {
        eprintln!("shared library not found next to the test binary; skipping C link test");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let lib_dir = lib.parent().unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = match Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(lib_dir)
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .args(["-lberg_op_lab_ffi", "-lm", "-o"])
        .arg(&exe)
        .output()
    {
        Ok(o) => o,
        Err(e) => {
            eprintln!("no C compiler ({cc}: {e}); skipping C link test");
            return;
        }
    };
    assert!(out.status.success(), "cc failed: {}", String::from_utf8_lossy(&out.stderr));
    // cargo's library path may hold an older copy of the library; load the one linked against.
    let run = Command::new(&exe).env("LD_LIBRARY_PATH", lib_dir).env("DYLD_LIBRARY_PATH", lib_dir).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "smoke failed: {stdout}{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout.contains("S2^2 = 1.333333333333"), "{stdout}");
}
