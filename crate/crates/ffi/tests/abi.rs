use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use lcsfluct::drop_scheme::{simulate_ln_coupled, DropState, InsertionMode};
use lcsfluct::sequences::{labels, RngStream};
use lcsfluct_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        lcsf_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn lcs_align_and_errors() {
    let mut n = 0usize;
    unsafe {
        assert_eq!(lcsf_lcs(c("a11a1000").as_ptr(), c("00110011").as_ptr(), &mut n), LcsfStatus::Ok);
        assert_eq!(n, 4);
        assert_eq!(lcsf_lcs(c("01z").as_ptr(), c("0").as_ptr(), &mut n), LcsfStatus::InvalidArgument);
        assert!(last_error().contains('z'));
        assert_eq!(lcsf_lcs(ptr::null(), c("0").as_ptr(), &mut n), LcsfStatus::NullPointer);
        assert_eq!(lcsf_lcs(c("0").as_ptr(), c("0").as_ptr(), ptr::null_mut()), LcsfStatus::NullPointer);
        assert_eq!(lcsf_lcs(c("0").as_ptr(), c("0").as_ptr(), &mut n), LcsfStatus::Ok);
        assert_eq!(last_error(), "");

        let m = [2i64, 1, 1, 3];
        let mut s = 0i64;
        assert_eq!(lcsf_align(c("0101").as_ptr(), c("1100").as_ptr(), m.as_ptr(), 0, LCSF_PAIRING_IDENTICAL, &mut s), LcsfStatus::Ok);
        assert_eq!(s, 6);
        assert_eq!(lcsf_align(c("0101").as_ptr(), c("1100").as_ptr(), m.as_ptr(), 0, LCSF_PAIRING_ANY, &mut s), LcsfStatus::Ok);
        assert_eq!(s, 7);
        assert_eq!(lcsf_align(c("01").as_ptr(), c("1").as_ptr(), m.as_ptr(), 0, 9, &mut s), LcsfStatus::InvalidArgument);
    }
}

#[test]
fn truncated_error_message() {
    let mut n = 0usize;
    unsafe {
        lcsf_lcs(c("0q").as_ptr(), c("0").as_ptr(), &mut n);
        let full = lcsf_last_error(ptr::null_mut(), 0);
        assert!(full > 5);
        let mut buf = [0 as std::ffi::c_char; 5];
        assert_eq!(lcsf_last_error(buf.as_mut_ptr(), 5), full);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_bytes().len(), 4);
    }
}

#[test]
fn numeric_entry_points() {
    unsafe {
        let mut p = 0.0;
        assert_eq!(lcsf_containment_prob(3, 6, &mut p), LcsfStatus::Ok);
        assert_eq!(p, 21.0 / 32.0);
        let (mut num, mut den, mut val) = (0u64, 0u32, 0.0);
        assert_eq!(lcsf_exact_mean(2, &mut num, &mut den, &mut val), LcsfStatus::Ok);
        assert_eq!((num, den, val), (18, 4, 1.125));
        assert_eq!(lcsf_exact_mean(13, &mut num, &mut den, &mut val), LcsfStatus::InvalidArgument);

        let (mut ln, mut na) = (0usize, 0usize);
        assert_eq!(lcsf_simulate_ln(200, 0.3, 5, 17, LCSF_MODE_PAPER_INTERIOR, &mut ln, &mut na), LcsfStatus::Ok);
        let lib = simulate_ln_coupled(200, 0.3, RngStream::new(5, 17), InsertionMode::PaperInterior).unwrap();
        assert_eq!((ln, na), (lib.ln, lib.na));
        assert_eq!(lcsf_simulate_ln(200, 1.3, 5, 17, 0, &mut ln, &mut na), LcsfStatus::InvalidArgument);
        assert_eq!(lcsf_simulate_ln(200, 0.3, 5, 17, 7, &mut ln, &mut na), LcsfStatus::InvalidArgument);
        let v = CStr::from_ptr(lcsf_version()).to_str().unwrap();
        assert_eq!(v, lcsfluct::VERSION);
    }
}

#[test]
fn drop_handle_lifecycle() {
    unsafe {
        let mut h: *mut LcsfDropState = ptr::null_mut();
        assert_eq!(lcsf_drop_new(9, 4, LCSF_MODE_FULL_UNIFORM, &mut h), LcsfStatus::Ok);
        assert!(!h.is_null());
        let mut k = 0usize;
        lcsf_drop_len(h, &mut k);
        assert_eq!(k, 2);
        let (mut pos, mut bit) = (0usize, 9u8);
        assert_eq!(lcsf_drop_step(h, &mut pos, &mut bit), LcsfStatus::Ok);
        assert!((1..=3).contains(&pos) && bit <= 1);
        assert_eq!(lcsf_drop_grow_to(h, 40), LcsfStatus::Ok);
        lcsf_drop_len(h, &mut k);
        assert_eq!(k, 40);

        let mut small = [0u8; 10];
        let mut len = 0usize;
        assert_eq!(lcsf_drop_bits(h, small.as_mut_ptr(), small.len(), &mut len), LcsfStatus::BufferTooSmall);
        assert_eq!(len, 40);
        let mut bits = vec![0u8; len];
        assert_eq!(lcsf_drop_bits(h, bits.as_mut_ptr(), bits.len(), &mut len), LcsfStatus::Ok);

        // Same stream through the library.
        let mut rng = RngStream::new(9, 4).fork(labels::DROP).rng();
        let mut st = DropState::init(&mut rng, InsertionMode::FullUniform);
        while st.k() < 40 {
            st.step(&mut rng);
        }
        let expect: Vec<u8> = st.current().iter().map(|b| b.index() as u8).collect();
        assert_eq!(bits, expect);
        lcsf_drop_free(h);
        lcsf_drop_free(ptr::null_mut());

        assert_eq!(lcsf_drop_new(1, 1, 5, &mut h), LcsfStatus::InvalidArgument);
        assert_eq!(lcsf_drop_step(ptr::null_mut(), ptr::null_mut(), ptr::null_mut()), LcsfStatus::NullPointer);
    }
}

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

/// `target/<profile>` holding the static library built alongside this test.
fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("liblcsfluct_ffi.a");
    lib.exists().then_some(lib)
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "lcsfluct.h"

int main(void) {
    size_t n = 0;
    if (lcsf_lcs("a11a1000", "00110011", &n) != LCSF_STATUS_OK || n != 4) return 1;
    if (lcsf_lcs("0x", "0", &n) != LCSF_STATUS_INVALID_ARGUMENT) return 2;
    char msg[128];
    if (lcsf_last_error(msg, sizeof msg) < 2) return 3;
    LcsfDropState *h = NULL;
    if (lcsf_drop_new(1, 0, LCSF_MODE_PAPER_INTERIOR, &h) != LCSF_STATUS_OK) return 4;
    if (lcsf_drop_grow_to(h, 25) != LCSF_STATUS_OK) return 5;
    uint8_t bits[25];
    size_t len = 0;
    if (lcsf_drop_bits(h, bits, sizeof bits, &len) != LCSF_STATUS_OK || len != 25) return 6;
    lcsf_drop_free(h);
    double p = 0;
    if (lcsf_containment_prob(3, 6, &p) != LCSF_STATUS_OK || p != 0.65625) return 7;
    printf("%s %zu\n", lcsf_version(), n);
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let syntax = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header_dir())
        .arg(&src)
        .output()
        .unwrap();
    assert!(syntax.status.success(), "{}", String::from_utf8_lossy(&syntax.stderr));

    let Some(lib) = static_lib() else {
        eprintln!("static library not found next to the test binary; link step skipped");
        return;
    };
    let exe = dir.path().join("main");
    let link = Command::new("cc")
        .args(["-std=c99", "-I"])
        .arg(header_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(link.status.success(), "{}", String::from_utf8_lossy(&link.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout), format!("{} 4\n", lcsfluct::VERSION));
}

#[test]
fn header_is_current() {
    let text = std::fs::read_to_string(header_dir().join("lcsfluct.h")).unwrap();
    for sym in [
        "lcsf_lcs",
        "lcsf_align",
        "lcsf_containment_prob",
        "lcsf_exact_mean",
        "lcsf_simulate_ln",
        "lcsf_drop_new",
        "lcsf_drop_step",
        "lcsf_drop_grow_to",
        "lcsf_drop_len",
        "lcsf_drop_bits",
        "lcsf_drop_free",
        "lcsf_last_error",
        "lcsf_version",
        "typedef struct LcsfDropState LcsfDropState;",
    ] {
        assert!(text.contains(sym), "header lacks {sym}");
    }
}
