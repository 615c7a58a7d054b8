//! C ABI over `lcsfluct`.
//!
//! Every function returns an [`LcsfStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read back with
//! [`lcsf_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use lcsfluct::drop_scheme::{simulate_ln_coupled, DropState, InsertionMode};
use lcsfluct::experiments::exact_e_ln;
use lcsfluct::lcs::{align_score, lcs_length, PairingRule, SubstitutionMatrix};
use lcsfluct::matchings::containment_prob_exact;
use lcsfluct::sequences::{labels, RngStream, TriSequence};
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LcsfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Panic = 4,
}

/// Insertion slots `{2..k}`.
pub const LCSF_MODE_PAPER_INTERIOR: u32 = 0;
/// Insertion slots `{1..k+1}`.
pub const LCSF_MODE_FULL_UNIFORM: u32 = 1;

/// Only identical letters share a column.
pub const LCSF_PAIRING_IDENTICAL: u32 = 0;
/// Any two letters share a column at the matrix score.
pub const LCSF_PAIRING_ANY: u32 = 1;

/// A drop-scheme string together with the random stream that grows it.
pub struct LcsfDropState {
    state: DropState,
    rng: ChaCha8Rng,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");

struct Fail(LcsfStatus, String);

impl From<lcsfluct::Error> for Fail {
    fn from(e: lcsfluct::Error) -> Self {
        Fail(LcsfStatus::InvalidArgument, e.to_string())
    }
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> LcsfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            LcsfStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            LcsfStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(LcsfStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(LcsfStatus::InvalidArgument, msg.into())
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

fn mode(m: u32) -> Result<InsertionMode, Fail> {
    match m {
        LCSF_MODE_PAPER_INTERIOR => Ok(InsertionMode::PaperInterior),
        LCSF_MODE_FULL_UNIFORM => Ok(InsertionMode::FullUniform),
        other => Err(invalid(format!("unknown mode {other}"))),
    }
}

/// NUL-terminated crate version; static storage.
#[no_mangle]
pub extern "C" fn lcsf_version() -> *const c_char {
    VERSION.as_ptr().cast()
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `cap` bytes, into `buf`. Returns the full length including
/// the terminator; 1 means no error is recorded.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn lcsf_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len() + 1
    })
}

/// LCS length of two NUL-terminated strings over `0`, `1` and `a`.
///
/// # Safety
/// `a` and `b` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lcsf_lcs(a: *const c_char, b: *const c_char, out: *mut usize) -> LcsfStatus {
    guard(|| {
        let x: TriSequence = text(a, "a")?.parse()?;
        let y: TriSequence = text(b, "b")?.parse()?;
        *self::out(out, "out")? = lcs_length(&x, &y);
        Ok(())
    })
}

/// Global alignment score. `matrix` holds `s00, s01, s10, s11`; `pairing`
/// is one of the `LCSF_PAIRING_*` constants.
///
/// # Safety
/// `a`, `b` NUL-terminated; `matrix` valid for 4 reads; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lcsf_align(
    a: *const c_char,
    b: *const c_char,
    matrix: *const i64,
    gap: i64,
    pairing: u32,
    out: *mut i64,
) -> LcsfStatus {
    guard(|| {
        let x: TriSequence = text(a, "a")?.parse()?;
        let y: TriSequence = text(b, "b")?.parse()?;
        if matrix.is_null() {
            return Err(null("matrix"));
        }
        let s = std::slice::from_raw_parts(matrix, 4);
        let rule = match pairing {
            LCSF_PAIRING_IDENTICAL => PairingRule::IdenticalOnly,
            LCSF_PAIRING_ANY => PairingRule::AnyPair,
            other => return Err(invalid(format!("unknown pairing {other}"))),
        };
        let m = SubstitutionMatrix::binary([[s[0], s[1]], [s[2], s[3]]], gap).with_pairing(rule);
        *self::out(out, "out")? = align_score(&x, &y, &m)?;
        Ok(())
    })
}

/// Probability that a fixed `l`-bit word is a subsequence of `k` fair bits.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lcsf_containment_prob(l: usize, k: usize, out: *mut f64) -> LcsfStatus {
    guard(|| {
        *self::out(out, "out")? = containment_prob_exact(l, k)?;
        Ok(())
    })
}

/// Exact `E[LCS]` of two uniform `n`-bit strings, `n <= 12`, as
/// `numerator / 2^log2_denominator`, plus its value as a double.
///
/// # Safety
/// All out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn lcsf_exact_mean(
    n: u32,
    numerator: *mut u64,
    log2_denominator: *mut u32,
    value: *mut f64,
) -> LcsfStatus {
    guard(|| {
        let (num, den, val) = (out(numerator, "numerator")?, out(log2_denominator, "log2_denominator")?, out(value, "value")?);
        let e = exact_e_ln(n as usize)?;
        *num = e.numerator;
        *den = e.log2_denominator;
        *val = e.value();
        Ok(())
    })
}

/// One draw of `(L_n, N^a)` through the drop scheme on stream `(seed, rep)`;
/// identical to replication `rep` of the library and CLI.
///
/// # Safety
/// `ln` and `na` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lcsf_simulate_ln(
    n: usize,
    p: f64,
    seed: u64,
    rep: u64,
    mode: u32,
    ln: *mut usize,
    na: *mut usize,
) -> LcsfStatus {
    guard(|| {
        let (ln, na) = (out(ln, "ln")?, out(na, "na")?);
        let s = simulate_ln_coupled(n, p, RngStream::new(seed, rep), self::mode(mode)?)?;
        *ln = s.ln;
        *na = s.na;
        Ok(())
    })
}

/// New `Z^2` on stream `(seed, stream)`. Release with [`lcsf_drop_free`].
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lcsf_drop_new(seed: u64, stream: u64, mode: u32, out: *mut *mut LcsfDropState) -> LcsfStatus {
    guard(|| {
        let slot = self::out(out, "out")?;
        let mut rng = RngStream::new(seed, stream).fork(labels::DROP).rng();
        let state = DropState::init(&mut rng, self::mode(mode)?);
        *slot = Box::into_raw(Box::new(LcsfDropState { state, rng }));
        Ok(())
    })
}

/// Inserts one fresh bit. `position` (1-based) and `bit` may be null.
///
/// # Safety
/// `handle` must come from [`lcsf_drop_new`] and not be freed.
#[no_mangle]
pub unsafe extern "C" fn lcsf_drop_step(handle: *mut LcsfDropState, position: *mut usize, bit: *mut u8) -> LcsfStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        let ins = h.state.step(&mut h.rng);
        if let Some(p) = position.as_mut() {
            *p = ins.position;
        }
        if let Some(b) = bit.as_mut() {
            *b = ins.bit.index() as u8;
        }
        Ok(())
    })
}

/// Steps until the string has length `k` (no-op when already there).
///
/// # Safety
/// As for [`lcsf_drop_step`].
#[no_mangle]
pub unsafe extern "C" fn lcsf_drop_grow_to(handle: *mut LcsfDropState, k: usize) -> LcsfStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        while h.state.k() < k {
            h.state.step(&mut h.rng);
        }
        Ok(())
    })
}

/// Current length `k`.
///
/// # Safety
/// `handle` valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lcsf_drop_len(handle: *const LcsfDropState, out: *mut usize) -> LcsfStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        *self::out(out, "out")? = h.state.k();
        Ok(())
    })
}

/// Writes the `k` bits of the current string as bytes 0/1 into `buf`.
/// `len` receives `k` even when `cap` is too small.
///
/// # Safety
/// `handle` valid; `buf` valid for `cap` bytes (may be null when `cap` is 0);
/// `len` writable.
#[no_mangle]
pub unsafe extern "C" fn lcsf_drop_bits(
    handle: *const LcsfDropState,
    buf: *mut u8,
    cap: usize,
    len: *mut usize,
) -> LcsfStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        let len = out(len, "len")?;
        let k = h.state.k();
        *len = k;
        if cap < k {
            return Err(Fail(LcsfStatus::BufferTooSmall, format!("need {k} bytes, got {cap}")));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        let dst = std::slice::from_raw_parts_mut(buf, k);
        for (d, b) in dst.iter_mut().zip(h.state.current().iter()) {
            *d = b.index() as u8;
        }
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `handle` must be null or come from [`lcsf_drop_new`], freed at most once.
#[no_mangle]
pub unsafe extern "C" fn lcsf_drop_free(handle: *mut LcsfDropState) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}
