//! C ABI for `ramgaps`.
//!
//! Models and limit laws are opaque handles created by `*_new`/`*_parse` and
//! released by the matching `*_free`. Every fallible call returns a
//! [`RamgapsStatus`] and writes its result through an out-pointer; on failure
//! `ramgaps_last_error` describes the problem. Strings returned by the
//! library are released with `ramgaps_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ramgaps::error::Error;
use ramgaps::hazard::{ExtReal, HazardModel};
use ramgaps::limitchain::LimitLaw;
use ramgaps::verify::{verify, Suite};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RamgapsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidModel = 2,
    InvalidArgument = 3,
    InfiniteMuLog = 4,
    CapExceeded = 5,
    InsufficientHorizon = 6,
    Degenerate = 7,
    Internal = 8,
}

/// Opaque hazard model.
pub struct RamgapsModel {
    inner: HazardModel,
}

/// Opaque limit law.
pub struct RamgapsLaw {
    inner: LimitLaw,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RamgapsStatus {
    match e {
        Error::InvalidModel(_) | Error::Json(_) => RamgapsStatus::InvalidModel,
        Error::InvalidArgument(_) | Error::Empty(_) => RamgapsStatus::InvalidArgument,
        Error::InfiniteMuLog => RamgapsStatus::InfiniteMuLog,
        Error::BoxCapExceeded(_) | Error::PathCapExceeded(_) => RamgapsStatus::CapExceeded,
        Error::InsufficientHorizon(_) => RamgapsStatus::InsufficientHorizon,
        Error::Degenerate(_) => RamgapsStatus::Degenerate,
        Error::Io(_) => RamgapsStatus::Internal,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> RamgapsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RamgapsStatus::Ok,
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            RamgapsStatus::Internal
        }
    }
}

macro_rules! nonnull {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            set_error("null pointer argument");
            return RamgapsStatus::NullPointer;
        }
    };
}

fn ext(x: ExtReal) -> f64 {
    x.to_f64()
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, Error> {
    CStr::from_ptr(s).to_str().map_err(|_| Error::InvalidArgument("string is not UTF-8".into()))
}

fn out_string(s: String, out: *mut *mut c_char) {
    let c = CString::new(s).expect("JSON has no interior nul");
    unsafe { *out = c.into_raw() };
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ramgaps_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ramgaps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses "gem:θ", "beta:a,b", "atoms:h1,h2/w1,w2" or a JSON object.
///
/// # Safety
/// `spec` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ramgaps_model_parse(spec: *const c_char, out: *mut *mut RamgapsModel) -> RamgapsStatus {
    nonnull!(spec, out);
    guard(|| {
        let inner: HazardModel = str_arg(spec)?.parse()?;
        *out = Box::into_raw(Box::new(RamgapsModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from `ramgaps_model_parse` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ramgaps_model_free(model: *mut RamgapsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// μ_{i,j} = E H^i (1-H)^j for j >= -1; infinity when it diverges.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ramgaps_model_mu(model: *const RamgapsModel, i: u64, j: i64, out: *mut f64) -> RamgapsStatus {
    nonnull!(model, out);
    guard(|| {
        *out = ext((*model).inner.mu_moment(i, j)?);
        Ok(())
    })
}

/// E[-log(1-H)], possibly infinite.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ramgaps_model_mu_log(model: *const RamgapsModel, out: *mut f64) -> RamgapsStatus {
    nonnull!(model, out);
    guard(|| {
        *out = ext((*model).inner.mu_log());
        Ok(())
    })
}

/// Probability of the count vector counts[0..len] in a sample of size sum(counts).
///
/// # Safety
/// `counts` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn ramgaps_exact_config_probability(
    model: *const RamgapsModel,
    counts: *const u64,
    len: usize,
    out: *mut f64,
) -> RamgapsStatus {
    nonnull!(model, counts, out);
    guard(|| {
        let c = std::slice::from_raw_parts(counts, len);
        *out = ramgaps::ram::exact_config_probability(&(*model).inner, c)?;
        Ok(())
    })
}

/// g_{m:n}, the expected visits of the tail-count chain to m.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ramgaps_finite_potential(
    model: *const RamgapsModel,
    n: u64,
    m: u64,
    out: *mut f64,
) -> RamgapsStatus {
    nonnull!(model, out);
    guard(|| {
        *out = ramgaps::ram::finite_potential(&(*model).inner, n, m)?;
        Ok(())
    })
}

/// JSON array of `replicates` sampled configurations of size n.
///
/// # Safety
/// Pointers must be valid; free the result with `ramgaps_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ramgaps_simulate_json(
    model: *const RamgapsModel,
    n: u64,
    replicates: u64,
    seed: u64,
    out: *mut *mut c_char,
) -> RamgapsStatus {
    nonnull!(model, out);
    guard(|| {
        let m = &(*model).inner;
        let configs =
            ramgaps::mc::run(seed, replicates, 1, |rng| ramgaps::ram::sample_configuration(m, n, rng))?;
        out_string(serde_json::to_string(&configs)?, out);
        Ok(())
    })
}

/// Fails with `RAMGAPS_STATUS_INFINITE_MU_LOG` when the limit degenerates.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ramgaps_law_new(model: *const RamgapsModel, out: *mut *mut RamgapsLaw) -> RamgapsStatus {
    nonnull!(model, out);
    guard(|| {
        let inner = LimitLaw::new(&(*model).inner)?;
        *out = Box::into_raw(Box::new(RamgapsLaw { inner }));
        Ok(())
    })
}

/// # Safety
/// `law` must come from `ramgaps_law_new` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ramgaps_law_free(law: *mut RamgapsLaw) {
    if !law.is_null() {
        drop(Box::from_raw(law));
    }
}

/// P(Q_0 = m).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ramgaps_law_entrance_pmf(law: *const RamgapsLaw, m: u64, out: *mut f64) -> RamgapsStatus {
    nonnull!(law, out);
    guard(|| {
        *out = (*law).inner.entrance_pmf(m);
        Ok(())
    })
}

/// P(Q_{k+1} = n | Q_k = m).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ramgaps_law_transition_pmf(
    law: *const RamgapsLaw,
    m: u64,
    n: u64,
    out: *mut f64,
) -> RamgapsStatus {
    nonnull!(law, out);
    guard(|| {
        *out = (*law).inner.transition_pmf(m, n);
        Ok(())
    })
}

/// P(G_j >= k) for j >= 1.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ramgaps_law_gap_tail(law: *const RamgapsLaw, j: u64, k: u64, out: *mut f64) -> RamgapsStatus {
    nonnull!(law, out);
    guard(|| {
        *out = (*law).inner.gap_tail(j, k)?;
        Ok(())
    })
}

/// E Q_j, possibly infinite.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ramgaps_law_mean_q(law: *const RamgapsLaw, j: u64, out: *mut f64) -> RamgapsStatus {
    nonnull!(law, out);
    guard(|| {
        *out = ext((*law).inner.mean_q(j));
        Ok(())
    })
}

/// P(N_0 = counts[0], ..., N_k = counts[k]) with k = len - 1.
///
/// # Safety
/// `counts` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn ramgaps_law_fdd(
    law: *const RamgapsLaw,
    counts: *const u64,
    len: usize,
    out: *mut f64,
) -> RamgapsStatus {
    nonnull!(law, counts, out);
    guard(|| {
        *out = (*law).inner.fdd_counts_pmf(std::slice::from_raw_parts(counts, len))?;
        Ok(())
    })
}

/// Runs a verification suite ("gem-gaps", ..., "all") and returns its JSON
/// manifest; `*pass` is 1 when every check passed.
///
/// # Safety
/// Pointers must be valid; free the result with `ramgaps_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ramgaps_verify_json(
    suite: *const c_char,
    seed: u64,
    workers: usize,
    out: *mut *mut c_char,
    pass: *mut c_int,
) -> RamgapsStatus {
    nonnull!(suite, out, pass);
    guard(|| {
        let s: Suite = str_arg(suite)?.parse()?;
        let m = verify(s, seed, workers)?;
        *pass = c_int::from(m.pass);
        out_string(serde_json::to_string(&m)?, out);
        Ok(())
    })
}
