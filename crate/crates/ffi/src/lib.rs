//! C ABI over the splitting integrators.
//!
//! Problems, schemes and states are opaque handles created by `ss_*_new`
//! functions and released by the matching `ss_*_free`. Every fallible call
//! returns an [`SsStatus`]; on failure a description is available from
//! [`ss_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use strang_split::error::{ErrorKind, SplitError};
use strang_split::field::{NormKind, State};
use strang_split::phi::phi_k;
use strang_split::problems::{Brusselator, BrusselatorParams, KdV, KdVConfig, ToyOde};
use strang_split::scheme::{triple_jump_coefficients, CoefficientMode, SchemeSpec, SplitProblem};
use strang_split::study::integrate;

/// Result codes of every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonFinite = 3,
    Unstable = 4,
    Divergence = 5,
    FlowFailure = 6,
    Reference = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsSchemeKind {
    Lie = 0,
    Strang = 1,
    IteratedStrang = 2,
    TripleJump = 3,
    IteratedTripleJump = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsKdvInitial {
    Soliton = 0,
    Schwartzian = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsNorm {
    Infinity = 0,
    L2 = 1,
}

/// Opaque problem handle.
pub struct SsProblem {
    inner: Box<dyn SplitProblem>,
    initial: State,
}

/// Opaque scheme handle.
pub struct SsScheme(SchemeSpec);

/// Opaque state handle.
pub struct SsState(State);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(err: &SplitError) -> SsStatus {
    match err.kind() {
        ErrorKind::Config => SsStatus::InvalidArgument,
        ErrorKind::NonFinite => SsStatus::NonFinite,
        ErrorKind::Unstable => SsStatus::Unstable,
        ErrorKind::Divergence => SsStatus::Divergence,
        ErrorKind::FlowFailure => SsStatus::FlowFailure,
        ErrorKind::Reference => SsStatus::Reference,
        ErrorKind::Io => SsStatus::Io,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), SsError>) -> SsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SsStatus::Ok,
        Ok(Err(SsError(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SsStatus::Panic
        }
    }
}

struct SsError(SsStatus, String);

impl From<SplitError> for SsError {
    fn from(e: SplitError) -> Self {
        SsError(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> SsError {
    SsError(SsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), SsError> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn borrow<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, SsError> {
    ptr.as_ref().ok_or_else(|| null(what))
}

fn problem_handle(inner: Box<dyn SplitProblem>, initial: State) -> SsProblem {
    SsProblem { inner, initial }
}

/// Creates the 2-D Brusselator on `[0,1)^2` with `n` points per dimension.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ss_brusselator_new(
    n: usize,
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    out: *mut *mut SsProblem,
) -> SsStatus {
    guard(|| {
        let params = BrusselatorParams {
            alpha,
            beta,
            gamma,
            delta,
            ..BrusselatorParams::default()
        };
        let p = Brusselator::new(params, n)?;
        let u0 = p.initial()?;
        write_out(out, problem_handle(Box::new(p), u0))
    })
}

/// Creates a KdV problem on the default domain of the chosen initial value.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ss_kdv_new(
    initial: SsKdvInitial,
    n: usize,
    inner_tol: f64,
    out: *mut *mut SsProblem,
) -> SsStatus {
    guard(|| {
        let config = match initial {
            SsKdvInitial::Soliton => KdVConfig::soliton(),
            SsKdvInitial::Schwartzian => KdVConfig::schwartzian(),
        };
        let p = KdV::new(config.with_n(n).with_inner_tol(inner_tol))?;
        let u0 = p.initial()?;
        write_out(out, problem_handle(Box::new(p), u0))
    })
}

/// Creates the scalar `u' = u^2` test problem.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ss_toy_new(out: *mut *mut SsProblem) -> SsStatus {
    guard(|| {
        let p = ToyOde::new();
        let u0 = p.initial()?;
        write_out(out, problem_handle(Box::new(p), u0))
    })
}

/// # Safety
/// `problem` must be null or a handle from an `ss_*_new` problem constructor
/// that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ss_problem_free(problem: *mut SsProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Copies the problem's default initial value into a new state handle.
///
/// # Safety
/// `problem` must be a live problem handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_problem_initial_state(
    problem: *const SsProblem,
    out: *mut *mut SsState,
) -> SsStatus {
    guard(|| {
        let p = borrow(problem, "problem")?;
        write_out(out, SsState(p.initial.clone()))
    })
}

/// Builds a scheme. `iterations` applies to the iterated variants and
/// `complex_coefficients` to the triple jumps.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ss_scheme_new(
    kind: SsSchemeKind,
    iterations: usize,
    complex_coefficients: bool,
    inner_tol: f64,
    out: *mut *mut SsScheme,
) -> SsStatus {
    guard(|| {
        let mode = if complex_coefficients {
            CoefficientMode::Complex
        } else {
            CoefficientMode::Real
        };
        let scheme = match kind {
            SsSchemeKind::Lie => SchemeSpec::lie(),
            SsSchemeKind::Strang => SchemeSpec::strang(),
            SsSchemeKind::IteratedStrang => SchemeSpec::iterated_strang(iterations)?,
            SsSchemeKind::TripleJump => SchemeSpec::triple_jump(SchemeSpec::strang(), 2, mode)?,
            SsSchemeKind::IteratedTripleJump => {
                SchemeSpec::triple_jump(SchemeSpec::iterated_strang(iterations)?, 2, mode)?
            }
        };
        write_out(out, SsScheme(scheme.with_inner_tol(inner_tol)))
    })
}

/// # Safety
/// `scheme` must be null or a live handle from [`ss_scheme_new`].
#[no_mangle]
pub unsafe extern "C" fn ss_scheme_free(scheme: *mut SsScheme) {
    if !scheme.is_null() {
        drop(Box::from_raw(scheme));
    }
}

/// Integrates `state` to `t_final` with step `tau` into a new state handle.
///
/// # Safety
/// All handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_integrate(
    problem: *const SsProblem,
    scheme: *const SsScheme,
    state: *const SsState,
    tau: f64,
    t_final: f64,
    out: *mut *mut SsState,
) -> SsStatus {
    guard(|| {
        let p = borrow(problem, "problem")?;
        let s = borrow(scheme, "scheme")?;
        let u0 = borrow(state, "state")?;
        if u0.0.grid() != p.inner.grid() || u0.0.n_components() != p.inner.n_components() {
            return Err(SsError(
                SsStatus::InvalidArgument,
                "state does not belong to this problem".into(),
            ));
        }
        let (u, _) = integrate(p.inner.as_ref(), &s.0, tau, t_final, &u0.0)?;
        write_out(out, SsState(u))
    })
}

/// Number of complex entries (components times grid points).
///
/// # Safety
/// `state` must be null or a live state handle; null yields 0.
#[no_mangle]
pub unsafe extern "C" fn ss_state_len(state: *const SsState) -> usize {
    state.as_ref().map_or(0, |s| s.0.len())
}

/// Copies real and imaginary parts into caller buffers of length `len`.
/// Data is component-major with the x index fastest.
///
/// # Safety
/// `re` and `im` must each point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ss_state_copy(
    state: *const SsState,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> SsStatus {
    guard(|| {
        let s = borrow(state, "state")?;
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        let data = s.0.data();
        if len < data.len() {
            return Err(SsError(
                SsStatus::BufferTooSmall,
                format!("need {} entries, got {len}", data.len()),
            ));
        }
        let re = std::slice::from_raw_parts_mut(re, data.len());
        let im = std::slice::from_raw_parts_mut(im, data.len());
        for ((r, i), z) in re.iter_mut().zip(im.iter_mut()).zip(data) {
            *r = z.re;
            *i = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a live state handle.
#[no_mangle]
pub unsafe extern "C" fn ss_state_free(state: *mut SsState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Discrete norm of `a - b`.
///
/// # Safety
/// `a`, `b` must be live state handles and `out` a writable double.
#[no_mangle]
pub unsafe extern "C" fn ss_state_distance(
    a: *const SsState,
    b: *const SsState,
    norm: SsNorm,
    out: *mut f64,
) -> SsStatus {
    guard(|| {
        let (a, b) = (borrow(a, "a")?, borrow(b, "b")?);
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let kind = match norm {
            SsNorm::Infinity => NormKind::DiscreteInfinity,
            SsNorm::L2 => NormKind::DiscreteL2,
        };
        *out = a.0.distance(&b.0, kind)?;
        Ok(())
    })
}

/// `φ_k(z)` for `z = re + i·im`.
///
/// # Safety
/// `out_re` and `out_im` must be writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ss_phi(
    k: u32,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SsStatus {
    guard(|| {
        if out_re.is_null() || out_im.is_null() {
            return Err(null("output pointer"));
        }
        let v = phi_k(k as usize, Complex64::new(re, im));
        *out_re = v.re;
        *out_im = v.im;
        Ok(())
    })
}

/// Triple-jump coefficients for an order-`p` base method.
///
/// # Safety
/// `out_re` and `out_im` must each point to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ss_triple_jump_coefficients(
    p: u32,
    complex_coefficients: bool,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SsStatus {
    guard(|| {
        if out_re.is_null() || out_im.is_null() {
            return Err(null("output pointer"));
        }
        let mode = if complex_coefficients {
            CoefficientMode::Complex
        } else {
            CoefficientMode::Real
        };
        let g = triple_jump_coefficients(p as usize, mode)?;
        for (j, z) in g.iter().enumerate() {
            *out_re.add(j) = z.re;
            *out_im.add(j) = z.im;
        }
        Ok(())
    })
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `len` bytes. Returns the full message length (excluding NUL).
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ss_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}
