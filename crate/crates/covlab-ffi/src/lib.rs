//! C ABI for the covariance laboratory.
//!
//! Everything crosses the boundary as either a scalar, a caller-owned
//! row-major `double` buffer, or an opaque handle ([`CovlabSpd`],
//! [`CovlabStream`]) created and destroyed by this library. Every
//! fallible call returns a [`CovlabStatus`]; on failure,
//! [`covlab_last_error_message`] yields a human-readable reason for the
//! most recent failing call on the current thread.
//!
//! Ownership rules:
//! - `*_new`/sampler/estimator constructors hand the caller an owned
//!   handle; release it with the matching `*_free`. Handles are not
//!   reference-counted and must not be freed twice.
//! - Output buffers are allocated by the caller; the library never
//!   retains pointers past the call.
//! - Returned `const char*` strings are static or thread-local; never
//!   free them.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use covlab::bounds::{assouad_frobenius_bound, spectral_lower_bound, xi_exact, HypercubeSpec};
use covlab::cli::verify::run_suite;
use covlab::error::Error;
use covlab::estimators::{iw_posterior, posterior_mean};
use covlab::losses::{LossFamily, LossSpec, PhiSpec};
use covlab::matcore::{SpdMatrix, SymmetricMatrix};
use covlab::randmat::{
    derive_stream, sample_inverse_wishart, sample_mvn, sample_wishart, IwParams, SeedStream,
    WishartParams,
};
use covlab::risk::exact_prisk;

/// Call outcome. Zero is success; anything else leaves an explanation in
/// [`covlab_last_error_message`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovlabStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument failed validation (dimension, domain, parse).
    InvalidArgument = 2,
    /// A matrix that must be symmetric positive definite is not.
    NotPositiveDefinite = 3,
    /// The requested combination exists but has no defined value here.
    Unsupported = 4,
    /// The computation started but could not finish (non-convergence,
    /// exhausted sampling, non-finite intermediate).
    NumericalFailure = 5,
    /// An output buffer is shorter than the result.
    BufferTooSmall = 6,
    /// An internal invariant was violated; the library state is still
    /// sound but the call produced nothing.
    Panic = 7,
}

/// Loss families evaluable through [`covlab_loss_evaluate`] and
/// [`covlab_exact_prisk`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovlabLossFamily {
    /// Largest |eigenvalue| of the difference, to the requested power.
    SqSpectral = 0,
    /// Entrywise L2 norm of the difference, to the requested power.
    SqFrobenius = 1,
    /// Squared difference of log-determinants.
    SqLogDet = 2,
    /// Spectral loss of the inverses, to the requested power.
    SqSpectralPrecision = 3,
    /// Bregman divergence generated by the squared-Euclid potential.
    BregmanSqEuclid = 4,
    /// Bregman divergence generated by the von Neumann entropy.
    BregmanVonNeumann = 5,
    /// Bregman divergence generated by Stein's potential (KL geometry).
    BregmanStein = 6,
}

/// Opaque symmetric-positive-definite matrix handle.
pub struct CovlabSpd(SpdMatrix);

/// Opaque deterministic random stream handle.
pub struct CovlabStream(SeedStream);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(e: &Error) -> CovlabStatus {
    match e {
        Error::NotPositiveDefinite { .. }
        | Error::SingularTruth { .. }
        | Error::SingularPosterior { .. } => CovlabStatus::NotPositiveDefinite,
        Error::UnsupportedLoss { .. }
        | Error::UnsupportedPrior { .. }
        | Error::MomentUndefined { .. }
        | Error::ImproperPrior { .. }
        | Error::TooLarge { .. } => CovlabStatus::Unsupported,
        Error::NonFinite { .. }
        | Error::NonConvergence { .. }
        | Error::TruncationExhausted { .. }
        | Error::ReplicateFailed { .. }
        | Error::DegenerateFit { .. } => CovlabStatus::NumericalFailure,
        _ => CovlabStatus::InvalidArgument,
    }
}

type FfiResult = Result<(), (CovlabStatus, String)>;

fn lib_err(e: Error) -> (CovlabStatus, String) {
    (status_of(&e), e.to_string())
}

fn arg_err(message: impl Into<String>) -> (CovlabStatus, String) {
    (CovlabStatus::InvalidArgument, message.into())
}

fn null_err(name: &str) -> (CovlabStatus, String) {
    (CovlabStatus::NullArgument, format!("{name} must not be null"))
}

/// Runs a fallible body, converting panics and errors into statuses and
/// recording the message. Success clears nothing: the last error sticks
/// around until the next failure, matching the documented contract.
fn ffi_boundary(f: impl FnOnce() -> FfiResult) -> CovlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CovlabStatus::Ok,
        Ok(Err((status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown internal panic".to_string());
            set_last_error(&format!("internal panic: {message}"));
            CovlabStatus::Panic
        }
    }
}

unsafe fn spd_ref<'a>(m: *const CovlabSpd, name: &str) -> Result<&'a SpdMatrix, (CovlabStatus, String)> {
    m.as_ref().map(|h| &h.0).ok_or_else(|| null_err(name))
}

unsafe fn stream_mut<'a>(
    s: *mut CovlabStream,
    name: &str,
) -> Result<&'a mut SeedStream, (CovlabStatus, String)> {
    s.as_mut().map(|h| &mut h.0).ok_or_else(|| null_err(name))
}

unsafe fn out_slot<'a, T>(out: *mut T, name: &str) -> Result<&'a mut T, (CovlabStatus, String)> {
    out.as_mut().ok_or_else(|| null_err(name))
}

fn loss_spec(family: CovlabLossFamily, power: u32, scale: f64) -> Result<LossSpec, (CovlabStatus, String)> {
    let family = match family {
        CovlabLossFamily::SqSpectral => LossFamily::SqSpectral,
        CovlabLossFamily::SqFrobenius => LossFamily::SqFrobenius,
        CovlabLossFamily::SqLogDet => LossFamily::SqLogDet,
        CovlabLossFamily::SqSpectralPrecision => LossFamily::SqSpectralPrecision,
        CovlabLossFamily::BregmanSqEuclid => LossFamily::Bregman(PhiSpec::SquaredEuclid),
        CovlabLossFamily::BregmanVonNeumann => LossFamily::Bregman(PhiSpec::VonNeumann),
        CovlabLossFamily::BregmanStein => LossFamily::Bregman(PhiSpec::Stein),
    };
    let power = u8::try_from(power).map_err(|_| arg_err(format!("loss power {power} out of range")))?;
    LossSpec::new(family, power, scale).map_err(lib_err)
}

/// Inverse-Wishart parameters with a null scale meaning the zero matrix
/// (the improper limit used throughout the risk formulas).
unsafe fn iw_params(df: f64, scale: *const CovlabSpd, p: usize) -> Result<IwParams, (CovlabStatus, String)> {
    let scale = match scale.as_ref() {
        Some(handle) => handle.0.sym().clone(),
        None => SymmetricMatrix::zeros(p),
    };
    IwParams::new(df, scale).map_err(lib_err)
}

/// Version of the library as a static C string.
#[no_mangle]
pub extern "C" fn covlab_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Stable name of a status code, as a static C string.
#[no_mangle]
pub extern "C" fn covlab_status_name(status: CovlabStatus) -> *const c_char {
    let name: &'static str = match status {
        CovlabStatus::Ok => "ok\0",
        CovlabStatus::NullArgument => "null_argument\0",
        CovlabStatus::InvalidArgument => "invalid_argument\0",
        CovlabStatus::NotPositiveDefinite => "not_positive_definite\0",
        CovlabStatus::Unsupported => "unsupported\0",
        CovlabStatus::NumericalFailure => "numerical_failure\0",
        CovlabStatus::BufferTooSmall => "buffer_too_small\0",
        CovlabStatus::Panic => "panic\0",
    };
    name.as_ptr().cast()
}

/// Message of the most recent failing call on the current thread, empty
/// until something fails. The pointer stays valid until this thread's
/// next failing covlab call.
#[no_mangle]
pub extern "C" fn covlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Builds an SPD matrix handle from a row-major `dim × dim` buffer.
///
/// # Safety
/// `entries` must point to at least `dim * dim` readable doubles and
/// `out` to a writable pointer slot. On success `*out` owns the handle.
#[no_mangle]
pub unsafe extern "C" fn covlab_spd_new(
    dim: usize,
    entries: *const f64,
    out: *mut *mut CovlabSpd,
) -> CovlabStatus {
    ffi_boundary(|| {
        let out = out_slot(out, "out")?;
        if dim == 0 {
            return Err(arg_err("dim must be at least 1"));
        }
        if entries.is_null() {
            return Err(null_err("entries"));
        }
        let values = std::slice::from_raw_parts(entries, dim * dim);
        let mut array = ndarray::Array2::<f64>::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                array[(i, j)] = values[i * dim + j];
            }
        }
        let sym = SymmetricMatrix::new(array).map_err(lib_err)?;
        let spd = SpdMatrix::new(sym).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CovlabSpd(spd)));
        Ok(())
    })
}

/// Builds the `dim × dim` identity matrix handle.
///
/// # Safety
/// `out` must point to a writable pointer slot; on success `*out` owns
/// the handle.
#[no_mangle]
pub unsafe extern "C" fn covlab_spd_identity(dim: usize, out: *mut *mut CovlabSpd) -> CovlabStatus {
    ffi_boundary(|| {
        let out = out_slot(out, "out")?;
        if dim == 0 {
            return Err(arg_err("dim must be at least 1"));
        }
        *out = Box::into_raw(Box::new(CovlabSpd(SpdMatrix::identity(dim))));
        Ok(())
    })
}

/// Releases a matrix handle. Null is a no-op.
///
/// # Safety
/// `m` must be a handle produced by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn covlab_spd_free(m: *mut CovlabSpd) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Dimension of a matrix handle; 0 for null.
///
/// # Safety
/// `m` must be null or a live handle produced by this library.
#[no_mangle]
pub unsafe extern "C" fn covlab_spd_dim(m: *const CovlabSpd) -> usize {
    m.as_ref().map_or(0, |h| h.0.dim())
}

/// Copies the matrix entries row-major into `buf`.
///
/// # Safety
/// `buf` must point to at least `len` writable doubles; `len` must be at
/// least `dim * dim`.
#[no_mangle]
pub unsafe extern "C" fn covlab_spd_entries(
    m: *const CovlabSpd,
    buf: *mut f64,
    len: usize,
) -> CovlabStatus {
    ffi_boundary(|| {
        let matrix = spd_ref(m, "m")?;
        if buf.is_null() {
            return Err(null_err("buf"));
        }
        let p = matrix.dim();
        if len < p * p {
            return Err((
                CovlabStatus::BufferTooSmall,
                format!("need {} doubles, buffer holds {len}", p * p),
            ));
        }
        let slice = std::slice::from_raw_parts_mut(buf, p * p);
        let entries = matrix.entries();
        for i in 0..p {
            for j in 0..p {
                slice[i * p + j] = entries[(i, j)];
            }
        }
        Ok(())
    })
}

/// Log-determinant of an SPD handle.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn covlab_spd_log_det(m: *const CovlabSpd, out: *mut f64) -> CovlabStatus {
    ffi_boundary(|| {
        let matrix = spd_ref(m, "m")?;
        *out_slot(out, "out")? = matrix.log_det();
        Ok(())
    })
}

/// Creates a deterministic random stream for `(base_seed, tag, index)`;
/// the same triple always reproduces the same draws.
///
/// # Safety
/// `out` must point to a writable pointer slot. On success `*out` owns
/// the handle; release it with [`covlab_stream_free`].
#[no_mangle]
pub unsafe extern "C" fn covlab_stream_new(
    base_seed: u64,
    tag: u64,
    index: u64,
    out: *mut *mut CovlabStream,
) -> CovlabStatus {
    ffi_boundary(|| {
        let out = out_slot(out, "out")?;
        *out = Box::into_raw(Box::new(CovlabStream(derive_stream(base_seed, tag, index))));
        Ok(())
    })
}

/// Releases a stream handle. Null is a no-op.
///
/// # Safety
/// `s` must be a handle produced by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn covlab_stream_free(s: *mut CovlabStream) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Draws a Wishart matrix with the given degrees of freedom and scale
/// (mean = df · scale), advancing the stream.
///
/// # Safety
/// `stream` and `scale` must be live handles; `out` must be writable and
/// on success owns a new matrix handle.
#[no_mangle]
pub unsafe extern "C" fn covlab_sample_wishart(
    stream: *mut CovlabStream,
    df: f64,
    scale: *const CovlabSpd,
    out: *mut *mut CovlabSpd,
) -> CovlabStatus {
    ffi_boundary(|| {
        let out = out_slot(out, "out")?;
        let stream = stream_mut(stream, "stream")?;
        let scale = spd_ref(scale, "scale")?;
        let params = WishartParams::new(df, scale.clone()).map_err(lib_err)?;
        let draw = sample_wishart(stream, &params).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CovlabSpd(draw)));
        Ok(())
    })
}

/// Draws an inverse-Wishart matrix (proper parameters required),
/// advancing the stream.
///
/// # Safety
/// `stream` and `scale` must be live handles; `out` must be writable and
/// on success owns a new matrix handle.
#[no_mangle]
pub unsafe extern "C" fn covlab_sample_inverse_wishart(
    stream: *mut CovlabStream,
    df: f64,
    scale: *const CovlabSpd,
    out: *mut *mut CovlabSpd,
) -> CovlabStatus {
    ffi_boundary(|| {
        let out = out_slot(out, "out")?;
        let stream = stream_mut(stream, "stream")?;
        let scale = spd_ref(scale, "scale")?;
        let params = IwParams::new(df, scale.sym().clone()).map_err(lib_err)?;
        let draw = sample_inverse_wishart(stream, &params).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CovlabSpd(draw)));
        Ok(())
    })
}

/// Fills `buf` with `n` rows of zero-mean Gaussian data with covariance
/// `sigma`, row-major `n × dim`, advancing the stream.
///
/// # Safety
/// `stream` and `sigma` must be live handles; `buf` must point to at
/// least `len` writable doubles with `len ≥ n * dim`.
#[no_mangle]
pub unsafe extern "C" fn covlab_sample_gaussian_data(
    stream: *mut CovlabStream,
    sigma: *const CovlabSpd,
    n: usize,
    buf: *mut f64,
    len: usize,
) -> CovlabStatus {
    ffi_boundary(|| {
        let stream = stream_mut(stream, "stream")?;
        let sigma = spd_ref(sigma, "sigma")?;
        if buf.is_null() {
            return Err(null_err("buf"));
        }
        if n == 0 {
            return Err(arg_err("n must be at least 1"));
        }
        let p = sigma.dim();
        if len < n * p {
            return Err((
                CovlabStatus::BufferTooSmall,
                format!("need {} doubles, buffer holds {len}", n * p),
            ));
        }
        let data = sample_mvn(stream, sigma, n);
        let slice = std::slice::from_raw_parts_mut(buf, n * p);
        for i in 0..n {
            for j in 0..p {
                slice[i * p + j] = data[(i, j)];
            }
        }
        Ok(())
    })
}

/// Evaluates a loss `d(a, b)` between two SPD matrices.
///
/// `power` must be 1 or 2 and applies only to the norm-based families;
/// pass 2 for the others. `scale` multiplies the result.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn covlab_loss_evaluate(
    family: CovlabLossFamily,
    power: u32,
    scale: f64,
    a: *const CovlabSpd,
    b: *const CovlabSpd,
    out: *mut f64,
) -> CovlabStatus {
    ffi_boundary(|| {
        let spec = loss_spec(family, power, scale)?;
        let a = spd_ref(a, "a")?;
        let b = spd_ref(b, "b")?;
        *out_slot(out, "out")? = spec.evaluate_spd(a, b).map_err(lib_err)?;
        Ok(())
    })
}

/// Posterior mean of the covariance under an inverse-Wishart prior
/// `IW(prior_df, prior_scale)` after `n` observations with sample
/// covariance `sample_cov`. A null `prior_scale` means the zero matrix.
///
/// # Safety
/// `sample_cov` must be a live handle and `prior_scale` null or live;
/// `out` must be writable and on success owns a new matrix handle.
#[no_mangle]
pub unsafe extern "C" fn covlab_posterior_mean(
    prior_df: f64,
    prior_scale: *const CovlabSpd,
    n: usize,
    sample_cov: *const CovlabSpd,
    out: *mut *mut CovlabSpd,
) -> CovlabStatus {
    ffi_boundary(|| {
        let out = out_slot(out, "out")?;
        let s = spd_ref(sample_cov, "sample_cov")?;
        let prior = iw_params(prior_df, prior_scale, s.dim())?;
        let posterior = iw_posterior(&prior, n, s.sym()).map_err(lib_err)?;
        let mean = posterior_mean(&posterior).map_err(lib_err)?;
        let spd = SpdMatrix::new(mean).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CovlabSpd(spd)));
        Ok(())
    })
}

/// Closed-form replicate-averaged posterior risk at the given truth for
/// the squared Frobenius and squared log-determinant families. A null
/// `prior_scale` means the zero matrix (required for the log-det form).
///
/// # Safety
/// `truth` must be a live handle and `prior_scale` null or live; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn covlab_exact_prisk(
    family: CovlabLossFamily,
    power: u32,
    scale: f64,
    truth: *const CovlabSpd,
    n: usize,
    prior_df: f64,
    prior_scale: *const CovlabSpd,
    out: *mut f64,
) -> CovlabStatus {
    ffi_boundary(|| {
        let spec = loss_spec(family, power, scale)?;
        let truth = spd_ref(truth, "truth")?;
        let prior = iw_params(prior_df, prior_scale, truth.dim())?;
        *out_slot(out, "out")? = exact_prisk(&spec, truth, n, &prior).map_err(lib_err)?;
        Ok(())
    })
}

/// Exact affinity statistic ξ of the sign-hypercube mixture.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn covlab_xi_exact(
    p: usize,
    n: usize,
    eps: f64,
    out: *mut f64,
) -> CovlabStatus {
    ffi_boundary(|| {
        *out_slot(out, "out")? = xi_exact(p, n, eps).map_err(lib_err)?;
        Ok(())
    })
}

/// Spectral-norm minimax lower bound over the bounded-eigenvalue class.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn covlab_spectral_lower_bound(
    p: usize,
    n: usize,
    tau1: f64,
    tau2: f64,
    c: f64,
    out: *mut f64,
) -> CovlabStatus {
    ffi_boundary(|| {
        *out_slot(out, "out")? = spectral_lower_bound(p, n, tau1, tau2, c).map_err(lib_err)?;
        Ok(())
    })
}

/// Assouad hypercube lower bound for the squared Frobenius risk.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn covlab_assouad_frobenius_bound(
    p: usize,
    n: usize,
    tau: f64,
    c1: f64,
    out: *mut f64,
) -> CovlabStatus {
    ffi_boundary(|| {
        let spec = HypercubeSpec { p, n, tau, c1 };
        *out_slot(out, "out")? = assouad_frobenius_bound(&spec).map_err(lib_err)?;
        Ok(())
    })
}

/// Runs a named self-verification suite (or "all") with the given seed
/// and reports how many checks failed. Returns Ok even when checks fail;
/// inspect `*out_failed`.
///
/// # Safety
/// `suite` must be a NUL-terminated string; `out_failed` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn covlab_verify(
    suite: *const c_char,
    seed: u64,
    out_failed: *mut usize,
) -> CovlabStatus {
    ffi_boundary(|| {
        let out = out_slot(out_failed, "out_failed")?;
        if suite.is_null() {
            return Err(null_err("suite"));
        }
        let name = CStr::from_ptr(suite)
            .to_str()
            .map_err(|_| arg_err("suite name is not valid UTF-8"))?;
        let report = run_suite(name, seed).map_err(lib_err)?;
        *out = report.failed;
        Ok(())
    })
}
