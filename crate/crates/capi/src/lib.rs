//! C ABI over the scalar moment formulas and the tridiagonal samplers.
//!
//! Every function returns a [`BmStatus`]; results are written through out
//! pointers. On any non-`BM_STATUS_OK` return the thread-local error message
//! is updated and can be fetched with [`bm_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use beta_moments::ensembles::{sample_inverse_laguerre, sample_laguerre_tridiag};
use beta_moments::limits::{
    cjbe_finite_f0, f0_limit, forrester_joint_moment, jacobi_inverse_moment,
    laguerre_finite_moment, moments_connection, x_moment_limit, x_second_moment_closed,
    y_moment_limit, NormalizationMode,
};
use beta_moments::{Error, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Status code returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmStatus {
    Ok = 0,
    /// Parameter outside the domain of the requested quantity.
    Domain = 1,
    /// Evaluation at a pole of a gamma-type factor.
    Pole = 2,
    /// Adaptive quadrature failed to reach the requested tolerance.
    NonConvergence = 3,
    /// Structurally invalid argument (bad length, non-positive beta, ...).
    InvalidArgument = 4,
    /// A required pointer was null.
    NullPointer = 5,
    /// Internal panic caught at the boundary.
    Internal = 6,
}

/// Normalization convention for the Laguerre-type moment formulas.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmNormalization {
    /// Literal transcription of the published formula.
    AsPrinted = 0,
    /// Convention reconciled against the density (quadrature-checked).
    Calibrated = 1,
}

impl From<BmNormalization> for NormalizationMode {
    fn from(m: BmNormalization) -> Self {
        match m {
            BmNormalization::AsPrinted => NormalizationMode::AsPrinted,
            BmNormalization::Calibrated => NormalizationMode::OracleCalibrated,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn status_of(err: &Error) -> BmStatus {
    match err {
        Error::Domain(_) => BmStatus::Domain,
        Error::Pole(_) => BmStatus::Pole,
        Error::QuadratureNonConvergence { .. } => BmStatus::NonConvergence,
        Error::InvalidArgument(_) => BmStatus::InvalidArgument,
    }
}

/// Runs `f`, writes its value through `out`, converts errors and panics to
/// status codes.
fn run_scalar(out: *mut f64, f: impl FnOnce() -> Result<f64>) -> BmStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return BmStatus::NullPointer;
    }
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => {
            unsafe { *out = v };
            BmStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            BmStatus::Internal
        }
    }
}

/// Copies the message of the most recent error on this thread into `buf`
/// (NUL-terminated, truncated to `len` bytes) and returns the full message
/// length in bytes, excluding the NUL. `buf` may be null to query the length.
#[no_mangle]
pub extern "C" fn bm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Limiting moment E[X_{beta,tau}^{2h}] of the centered microscopic overlap.
#[no_mangle]
pub extern "C" fn bm_x_moment_limit(beta: f64, tau: f64, h: usize, out: *mut f64) -> BmStatus {
    run_scalar(out, || x_moment_limit(beta, tau, h))
}

/// Closed form beta / ((2 tau - 1)(4 tau + beta)) for the h = 1 case.
#[no_mangle]
pub extern "C" fn bm_x_second_moment_closed(beta: f64, tau: f64, out: *mut f64) -> BmStatus {
    run_scalar(out, || x_second_moment_closed(beta, tau))
}

/// Leading-order constant f0(beta, delta, s) of the joint moment asymptotics.
#[no_mangle]
pub extern "C" fn bm_f0_limit(
    beta: f64,
    delta_re: f64,
    delta_im: f64,
    s: f64,
    out: *mut f64,
) -> BmStatus {
    run_scalar(out, || f0_limit(beta, Complex64::new(delta_re, delta_im), s))
}

/// Finite-N moment ratio for the circular Jacobi ensemble via Morris integrals.
#[no_mangle]
pub extern "C" fn bm_cjbe_finite_f0(
    n: usize,
    beta: f64,
    delta_re: f64,
    delta_im: f64,
    s: f64,
    out: *mut f64,
) -> BmStatus {
    run_scalar(out, || cjbe_finite_f0(n, beta, Complex64::new(delta_re, delta_im), s))
}

/// Joint moment limit at delta = 0 and integer s, for half-integer-avoiding h.
#[no_mangle]
pub extern "C" fn bm_forrester_joint_moment(
    beta: f64,
    s: usize,
    h: f64,
    out: *mut f64,
) -> BmStatus {
    run_scalar(out, || forrester_joint_moment(beta, s, h))
}

/// r-th moment of the limiting row-sum variable Y_beta(nu).
#[no_mangle]
pub extern "C" fn bm_y_moment_limit(
    beta: f64,
    nu: f64,
    r: usize,
    mode: BmNormalization,
    out: *mut f64,
) -> BmStatus {
    run_scalar(out, || y_moment_limit(beta, nu, r, mode.into()))
}

/// Finite-N inverse-Laguerre moment of (sum x)^r.
#[no_mangle]
pub extern "C" fn bm_laguerre_finite_moment(
    beta: f64,
    nu: f64,
    n: usize,
    r: usize,
    mode: BmNormalization,
    out: *mut f64,
) -> BmStatus {
    run_scalar(out, || laguerre_finite_moment(beta, nu, n, r, mode.into()))
}

/// Finite-N Jacobi-type inverse moment (literal published evaluation).
#[no_mangle]
pub extern "C" fn bm_jacobi_inverse_moment(
    beta: f64,
    nu: f64,
    mu: f64,
    n: usize,
    r: usize,
    out: *mut f64,
) -> BmStatus {
    run_scalar(out, || jacobi_inverse_moment(beta, nu, mu, n, r))
}

/// Binomial alternating sum turning the finite moments
/// E_k[(sum x)^{2h}], k = 1..2h (passed in that order), into the centered
/// limit moment E[X^{2h}].
///
/// # Safety
/// `finite_moments` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn bm_moments_connection(
    beta: f64,
    tau: f64,
    h: usize,
    finite_moments: *const f64,
    len: usize,
    out: *mut f64,
) -> BmStatus {
    if finite_moments.is_null() && len > 0 {
        set_error("finite_moments pointer is null");
        return BmStatus::NullPointer;
    }
    let slice = if len == 0 {
        &[]
    } else {
        std::slice::from_raw_parts(finite_moments, len)
    };
    run_scalar(out, || moments_connection(beta, tau, h, slice))
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

enum SamplerKind {
    Laguerre,
    InverseLaguerre,
}

/// Opaque handle owning a tridiagonal-model sampler and its RNG state.
pub struct BmSampler {
    kind: SamplerKind,
    n: usize,
    beta: f64,
    nu: f64,
    rng: ChaCha8Rng,
}

fn sampler_new(
    kind: SamplerKind,
    n: usize,
    beta: f64,
    nu: f64,
    seed: u64,
    out: *mut *mut BmSampler,
) -> BmStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return BmStatus::NullPointer;
    }
    if n == 0 {
        set_error("N must be >= 1");
        return BmStatus::InvalidArgument;
    }
    if !(beta > 0.0) || !beta.is_finite() || nu <= -1.0 {
        set_error("need beta > 0 and nu > -1");
        return BmStatus::InvalidArgument;
    }
    let handle = Box::new(BmSampler {
        kind,
        n,
        beta,
        nu,
        rng: ChaCha8Rng::seed_from_u64(seed),
    });
    unsafe { *out = Box::into_raw(handle) };
    BmStatus::Ok
}

/// Creates a Laguerre sampler (weight x^nu e^{-x}) with a seeded RNG.
#[no_mangle]
pub extern "C" fn bm_sampler_new_laguerre(
    n: usize,
    beta: f64,
    nu: f64,
    seed: u64,
    out: *mut *mut BmSampler,
) -> BmStatus {
    sampler_new(SamplerKind::Laguerre, n, beta, nu, seed, out)
}

/// Creates an inverse-Laguerre sampler (image of Laguerre under x -> 2/x).
#[no_mangle]
pub extern "C" fn bm_sampler_new_inverse_laguerre(
    n: usize,
    beta: f64,
    nu: f64,
    seed: u64,
    out: *mut *mut BmSampler,
) -> BmStatus {
    sampler_new(SamplerKind::InverseLaguerre, n, beta, nu, seed, out)
}

/// Number of particles in one draw from this sampler.
#[no_mangle]
pub extern "C" fn bm_sampler_dim(sampler: *const BmSampler) -> usize {
    if sampler.is_null() {
        return 0;
    }
    unsafe { (*sampler).n }
}

/// Draws one ordered configuration into `out`, which must hold
/// `bm_sampler_dim` doubles; `len` is checked against that.
///
/// # Safety
/// `sampler` must come from a `bm_sampler_new_*` call and `out` must point to
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bm_sampler_draw(
    sampler: *mut BmSampler,
    out: *mut f64,
    len: usize,
) -> BmStatus {
    if sampler.is_null() || out.is_null() {
        set_error("sampler or out pointer is null");
        return BmStatus::NullPointer;
    }
    let s = &mut *sampler;
    if len != s.n {
        set_error("out buffer length does not match sampler dimension");
        return BmStatus::InvalidArgument;
    }
    let drawn = match catch_unwind(AssertUnwindSafe(|| match s.kind {
        SamplerKind::Laguerre => sample_laguerre_tridiag(s.n, s.beta, s.nu, &mut s.rng),
        SamplerKind::InverseLaguerre => sample_inverse_laguerre(s.n, s.beta, s.nu, &mut s.rng),
    })) {
        Ok(Ok(v)) => v,
        Ok(Err(e)) => {
            set_error(&e.to_string());
            return status_of(&e);
        }
        Err(_) => {
            set_error("internal panic");
            return BmStatus::Internal;
        }
    };
    std::ptr::copy_nonoverlapping(drawn.as_ptr(), out, len);
    BmStatus::Ok
}

/// Releases a sampler handle. A null pointer is a no-op.
///
/// # Safety
/// `sampler` must come from a `bm_sampler_new_*` call and must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn bm_sampler_free(sampler: *mut BmSampler) {
    if !sampler.is_null() {
        drop(Box::from_raw(sampler));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_roundtrip() {
        let mut v = 0.0;
        assert_eq!(bm_x_second_moment_closed(2.0, 3.0, &mut v), BmStatus::Ok);
        assert!((v - 2.0 / (5.0 * 14.0)).abs() < 1e-15);

        assert_eq!(bm_x_moment_limit(2.0, 3.0, 1, &mut v), BmStatus::Ok);
        assert!((v - 2.0 / 70.0).abs() < 1e-12);
    }

    #[test]
    fn domain_error_maps_to_status_and_message() {
        let mut v = 0.0;
        let st = bm_x_moment_limit(2.0, 0.25, 1, &mut v);
        assert_eq!(st, BmStatus::Domain);
        let needed = bm_last_error_message(std::ptr::null_mut(), 0);
        assert!(needed > 0);
        let mut buf = vec![0i8; needed + 1];
        let got = bm_last_error_message(buf.as_mut_ptr().cast(), buf.len());
        assert_eq!(got, needed);
        let msg = unsafe { std::ffi::CStr::from_ptr(buf.as_ptr().cast()) };
        assert!(msg.to_str().unwrap().contains("tau"));
    }

    #[test]
    fn null_out_pointer() {
        assert_eq!(
            bm_x_moment_limit(2.0, 3.0, 1, std::ptr::null_mut()),
            BmStatus::NullPointer
        );
    }

    #[test]
    fn normalization_modes_differ() {
        let (mut printed, mut calibrated) = (0.0, 0.0);
        assert_eq!(
            bm_y_moment_limit(4.0, 5.0, 2, BmNormalization::AsPrinted, &mut printed),
            BmStatus::Ok
        );
        assert_eq!(
            bm_y_moment_limit(4.0, 5.0, 2, BmNormalization::Calibrated, &mut calibrated),
            BmStatus::Ok
        );
        assert!(printed != calibrated);
    }

    #[test]
    fn connection_slice_passthrough() {
        // h = 1: E[X^2] = (E_2 - 2 E_1) / 2 with E_k = E_k[(sum x)^2].
        let finite = [0.3, 0.8];
        let mut v = 0.0;
        let st = unsafe {
            bm_moments_connection(2.0, 3.0, 1, finite.as_ptr(), finite.len(), &mut v)
        };
        assert_eq!(st, BmStatus::Ok);
        assert!((v - (0.8 - 2.0 * 0.3) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn sampler_lifecycle_and_determinism() {
        let mut h1: *mut BmSampler = std::ptr::null_mut();
        let mut h2: *mut BmSampler = std::ptr::null_mut();
        assert_eq!(bm_sampler_new_inverse_laguerre(3, 2.0, 2.5, 42, &mut h1), BmStatus::Ok);
        assert_eq!(bm_sampler_new_inverse_laguerre(3, 2.0, 2.5, 42, &mut h2), BmStatus::Ok);
        assert_eq!(bm_sampler_dim(h1), 3);

        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        unsafe {
            assert_eq!(bm_sampler_draw(h1, a.as_mut_ptr(), 3), BmStatus::Ok);
            assert_eq!(bm_sampler_draw(h2, b.as_mut_ptr(), 3), BmStatus::Ok);
        }
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0] >= w[1]));
        assert!(a.iter().all(|&x| x > 0.0));

        // Wrong buffer length is rejected before any write.
        unsafe {
            assert_eq!(bm_sampler_draw(h1, a.as_mut_ptr(), 2), BmStatus::InvalidArgument);
            bm_sampler_free(h1);
            bm_sampler_free(h2);
            bm_sampler_free(std::ptr::null_mut());
        }
    }

    #[test]
    fn header_is_generated_and_compiles_as_c() {
        let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/beta_moments.h");
        let text = std::fs::read_to_string(header).expect("header generated by build.rs");
        for sym in [
            "bm_x_moment_limit",
            "bm_f0_limit",
            "bm_sampler_draw",
            "BM_STATUS_OK",
            "BM_NORMALIZATION_CALIBRATED",
        ] {
            assert!(text.contains(sym), "header missing {sym}");
        }

        let cc = ["cc", "gcc", "clang"]
            .iter()
            .find(|c| {
                std::process::Command::new(c)
                    .arg("--version")
                    .output()
                    .is_ok()
            })
            .copied();
        let Some(cc) = cc else { return };
        let dir = std::env::temp_dir().join("bm_capi_header_check");
        std::fs::create_dir_all(&dir).unwrap();
        let src = dir.join("check.c");
        std::fs::write(
            &src,
            "#include \"beta_moments.h\"\nint main(void) { double v; return (int) bm_x_second_moment_closed(2.0, 3.0, &v); }\n",
        )
        .unwrap();
        let status = std::process::Command::new(cc)
            .arg("-std=c99")
            .arg("-fsyntax-only")
            .arg(format!("-I{}", std::path::Path::new(header).parent().unwrap().display()))
            .arg(&src)
            .status()
            .unwrap();
        assert!(status.success(), "header failed to compile as C99");
    }
}
