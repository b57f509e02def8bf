//! C interface to `lightcone`.
//!
//! Sections live behind the opaque [`LcSection`] handle. Every fallible call
//! returns an [`LcStatus`]; on failure the message is available from
//! [`lc_last_error_message`] on the same thread. Strings returned by the
//! library are NUL-terminated and must be released with [`lc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lightcone::cross_section::{CrossSection, GeometryReport};
use lightcone::flow::{self, FlowConfig};
use lightcone::io::{self, SectionFile};
use lightcone::lorentz::{self, FourVector, LorentzMatrix};
use lightcone::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    NumericalError = 4,
    Panic = 5,
}

/// Opaque handle to a cross section.
pub struct LcSection {
    inner: CrossSection,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> LcStatus {
    match e {
        Error::Parse(_) | Error::Io(_) => LcStatus::ParseError,
        Error::InvalidBandlimit(_)
        | Error::InvalidInput(_)
        | Error::InvalidReferenceVector(_)
        | Error::NotRestrictedLorentz(_)
        | Error::BandlimitMismatch(..)
        | Error::ShapeMismatch { .. }
        | Error::Config(_)
        | Error::GenerationFailed(_)
        | Error::SRangeTooLarge(_) => LcStatus::InvalidArgument,
        _ => LcStatus::NumericalError,
    }
}

/// Runs `f`, converting errors and panics into a status and recording the message.
fn guard(f: impl FnOnce() -> Result<(), (LcStatus, String)>) -> LcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LcStatus::Panic
        }
    }
}

fn lift<T>(r: lightcone::Result<T>) -> Result<T, (LcStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (LcStatus, String) {
    (LcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn section<'a>(p: *const LcSection) -> Result<&'a CrossSection, (LcStatus, String)> {
    p.as_ref().map(|s| &s.inner).ok_or_else(|| null("section"))
}

unsafe fn emit_section(out: *mut *mut LcSection, s: CrossSection) -> Result<(), (LcStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(LcSection { inner: s }));
    Ok(())
}

unsafe fn emit_string(out: *mut *mut c_char, s: String) -> Result<(), (LcStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    let c = CString::new(s).map_err(|_| (LcStatus::NumericalError, "string contains NUL".to_string()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn emit_f64(out: *mut f64, v: f64) -> Result<(), (LcStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = v;
    Ok(())
}

unsafe fn read_array<const N: usize>(p: *const f64, what: &str) -> Result<[f64; N], (LcStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    let mut a = [0.0; N];
    a.copy_from_slice(std::slice::from_raw_parts(p, N));
    Ok(a)
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn lc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn lc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a section. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lc_section_free(s: *mut LcSection) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Round sphere `ω ≡ rho`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_section_round(bandlimit: usize, rho: f64, out: *mut *mut LcSection) -> LcStatus {
    guard(|| {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err((LcStatus::InvalidArgument, format!("radius must be positive, got {rho}")));
        }
        emit_section(out, lift(CrossSection::round(bandlimit, rho))?)
    })
}

/// The STCMC section with associated 4-vector `z[0..4]`.
///
/// # Safety
/// `z` must point to 4 doubles and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_section_from_z(bandlimit: usize, z: *const f64, out: *mut *mut LcSection) -> LcStatus {
    guard(|| {
        let z = FourVector(read_array::<4>(z, "z")?);
        emit_section(out, lift(lorentz::stcmc_from_z(&z, bandlimit))?)
    })
}

/// Parses a section file (`{"bandlimit", "omega_coeffs", "meta"}`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_section_from_json(json: *const c_char, out: *mut *mut LcSection) -> LcStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (LcStatus::ParseError, format!("input is not UTF-8: {e}")))?;
        let file = lift(SectionFile::parse(text))?;
        emit_section(out, lift(file.section())?)
    })
}

/// Serializes a section in the section-file format.
///
/// # Safety
/// `s` must be a live section and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_section_to_json(s: *const LcSection, out: *mut *mut c_char) -> LcStatus {
    guard(|| {
        let text = lift(SectionFile::new(section(s)?, Default::default()).to_json())?;
        emit_string(out, text)
    })
}

/// Full geometry report as JSON, measured against the STCMC reference of the section.
///
/// # Safety
/// `s` must be a live section and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_section_report_json(s: *const LcSection, out: *mut *mut c_char) -> LcStatus {
    guard(|| {
        let report = lift(GeometryReport::of(section(s)?, None))?;
        emit_string(out, lift(io::to_json(&report))?)
    })
}

/// Bandlimit of a section, or 0 for null.
///
/// # Safety
/// `s` must be null or a live section.
#[no_mangle]
pub unsafe extern "C" fn lc_section_bandlimit(s: *const LcSection) -> usize {
    s.as_ref().map_or(0, |s| s.inner.bandlimit())
}

/// Area `∫ω²`.
///
/// # Safety
/// `s` must be a live section and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_section_area(s: *const LcSection, out: *mut f64) -> LcStatus {
    guard(|| emit_f64(out, section(s)?.area()))
}

/// L² norm of the trace-free part of the scalar second fundamental form.
///
/// # Safety
/// `s` must be a live section and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_section_tracefree_norm(s: *const LcSection, out: *mut f64) -> LcStatus {
    guard(|| emit_f64(out, section(s)?.tracefree_norm()))
}

/// Pinching constant against the STCMC section built from Z.
///
/// # Safety
/// `s` must be a live section and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_section_kappa(s: *const LcSection, out: *mut f64) -> LcStatus {
    guard(|| emit_f64(out, lift(lorentz::kappa_bound(section(s)?))?))
}

/// Associated 4-vector `(t, x, y, z)` written to `out[0..4]`.
///
/// # Safety
/// `s` must be a live section and `out` valid for 4 writes.
#[no_mangle]
pub unsafe extern "C" fn lc_section_z_vector(s: *const LcSection, out: *mut f64) -> LcStatus {
    guard(|| {
        let z = lift(lorentz::z_vector(section(s)?))?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        std::slice::from_raw_parts_mut(out, 4).copy_from_slice(&z.0);
        Ok(())
    })
}

/// Image of a section under the Lorentz matrix `m[0..16]` (row-major).
///
/// # Safety
/// `s` must be a live section, `m` must point to 16 doubles and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_section_apply_lorentz(
    s: *const LcSection,
    m: *const f64,
    out: *mut *mut LcSection,
) -> LcStatus {
    guard(|| {
        let lambda = lift(LorentzMatrix::from_row_major(read_array::<16>(m, "matrix")?))?;
        emit_section(out, lift(lorentz::apply_to_section(&lambda, section(s)?))?)
    })
}

/// Image of a section under the pure boost with velocity parameter `a[0..3]`.
///
/// # Safety
/// `s` must be a live section, `a` must point to 3 doubles and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_section_boost(s: *const LcSection, a: *const f64, out: *mut *mut LcSection) -> LcStatus {
    guard(|| {
        let a = read_array::<3>(a, "boost")?;
        if a.iter().any(|x| !x.is_finite()) {
            return Err((LcStatus::InvalidArgument, "boost must be finite".into()));
        }
        emit_section(out, lift(lorentz::apply_to_section(&lorentz::boost_toward(a), section(s)?))?)
    })
}

/// Boosts a section until its first moments vanish. The applied
/// transformation is written row-major to `lambda_out[0..16]` unless it is null.
///
/// # Safety
/// `s` must be a live section, `out` valid for writes and `lambda_out` null or valid for 16 writes.
#[no_mangle]
pub unsafe extern "C" fn lc_section_balance(
    s: *const LcSection,
    out: *mut *mut LcSection,
    lambda_out: *mut f64,
) -> LcStatus {
    guard(|| {
        let b = lift(lorentz::balance(section(s)?))?;
        if !lambda_out.is_null() {
            std::slice::from_raw_parts_mut(lambda_out, 16).copy_from_slice(&b.lambda.row_major());
        }
        emit_section(out, b.section)
    })
}

/// Runs the null mean curvature flow and returns its time series as CSV.
/// The final section is written to `final_out` unless it is null.
///
/// # Safety
/// `s` must be a live section, `csv_out` valid for writes and `final_out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_flow_run(
    s: *const LcSection,
    dt: f64,
    t_max: f64,
    normalized: bool,
    csv_out: *mut *mut c_char,
    final_out: *mut *mut LcSection,
) -> LcStatus {
    guard(|| {
        let cfg = FlowConfig {
            dt_initial: dt,
            t_max,
            normalized,
            ..FlowConfig::default()
        };
        let run = lift(flow::run(section(s)?, &cfg))?;
        let mut buf = Vec::new();
        flow::write_csv(&run.samples, &mut buf).map_err(|e| (LcStatus::NumericalError, e.to_string()))?;
        let csv = String::from_utf8(buf).expect("csv is UTF-8");
        if !final_out.is_null() {
            emit_section(final_out, run.last.section)?;
        }
        emit_string(csv_out, csv)
    })
}
