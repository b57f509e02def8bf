use std::ffi::{CStr, CString};
use std::f64::consts::PI;
use std::ptr;

use lightcone_ffi::*;

struct Section(*mut LcSection);

impl Drop for Section {
    fn drop(&mut self) {
        unsafe { lc_section_free(self.0) }
    }
}

fn round(bandlimit: usize, rho: f64) -> Section {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { lc_section_round(bandlimit, rho, &mut out) }, LcStatus::Ok);
    Section(out)
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { lc_string_free(p) };
    s
}

fn last_error() -> String {
    let p = lc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn round_sphere_scalars() {
    let s = round(8, 2.0);
    let mut area = 0.0;
    assert_eq!(unsafe { lc_section_area(s.0, &mut area) }, LcStatus::Ok);
    assert!((area / (16.0 * PI) - 1.0).abs() < 1e-12);
    let mut z = [0.0; 4];
    assert_eq!(unsafe { lc_section_z_vector(s.0, z.as_mut_ptr()) }, LcStatus::Ok);
    assert!((z[0] - 2.0).abs() < 1e-12 && z[1..].iter().all(|x| x.abs() < 1e-12));
    let (mut a, mut k) = (1.0, 1.0);
    assert_eq!(unsafe { lc_section_tracefree_norm(s.0, &mut a) }, LcStatus::Ok);
    assert_eq!(unsafe { lc_section_kappa(s.0, &mut k) }, LcStatus::Ok);
    assert!(a < 1e-12 && k < 1e-12);
    assert_eq!(unsafe { lc_section_bandlimit(s.0) }, 8);
}

#[test]
fn boost_then_balance_recovers_round() {
    let s = round(24, 1.5);
    let a = [0.3, -0.2, 0.5];
    let mut boosted = ptr::null_mut();
    assert_eq!(unsafe { lc_section_boost(s.0, a.as_ptr(), &mut boosted) }, LcStatus::Ok);
    let boosted = Section(boosted);
    let mut z = [0.0; 4];
    unsafe { lc_section_z_vector(boosted.0, z.as_mut_ptr()) };
    let b = (1.0f64 + 0.09 + 0.04 + 0.25).sqrt();
    for (got, want) in z.iter().zip([1.5 * b, 1.5 * a[0], 1.5 * a[1], 1.5 * a[2]]) {
        assert!((got - want).abs() < 1e-9, "{z:?}");
    }
    let mut balanced = ptr::null_mut();
    let mut lambda = [0.0; 16];
    assert_eq!(unsafe { lc_section_balance(boosted.0, &mut balanced, lambda.as_mut_ptr()) }, LcStatus::Ok);
    let balanced = Section(balanced);
    unsafe { lc_section_z_vector(balanced.0, z.as_mut_ptr()) };
    assert!((z[0] - 1.5).abs() < 1e-9 && z[1..].iter().all(|x| x.abs() < 1e-9));
    assert!(lambda[0] >= 1.0);

    // applying the returned matrix to the boosted section reproduces the balanced one
    let mut again = ptr::null_mut();
    assert_eq!(unsafe { lc_section_apply_lorentz(boosted.0, lambda.as_ptr(), &mut again) }, LcStatus::Ok);
    let again = Section(again);
    unsafe { lc_section_z_vector(again.0, z.as_mut_ptr()) };
    assert!((z[0] - 1.5).abs() < 1e-9);
}

#[test]
fn json_roundtrip_and_report() {
    let zv = [1.25, 0.0, 0.75, 0.0];
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { lc_section_from_z(16, zv.as_ptr(), &mut s) }, LcStatus::Ok);
    let s = Section(s);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { lc_section_to_json(s.0, &mut text) }, LcStatus::Ok);
    let json = take_string(text);
    let c = CString::new(json.clone()).unwrap();
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { lc_section_from_json(c.as_ptr(), &mut back) }, LcStatus::Ok);
    let back = Section(back);
    let mut text = ptr::null_mut();
    unsafe { lc_section_to_json(back.0, &mut text) };
    assert_eq!(take_string(text), json);

    let mut report = ptr::null_mut();
    assert_eq!(unsafe { lc_section_report_json(back.0, &mut report) }, LcStatus::Ok);
    let report = take_string(report);
    assert!(report.contains("\"z_vector\"") && report.contains("\"kappa\""));
}

#[test]
fn errors_are_reported() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { lc_section_round(8, -1.0, &mut out) }, LcStatus::InvalidArgument);
    assert!(out.is_null());
    assert!(last_error().contains("radius"));

    assert_eq!(unsafe { lc_section_round(2, 1.0, &mut out) }, LcStatus::InvalidArgument);
    assert!(last_error().contains("bandlimit"));

    let bad = CString::new("{\"bandlimit\": 4,\n \"omega_coeffs\": [oops]}").unwrap();
    assert_eq!(unsafe { lc_section_from_json(bad.as_ptr(), &mut out) }, LcStatus::ParseError);
    assert!(last_error().contains("line 2"));

    let neg = CString::new("{\"bandlimit\": 4, \"omega_coeffs\": [[0, 0, -1.0]]}").unwrap();
    assert_eq!(unsafe { lc_section_from_json(neg.as_ptr(), &mut out) }, LcStatus::NumericalError);

    let past = [-1.0, 0.0, 0.0, 0.0];
    assert_eq!(unsafe { lc_section_from_z(8, past.as_ptr(), &mut out) }, LcStatus::InvalidArgument);

    let mut area = 0.0;
    assert_eq!(unsafe { lc_section_area(ptr::null(), &mut area) }, LcStatus::NullPointer);
    let s = round(8, 1.0);
    let not_lorentz = [2.0; 16];
    assert_eq!(
        unsafe { lc_section_apply_lorentz(s.0, not_lorentz.as_ptr(), &mut out) },
        LcStatus::InvalidArgument
    );
    unsafe {
        lc_section_free(ptr::null_mut());
        lc_string_free(ptr::null_mut());
    }
}

#[test]
fn flow_returns_csv_and_final_section() {
    let s = round(8, 1.0);
    let (mut csv, mut last) = (ptr::null_mut(), ptr::null_mut());
    assert_eq!(unsafe { lc_flow_run(s.0, 0.01, 0.125, false, &mut csv, &mut last) }, LcStatus::Ok);
    let last = Section(last);
    let csv = take_string(csv);
    assert!(csv.starts_with("t,area,"));
    let mut area = 0.0;
    unsafe { lc_section_area(last.0, &mut area) };
    assert!((area - 3.0 * PI).abs() < 1e-8, "{area}");
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(lc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
