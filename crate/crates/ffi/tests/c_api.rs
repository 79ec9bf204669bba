use std::ffi::{c_char, CString};
use std::ptr;

use maxwell_uq_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let n = unsafe { mxuq_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(511)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn wave(kappa: f64) -> *mut MxuqWave {
    let mut w = ptr::null_mut();
    let st = unsafe { mxuq_wave_new([0.0, 0.0, 1.0].as_ptr(), [1.0, 0.0, 0.0].as_ptr(), kappa, &mut w) };
    assert_eq!(st, MxuqStatus::Ok);
    w
}

#[test]
fn invalid_wave_sets_message() {
    let mut w = ptr::null_mut();
    let st = unsafe { mxuq_wave_new([0.0, 0.0, 1.0].as_ptr(), [0.0, 0.0, 1.0].as_ptr(), 2.0, &mut w) };
    assert_eq!(st, MxuqStatus::InvalidArgument);
    assert!(w.is_null());
    assert!(mxuq_last_error_length() > 0);
    assert!(last_error().contains("orthogonal"), "{}", last_error());
}

#[test]
fn null_arguments_are_rejected() {
    let st = unsafe { mxuq_wave_new(ptr::null(), [1.0, 0.0, 0.0].as_ptr(), 2.0, ptr::null_mut()) };
    assert_eq!(st, MxuqStatus::NullPointer);
    let st = unsafe { mxuq_solver_dofs(ptr::null(), ptr::null_mut()) };
    assert_eq!(st, MxuqStatus::NullPointer);
    unsafe {
        mxuq_wave_free(ptr::null_mut());
        mxuq_solver_free(ptr::null_mut());
    }
}

#[test]
fn mie_field_and_inside_point() {
    let w = wave(2.0);
    let pts = [0.0, 0.0, 2.0, 2.0, 0.0, 0.0];
    let mut out = [0.0; 12];
    assert_eq!(unsafe { mxuq_mie_scattered_field(w, 1.0, pts.as_ptr(), 2, out.as_mut_ptr()) }, MxuqStatus::Ok);
    assert!(out.iter().all(|v| v.is_finite()));
    assert!(out.iter().any(|v| v.abs() > 1e-3));

    let mut mean = [0.0; 12];
    assert_eq!(unsafe { mxuq_mie_random_radius_mean(w, 0.0, 16, pts.as_ptr(), 2, mean.as_mut_ptr()) }, MxuqStatus::Ok);
    for (a, b) in out.iter().zip(&mean) {
        assert!((a - b).abs() < 1e-12);
    }

    let inside = [0.0, 0.0, 0.5];
    let st = unsafe { mxuq_mie_scattered_field(w, 1.0, inside.as_ptr(), 1, out.as_mut_ptr()) };
    assert_eq!(st, MxuqStatus::PointInside);
    unsafe { mxuq_wave_free(w) };
}

#[test]
fn solver_pipeline_at_level_one() {
    let w = wave(2.0);
    let dir = tempfile::tempdir().unwrap();
    let cache = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { mxuq_solver_new(1, 2.0, cache.as_ptr(), &mut s) }, MxuqStatus::Ok, "{}", last_error());
    let mut dofs = 0;
    assert_eq!(unsafe { mxuq_solver_dofs(s, &mut dofs) }, MxuqStatus::Ok);
    assert_eq!(dofs, 48);

    let pts = [0.0, 0.0, 2.0];
    let mut out = [0.0; 6];
    let st = unsafe { mxuq_solver_build_correction(s, MxuqKernel::Constant, 1.0 / 3.0, 0.0, 1e-6, ptr::null_mut()) };
    assert_eq!(st, MxuqStatus::InvalidState);
    assert_eq!(unsafe { mxuq_solver_mean_field(s, 0.1, pts.as_ptr(), 1, out.as_mut_ptr()) }, MxuqStatus::InvalidState);

    assert_eq!(unsafe { mxuq_solver_solve_reference(s, w) }, MxuqStatus::Ok, "{}", last_error());
    let mut rank = 0;
    let st = unsafe { mxuq_solver_build_correction(s, MxuqKernel::Constant, 1.0 / 3.0, 0.0, 1e-6, &mut rank) };
    assert_eq!(st, MxuqStatus::Ok, "{}", last_error());
    assert_eq!(rank, 1);

    let mut e0 = [0.0; 6];
    assert_eq!(unsafe { mxuq_solver_reference_field(s, pts.as_ptr(), 1, e0.as_mut_ptr()) }, MxuqStatus::Ok);
    let mut mie = [0.0; 6];
    assert_eq!(unsafe { mxuq_mie_scattered_field(w, 1.0, pts.as_ptr(), 1, mie.as_mut_ptr()) }, MxuqStatus::Ok);
    let err = e0.iter().zip(&mie).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 0.2, "level-1 error {err}");

    assert_eq!(unsafe { mxuq_solver_mean_field(s, 0.0, pts.as_ptr(), 1, out.as_mut_ptr()) }, MxuqStatus::Ok);
    assert_eq!(out, e0);
    unsafe {
        mxuq_solver_free(s);
        mxuq_wave_free(w);
    }
}

#[test]
fn header_declares_entry_points() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/maxwell_uq.h")).unwrap();
    for name in ["mxuq_wave_new", "mxuq_solver_new", "mxuq_solver_mean_field", "mxuq_last_error_message", "MXUQ_STATUS_POINT_INSIDE"] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
