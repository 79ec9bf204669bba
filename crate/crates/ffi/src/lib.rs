//! C interface to `maxwell-uq`.
//!
//! Every function returns an [`MxuqStatus`]. On failure a message describing the error
//! is stored per thread and can be read with [`mxuq_last_error_message`]. Objects are
//! passed as opaque handles that must be released with the matching `_free` function.
//!
//! Complex vector fields are written as six doubles per point:
//! `re(Ex), im(Ex), re(Ey), im(Ey), re(Ez), im(Ez)`. Points are three doubles each.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use maxwell_uq::bem::{OperatorSet, PotentialEvaluator};
use maxwell_uq::experiment::{setup, ExperimentConfig};
use maxwell_uq::geometry::Vec3;
use maxwell_uq::linalg::CorrelationKernel;
use maxwell_uq::mie::{mie_random_radius_mean, mie_scattered_field};
use maxwell_uq::space::CVec3;
use maxwell_uq::uq::{
    corrected_mean_field, solve_correction, solve_reference, CorrelationPipelineState, ExteriorSolution, IncidentWave, ReferenceSolution,
};
use maxwell_uq::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MxuqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    PointInside = 3,
    SingularMatrix = 4,
    Cache = 5,
    Io = 6,
    /// The call needs a step that has not been run yet, e.g. a correction before the reference solve.
    InvalidState = 7,
    Internal = 8,
    Panic = 9,
}

/// Correlation kernel families.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MxuqKernel {
    /// `Cor(x, y) = 0`; parameters unused.
    Zero = 0,
    /// `Cor(x, y) = a`.
    Constant = 1,
    /// `Cor(x, y) = a exp(-|x - y|² / (2 b²))`.
    SquaredExponential = 2,
}

/// Incident plane wave.
pub struct MxuqWave(IncidentWave);

/// Sphere discretization with factored operators and the fields computed on it.
pub struct MxuqSolver {
    ops: OperatorSet,
    reference: Option<ReferenceSolution>,
    correction: Option<ExteriorSolution>,
    rank: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> MxuqStatus {
    match e {
        Error::PointInside { .. } => MxuqStatus::PointInside,
        Error::SingularMatrix { .. } => MxuqStatus::SingularMatrix,
        Error::Cache(_) => MxuqStatus::Cache,
        Error::Io(_) => MxuqStatus::Io,
        Error::Config(_) | Error::Dimension(_) | Error::Json(_) => MxuqStatus::InvalidArgument,
        _ => MxuqStatus::Internal,
    }
}

struct Failure(MxuqStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail<T>(status: MxuqStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MxuqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            MxuqStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MxuqStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().map_or_else(|| fail(MxuqStatus::NullPointer, format!("{name} is null")), Ok)
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().map_or_else(|| fail(MxuqStatus::NullPointer, format!("{name} is null")), Ok)
}

unsafe fn points_from(points: *const f64, n: usize) -> Result<Vec<Vec3>, Failure> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let raw = std::slice::from_raw_parts(deref(points, "points")?, 3 * n);
    Ok(raw.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect())
}

unsafe fn write_field(out: *mut f64, values: &[CVec3]) -> Result<(), Failure> {
    if values.is_empty() {
        return Ok(());
    }
    let dst = std::slice::from_raw_parts_mut(deref_mut(out, "out")?, 6 * values.len());
    for (chunk, v) in dst.chunks_exact_mut(6).zip(values) {
        for k in 0..3 {
            chunk[2 * k] = v[k].re;
            chunk[2 * k + 1] = v[k].im;
        }
    }
    Ok(())
}

/// Length in bytes of the last error message on this thread, excluding the terminator.
#[no_mangle]
pub extern "C" fn mxuq_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message on this thread into `buf` as a NUL-terminated string,
/// truncated to `len - 1` bytes. Returns the full message length.
#[no_mangle]
pub unsafe extern "C" fn mxuq_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates a plane wave `p exp(iκ d·x)`; `direction` and `polarization` hold three doubles.
#[no_mangle]
pub unsafe extern "C" fn mxuq_wave_new(direction: *const f64, polarization: *const f64, kappa: f64, out: *mut *mut MxuqWave) -> MxuqStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let d = std::slice::from_raw_parts(deref(direction, "direction")?, 3);
        let p = std::slice::from_raw_parts(deref(polarization, "polarization")?, 3);
        let wave = IncidentWave::new(Vec3::new(d[0], d[1], d[2]), Vec3::new(p[0], p[1], p[2]), kappa)?;
        *out = Box::into_raw(Box::new(MxuqWave(wave)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mxuq_wave_free(wave: *mut MxuqWave) {
    if !wave.is_null() {
        drop(Box::from_raw(wave));
    }
}

/// Mie series scattered field of a sphere of `radius` at `n` points.
#[no_mangle]
pub unsafe extern "C" fn mxuq_mie_scattered_field(
    wave: *const MxuqWave,
    radius: f64,
    points: *const f64,
    n: usize,
    out: *mut f64,
) -> MxuqStatus {
    guard(|| {
        let wave = deref(wave, "wave")?;
        let pts = points_from(points, n)?;
        write_field(out, &mie_scattered_field(radius, wave.0, &pts)?)
    })
}

/// Mean Mie field over radii `1 + ε t`, `t` uniform on `[-1, 1]`, with `n_quad` Gauss points.
#[no_mangle]
pub unsafe extern "C" fn mxuq_mie_random_radius_mean(
    wave: *const MxuqWave,
    eps: f64,
    n_quad: usize,
    points: *const f64,
    n: usize,
    out: *mut f64,
) -> MxuqStatus {
    guard(|| {
        let wave = deref(wave, "wave")?;
        let pts = points_from(points, n)?;
        write_field(out, &mie_random_radius_mean(eps, wave.0, &pts, n_quad)?)
    })
}

/// Discretizes the unit sphere at refinement `level` and assembles the operators at
/// wavenumber `kappa`. `cache_dir` may be null; otherwise operators are cached there.
#[no_mangle]
pub unsafe extern "C" fn mxuq_solver_new(level: u32, kappa: f64, cache_dir: *const c_char, out: *mut *mut MxuqSolver) -> MxuqStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let cache = if cache_dir.is_null() {
            None
        } else {
            match CStr::from_ptr(cache_dir).to_str() {
                Ok(s) => Some(PathBuf::from(s)),
                Err(_) => return fail(MxuqStatus::InvalidArgument, "cache_dir is not valid UTF-8"),
            }
        };
        let ops = setup(&ExperimentConfig::default(), kappa, level, cache.as_deref())?;
        *out = Box::into_raw(Box::new(MxuqSolver { ops, reference: None, correction: None, rank: 0 }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mxuq_solver_free(solver: *mut MxuqSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Number of unknowns of the discretization.
#[no_mangle]
pub unsafe extern "C" fn mxuq_solver_dofs(solver: *const MxuqSolver, out: *mut usize) -> MxuqStatus {
    guard(|| {
        *deref_mut(out, "out")? = deref(solver, "solver")?.ops.dim();
        Ok(())
    })
}

/// Solves the scattering problem on the unperturbed sphere. Discards any previous correction.
#[no_mangle]
pub unsafe extern "C" fn mxuq_solver_solve_reference(solver: *mut MxuqSolver, wave: *const MxuqWave) -> MxuqStatus {
    guard(|| {
        let solver = deref_mut(solver, "solver")?;
        let wave = deref(wave, "wave")?;
        solver.reference = Some(solve_reference(&solver.ops, &wave.0)?);
        solver.correction = None;
        solver.rank = 0;
        Ok(())
    })
}

/// Builds the second-order mean correction for the given kernel. `a` and `b` are the
/// kernel parameters described in [`MxuqKernel`]; `rank` (nullable) receives the
/// low-rank factor rank.
#[no_mangle]
pub unsafe extern "C" fn mxuq_solver_build_correction(
    solver: *mut MxuqSolver,
    kernel: MxuqKernel,
    a: f64,
    b: f64,
    tolerance: f64,
    rank: *mut usize,
) -> MxuqStatus {
    guard(|| {
        let solver = deref_mut(solver, "solver")?;
        let Some(reference) = solver.reference.clone() else {
            return fail(MxuqStatus::InvalidState, "reference solution has not been computed");
        };
        let kernel = match kernel {
            MxuqKernel::Zero => CorrelationKernel::Zero,
            MxuqKernel::Constant => CorrelationKernel::Constant(a),
            MxuqKernel::SquaredExponential => CorrelationKernel::SquaredExponential { variance: a, length: b },
        };
        let ops = &solver.ops;
        let mut state = CorrelationPipelineState::new(ops, reference)?;
        state.build_b_factor(ops, &kernel, tolerance)?;
        state.build_a_factor(ops)?;
        let datum = state.mean_second_datum(ops)?;
        solver.correction = Some(solve_correction(ops, &datum));
        solver.rank = state.rank();
        if !rank.is_null() {
            *rank = solver.rank;
        }
        Ok(())
    })
}

/// Reference scattered field at `n` points outside the sphere.
#[no_mangle]
pub unsafe extern "C" fn mxuq_solver_reference_field(solver: *const MxuqSolver, points: *const f64, n: usize, out: *mut f64) -> MxuqStatus {
    guard(|| {
        let solver = deref(solver, "solver")?;
        let Some(reference) = &solver.reference else {
            return fail(MxuqStatus::InvalidState, "reference solution has not been computed");
        };
        let pts = points_from(points, n)?;
        let pe = PotentialEvaluator::new(solver.ops.disc.clone(), solver.ops.kappa);
        write_field(out, &pe.evaluate(Some(&reference.neumann.coefficients), None, &pts).values)
    })
}

/// Corrected mean field `E_0 + ε²/2 w` at `n` points.
#[no_mangle]
pub unsafe extern "C" fn mxuq_solver_mean_field(
    solver: *const MxuqSolver,
    eps: f64,
    points: *const f64,
    n: usize,
    out: *mut f64,
) -> MxuqStatus {
    guard(|| {
        let solver = deref(solver, "solver")?;
        let (Some(reference), Some(correction)) = (&solver.reference, &solver.correction) else {
            return fail(MxuqStatus::InvalidState, "correction has not been built");
        };
        let pts = points_from(points, n)?;
        let pe = PotentialEvaluator::new(solver.ops.disc.clone(), solver.ops.kappa);
        let e0 = pe.evaluate(Some(&reference.neumann.coefficients), None, &pts).values;
        let w = correction.evaluate(&solver.ops, &pts);
        write_field(out, &corrected_mean_field(&e0, &w, eps))
    })
}
