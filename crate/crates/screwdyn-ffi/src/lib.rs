//! C ABI for the screwdyn mechanics engine.
//!
//! Conventions: every fallible call returns a [`ScrewdynStatus`]; on
//! failure a thread-local message is retrievable with
//! [`screwdyn_last_error_message`]. Scenario and trajectory objects are
//! opaque handles owned by the library; free them with the matching
//! `*_free` call. Matrices cross the boundary row-major; quaternions are
//! scalar-first.

use screwdyn::constitutive::{
    constitutive_apply, constitutive_apply_2d, constitutive_invert, constitutive_invert_2d,
    moduli, BasisTag, Mat2, RheologyCoeffs,
};
use screwdyn::rotation::{EulerAngles, FedorovParam, Quaternion, UnitQuaternion};
use screwdyn::sim::{integrate, Scenario, ScenarioFile, SimError, SimOutput};
use screwdyn::spatial::{Mat3, RotationMatrix, Vec3};
use std::cell::RefCell;
use std::ffi::{c_char, CStr};

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

/// Outcome of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScrewdynStatus {
    Ok = 0,
    /// Bad arguments, unparsable config, or a violated precondition.
    InvalidArgument = 1,
    /// Numerical failure (divergence, singular matrix, chart singularity).
    Numerical = 2,
}

/// Rotation representations accepted by the conversion call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScrewdynRotationRep {
    /// Three angles of the x-y-z factorization.
    Euler = 0,
    /// Cayley vector-parameter.
    Fedorov = 1,
    /// Unit quaternion, scalar first.
    Quaternion = 2,
    /// 3×3 rotation matrix, row-major.
    Matrix = 3,
}

/// One body sample of a trajectory record.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ScrewdynBodySample {
    pub time: f64,
    /// Scalar-first unit quaternion of the world pose.
    pub quat: [f64; 4],
    pub displacement: [f64; 3],
    /// Body-frame linear velocity.
    pub linear: [f64; 3],
    /// Body-frame angular velocity.
    pub angular: [f64; 3],
    pub e_kin: f64,
    pub e_pot: f64,
}

/// Run summary of a finished trajectory.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ScrewdynSummary {
    pub records: usize,
    pub final_time: f64,
    pub energy_drift: f64,
    pub max_constraint_residual: f64,
}

/// Opaque parsed scenario.
pub struct ScrewdynScenario {
    inner: Scenario,
}

/// Opaque finished trajectory.
pub struct ScrewdynTrajectory {
    output: SimOutput,
}

/// Copies the last error message of this thread into `buf` (truncated,
/// always NUL-terminated when `cap > 0`) and returns the full message
/// length in bytes.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null with `cap = 0`.
#[no_mangle]
pub unsafe extern "C" fn screwdyn_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

fn rep_len(rep: ScrewdynRotationRep) -> usize {
    match rep {
        ScrewdynRotationRep::Euler | ScrewdynRotationRep::Fedorov => 3,
        ScrewdynRotationRep::Quaternion => 4,
        ScrewdynRotationRep::Matrix => 9,
    }
}

/// Number of components of a representation (3, 3, 4 or 9).
#[no_mangle]
pub extern "C" fn screwdyn_rotation_rep_len(rep: ScrewdynRotationRep) -> usize {
    rep_len(rep)
}

/// Converts between rotation representations. `input` holds
/// `screwdyn_rotation_rep_len(from)` values, `output` receives
/// `screwdyn_rotation_rep_len(to)` values.
///
/// # Safety
/// `input` and `output` must point to arrays of the documented lengths.
#[no_mangle]
pub unsafe extern "C" fn screwdyn_convert_rotation(
    from: ScrewdynRotationRep,
    to: ScrewdynRotationRep,
    input: *const f64,
    output: *mut f64,
) -> ScrewdynStatus {
    if input.is_null() || output.is_null() {
        set_error("null pointer argument");
        return ScrewdynStatus::InvalidArgument;
    }
    let vals = std::slice::from_raw_parts(input, rep_len(from));
    let rotation = match from {
        ScrewdynRotationRep::Euler => EulerAngles::new(vals[0], vals[1], vals[2]).to_rotation(),
        ScrewdynRotationRep::Fedorov => {
            FedorovParam(Vec3::new(vals[0], vals[1], vals[2])).to_rotation()
        }
        ScrewdynRotationRep::Quaternion => {
            let q = Quaternion::new(vals[0], Vec3::new(vals[1], vals[2], vals[3]));
            if (q.norm() - 1.0).abs() > 1e-6 {
                set_error(format!("quaternion norm {} is not unit", q.norm()));
                return ScrewdynStatus::InvalidArgument;
            }
            match UnitQuaternion::normalize(q) {
                Ok(u) => u.to_rotation(),
                Err(e) => {
                    set_error(e.to_string());
                    return ScrewdynStatus::InvalidArgument;
                }
            }
        }
        ScrewdynRotationRep::Matrix => match RotationMatrix::new(Mat3::from_row_slice(vals)) {
            Ok(c) => c,
            Err(e) => {
                set_error(e.to_string());
                return ScrewdynStatus::InvalidArgument;
            }
        },
    };
    let out = std::slice::from_raw_parts_mut(output, rep_len(to));
    match to {
        ScrewdynRotationRep::Euler => match EulerAngles::from_rotation(&rotation) {
            Ok(e) => {
                out[0] = e.phi;
                out[1] = e.theta;
                out[2] = e.psi;
            }
            Err(e) => {
                set_error(e.to_string());
                return ScrewdynStatus::Numerical;
            }
        },
        ScrewdynRotationRep::Fedorov => match FedorovParam::from_rotation(&rotation) {
            Ok(f) => {
                out[0] = f.0.x;
                out[1] = f.0.y;
                out[2] = f.0.z;
            }
            Err(e) => {
                set_error(e.to_string());
                return ScrewdynStatus::Numerical;
            }
        },
        ScrewdynRotationRep::Quaternion => {
            let q = UnitQuaternion::from_rotation(&rotation);
            out[0] = q.quaternion().scalar;
            out[1] = q.quaternion().vector.x;
            out[2] = q.quaternion().vector.y;
            out[3] = q.quaternion().vector.z;
        }
        ScrewdynRotationRep::Matrix => {
            let m = rotation.matrix();
            for r in 0..3 {
                for c in 0..3 {
                    out[3 * r + c] = m[(r, c)];
                }
            }
        }
    }
    ScrewdynStatus::Ok
}

fn coeffs_from(coeffs: &[f64; 4], transpose_basis: bool) -> RheologyCoeffs {
    RheologyCoeffs::constant(
        coeffs[0],
        coeffs[1],
        coeffs[2],
        coeffs[3],
        if transpose_basis {
            BasisTag::Transpose
        } else {
            BasisTag::SymAnt
        },
    )
}

/// Stress from strain: `matrix_in`/`matrix_out` are `dim × dim`
/// row-major with `dim` 2 or 3.
///
/// # Safety
/// Pointers must reference arrays of `dim * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn screwdyn_constitutive_apply(
    coeffs: *const f64,
    dim: u32,
    transpose_basis: bool,
    matrix_in: *const f64,
    matrix_out: *mut f64,
) -> ScrewdynStatus {
    constitutive_op(coeffs, dim, matrix_in, matrix_out, |r, input, out| {
        match input.len() {
            9 => {
                let t = constitutive_apply(r, &Mat3::from_row_slice(input));
                write_rows3(&t, out);
                Ok(())
            }
            _ => {
                let t = constitutive_apply_2d(r, &Mat2::from_row_slice(input));
                write_rows2(&t, out);
                Ok(())
            }
        }
    }, transpose_basis)
}

/// Strain from stress for correct continua; fails with
/// `SCREWDYN_STATUS_NUMERICAL` when `(r1 trI + r2) r2 r3 = 0`.
///
/// # Safety
/// Pointers must reference arrays of `dim * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn screwdyn_constitutive_invert(
    coeffs: *const f64,
    dim: u32,
    transpose_basis: bool,
    matrix_in: *const f64,
    matrix_out: *mut f64,
) -> ScrewdynStatus {
    constitutive_op(coeffs, dim, matrix_in, matrix_out, |r, input, out| {
        match input.len() {
            9 => constitutive_invert(r, &Mat3::from_row_slice(input))
                .map(|u| write_rows3(&u, out))
                .map_err(|e| e.to_string()),
            _ => constitutive_invert_2d(r, &Mat2::from_row_slice(input))
                .map(|u| write_rows2(&u, out))
                .map_err(|e| e.to_string()),
        }
    }, transpose_basis)
}

unsafe fn constitutive_op(
    coeffs: *const f64,
    dim: u32,
    matrix_in: *const f64,
    matrix_out: *mut f64,
    op: impl Fn(&RheologyCoeffs, &[f64], &mut [f64]) -> Result<(), String>,
    transpose_basis: bool,
) -> ScrewdynStatus {
    if coeffs.is_null() || matrix_in.is_null() || matrix_out.is_null() {
        set_error("null pointer argument");
        return ScrewdynStatus::InvalidArgument;
    }
    if dim != 2 && dim != 3 {
        set_error(format!("dim must be 2 or 3, got {dim}"));
        return ScrewdynStatus::InvalidArgument;
    }
    let n = (dim * dim) as usize;
    let c: [f64; 4] = std::slice::from_raw_parts(coeffs, 4).try_into().unwrap();
    let input = std::slice::from_raw_parts(matrix_in, n);
    let out = std::slice::from_raw_parts_mut(matrix_out, n);
    match op(&coeffs_from(&c, transpose_basis), input, out) {
        Ok(()) => ScrewdynStatus::Ok,
        Err(e) => {
            set_error(e);
            ScrewdynStatus::Numerical
        }
    }
}

fn write_rows3(m: &Mat3, out: &mut [f64]) {
    for r in 0..3 {
        for c in 0..3 {
            out[3 * r + c] = m[(r, c)];
        }
    }
}

fn write_rows2(m: &Mat2, out: &mut [f64]) {
    for r in 0..2 {
        for c in 0..2 {
            out[2 * r + c] = m[(r, c)];
        }
    }
}

/// Young modulus, shear modulus and Poisson ratio into `out[3]`.
///
/// # Safety
/// `coeffs` points to 4 doubles, `out` to 3.
#[no_mangle]
pub unsafe extern "C" fn screwdyn_moduli(
    coeffs: *const f64,
    dim: u32,
    transpose_basis: bool,
    out: *mut f64,
) -> ScrewdynStatus {
    if coeffs.is_null() || out.is_null() {
        set_error("null pointer argument");
        return ScrewdynStatus::InvalidArgument;
    }
    if dim != 2 && dim != 3 {
        set_error(format!("dim must be 2 or 3, got {dim}"));
        return ScrewdynStatus::InvalidArgument;
    }
    let c: [f64; 4] = std::slice::from_raw_parts(coeffs, 4).try_into().unwrap();
    match moduli(&coeffs_from(&c, transpose_basis), dim as usize) {
        Ok(m) => {
            let slice = std::slice::from_raw_parts_mut(out, 3);
            slice[0] = m.young;
            slice[1] = m.shear;
            slice[2] = m.poisson;
            ScrewdynStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            ScrewdynStatus::Numerical
        }
    }
}

/// Parses a single-scenario JSON config into an opaque handle.
///
/// # Safety
/// `json` must be a NUL-terminated UTF-8 string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn screwdyn_scenario_parse(
    json: *const c_char,
    out: *mut *mut ScrewdynScenario,
) -> ScrewdynStatus {
    if json.is_null() || out.is_null() {
        set_error("null pointer argument");
        return ScrewdynStatus::InvalidArgument;
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("config is not valid UTF-8");
            return ScrewdynStatus::InvalidArgument;
        }
    };
    match ScenarioFile::parse(text) {
        Ok(ScenarioFile::Single(inner)) => {
            *out = Box::into_raw(Box::new(ScrewdynScenario { inner }));
            ScrewdynStatus::Ok
        }
        Ok(ScenarioFile::List(_)) => {
            set_error("scenario lists are not supported over the C ABI; pass one scenario");
            ScrewdynStatus::InvalidArgument
        }
        Err(e) => {
            set_error(e.to_string());
            ScrewdynStatus::InvalidArgument
        }
    }
}

/// Frees a scenario handle (null is ignored).
///
/// # Safety
/// `scenario` must come from [`screwdyn_scenario_parse`] and not be freed
/// twice.
#[no_mangle]
pub unsafe extern "C" fn screwdyn_scenario_free(scenario: *mut ScrewdynScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Integrates a scenario to completion.
///
/// # Safety
/// `scenario` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn screwdyn_scenario_run(
    scenario: *const ScrewdynScenario,
    out: *mut *mut ScrewdynTrajectory,
) -> ScrewdynStatus {
    if scenario.is_null() || out.is_null() {
        set_error("null pointer argument");
        return ScrewdynStatus::InvalidArgument;
    }
    match integrate(&(*scenario).inner) {
        Ok(output) => {
            *out = Box::into_raw(Box::new(ScrewdynTrajectory { output }));
            ScrewdynStatus::Ok
        }
        Err(e @ SimError::Config(_)) => {
            set_error(e.to_string());
            ScrewdynStatus::InvalidArgument
        }
        Err(e) => {
            set_error(e.to_string());
            ScrewdynStatus::Numerical
        }
    }
}

/// Frees a trajectory handle (null is ignored).
///
/// # Safety
/// `trajectory` must come from [`screwdyn_scenario_run`] and not be freed
/// twice.
#[no_mangle]
pub unsafe extern "C" fn screwdyn_trajectory_free(trajectory: *mut ScrewdynTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// Number of emitted records.
///
/// # Safety
/// `trajectory` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn screwdyn_trajectory_records(
    trajectory: *const ScrewdynTrajectory,
) -> usize {
    if trajectory.is_null() {
        return 0;
    }
    (*trajectory).output.records.len()
}

/// Number of bodies per record.
///
/// # Safety
/// `trajectory` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn screwdyn_trajectory_bodies(
    trajectory: *const ScrewdynTrajectory,
) -> usize {
    if trajectory.is_null() {
        return 0;
    }
    (*trajectory)
        .output
        .records
        .first()
        .map(|r| r.bodies.len())
        .unwrap_or(0)
}

/// Copies one body sample of one record.
///
/// # Safety
/// `trajectory` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn screwdyn_trajectory_sample(
    trajectory: *const ScrewdynTrajectory,
    record: usize,
    body: usize,
    out: *mut ScrewdynBodySample,
) -> ScrewdynStatus {
    if trajectory.is_null() || out.is_null() {
        set_error("null pointer argument");
        return ScrewdynStatus::InvalidArgument;
    }
    let records = &(*trajectory).output.records;
    let Some(rec) = records.get(record) else {
        set_error(format!("record index {record} out of range"));
        return ScrewdynStatus::InvalidArgument;
    };
    let Some(b) = rec.bodies.get(body) else {
        set_error(format!("body index {body} out of range"));
        return ScrewdynStatus::InvalidArgument;
    };
    *out = ScrewdynBodySample {
        time: rec.time,
        quat: b.quat,
        displacement: [b.displacement.x, b.displacement.y, b.displacement.z],
        linear: [b.linear.x, b.linear.y, b.linear.z],
        angular: [b.angular.x, b.angular.y, b.angular.z],
        e_kin: b.e_kin,
        e_pot: b.e_pot,
    };
    ScrewdynStatus::Ok
}

/// Copies the body label (truncated, NUL-terminated when `cap > 0`) and
/// returns its full length.
///
/// # Safety
/// `trajectory` must be a live handle; `buf` must point to `cap` writable
/// bytes, or be null with `cap = 0`.
#[no_mangle]
pub unsafe extern "C" fn screwdyn_trajectory_body_label(
    trajectory: *const ScrewdynTrajectory,
    body: usize,
    buf: *mut c_char,
    cap: usize,
) -> usize {
    if trajectory.is_null() {
        return 0;
    }
    let records = &(*trajectory).output.records;
    let Some(label) = records
        .first()
        .and_then(|r| r.bodies.get(body))
        .map(|b| b.label.as_bytes())
    else {
        return 0;
    };
    if !buf.is_null() && cap > 0 {
        let n = label.len().min(cap - 1);
        std::ptr::copy_nonoverlapping(label.as_ptr(), buf.cast(), n);
        *buf.add(n) = 0;
    }
    label.len()
}

/// Copies the run summary.
///
/// # Safety
/// `trajectory` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn screwdyn_trajectory_summary(
    trajectory: *const ScrewdynTrajectory,
    out: *mut ScrewdynSummary,
) -> ScrewdynStatus {
    if trajectory.is_null() || out.is_null() {
        set_error("null pointer argument");
        return ScrewdynStatus::InvalidArgument;
    }
    let s = (*trajectory).output.summary;
    *out = ScrewdynSummary {
        records: s.records,
        final_time: s.final_time,
        energy_drift: s.energy_drift,
        max_constraint_residual: s.max_constraint_residual,
    };
    ScrewdynStatus::Ok
}

/// Renders the trajectory as CSV into `buf` (truncated, NUL-terminated
/// when `cap > 0`) and returns the full length in bytes; call with
/// `cap = 0` to size the buffer.
///
/// # Safety
/// `trajectory` must be a live handle; `buf` must point to `cap` writable
/// bytes, or be null with `cap = 0`.
#[no_mangle]
pub unsafe extern "C" fn screwdyn_trajectory_csv(
    trajectory: *const ScrewdynTrajectory,
    buf: *mut c_char,
    cap: usize,
) -> usize {
    if trajectory.is_null() {
        return 0;
    }
    let csv = screwdyn::sim::output::to_csv(&(*trajectory).output);
    let bytes = csv.as_bytes();
    if !buf.is_null() && cap > 0 {
        let n = bytes.len().min(cap - 1);
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), n);
        *buf.add(n) = 0;
    }
    bytes.len()
}
