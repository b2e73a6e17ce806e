//! C ABI over the simulator.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free` function. Every fallible call returns a
//! [`SoarStatus`]; on anything but `SOAR_STATUS_OK` a description is
//! available from [`soar_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use soar_sim::steering::ActiveObstacle;
use soar_sim::{
    depth_from_disparity, load_scenario, load_scenario_file, run_trial, serialize_scenario, steering_direction,
    Mode, Outcome, ScenarioError, ScenarioSpec, SteeringParams, StereoRig, TrialResult, Vec2,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoarStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Io = 5,
    Steering = 6,
    Perception = 7,
    OutOfRange = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoarMode {
    Soar = 0,
    NonSoar = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoarOutcome {
    GoalReached = 0,
    Timeout = 1,
    WrongDirection = 2,
    Stuck = 3,
    Collision = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoarVec2 {
    pub x: f64,
    pub y: f64,
}

/// Obstacle the steering law should react to.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoarActiveObstacle {
    pub id: u32,
    pub position: SoarVec2,
    /// Distance from the robot to the obstacle boundary, meters.
    pub surface_distance: f64,
    pub d0: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoarTrajectoryPoint {
    pub time: f64,
    pub position: SoarVec2,
    pub heading: f64,
    pub speed: f64,
}

/// Parsed, validated scenario.
pub struct SoarScenario(ScenarioSpec);

/// Outcome and trajectory of one trial.
pub struct SoarTrialResult(TrialResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: SoarStatus, msg: impl Into<String>) -> SoarStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning a panic into `SOAR_STATUS_PANIC`.
fn guard(f: impl FnOnce() -> SoarStatus) -> SoarStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_owned())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_owned());
            fail(SoarStatus::Panic, msg)
        }
    }
}

fn scenario_status(e: &ScenarioError) -> SoarStatus {
    match e {
        ScenarioError::Parse(_) => SoarStatus::Parse,
        ScenarioError::Validation { .. } => SoarStatus::Validation,
        ScenarioError::Io { .. } => SoarStatus::Io,
        ScenarioError::Serialize(_) => SoarStatus::Parse,
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, SoarStatus> {
    if s.is_null() {
        return Err(fail(SoarStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| fail(SoarStatus::InvalidUtf8, e.to_string()))
}

unsafe fn store_scenario(
    loaded: Result<ScenarioSpec, ScenarioError>,
    out: *mut *mut SoarScenario,
) -> SoarStatus {
    match loaded {
        Ok(spec) => {
            *out = Box::into_raw(Box::new(SoarScenario(spec)));
            SoarStatus::Ok
        }
        Err(e) => fail(scenario_status(&e), e.to_string()),
    }
}

/// Description of the last failure on this thread, or NULL. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn soar_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn soar_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a scenario document.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_scenario_from_str(text: *const c_char, out: *mut *mut SoarScenario) -> SoarStatus {
    guard(|| {
        if out.is_null() {
            return fail(SoarStatus::NullPointer, "null output handle");
        }
        match read_str(text) {
            Ok(text) => store_scenario(load_scenario(text), out),
            Err(status) => status,
        }
    })
}

/// Loads and validates a scenario file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_scenario_from_file(path: *const c_char, out: *mut *mut SoarScenario) -> SoarStatus {
    guard(|| {
        if out.is_null() {
            return fail(SoarStatus::NullPointer, "null output handle");
        }
        match read_str(path) {
            Ok(path) => store_scenario(load_scenario_file(Path::new(path)), out),
            Err(status) => status,
        }
    })
}

/// Serializes a scenario back to its document form. Free the string with
/// [`soar_string_free`].
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_scenario_to_string(scenario: *const SoarScenario, out: *mut *mut c_char) -> SoarStatus {
    guard(|| {
        if scenario.is_null() || out.is_null() {
            return fail(SoarStatus::NullPointer, "null argument");
        }
        match serialize_scenario(&(*scenario).0) {
            Ok(text) => match CString::new(text) {
                Ok(s) => {
                    *out = s.into_raw();
                    SoarStatus::Ok
                }
                Err(e) => fail(SoarStatus::Parse, e.to_string()),
            },
            Err(e) => fail(scenario_status(&e), e.to_string()),
        }
    })
}

/// Number of obstacles in the scenario; 0 for NULL.
///
/// # Safety
/// `scenario` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn soar_scenario_obstacle_count(scenario: *const SoarScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.0.obstacles.len())
}

/// # Safety
/// `scenario` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn soar_scenario_free(scenario: *mut SoarScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn soar_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Runs one trial.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_run_trial(
    scenario: *const SoarScenario,
    mode: SoarMode,
    seed: u64,
    out: *mut *mut SoarTrialResult,
) -> SoarStatus {
    guard(|| {
        if scenario.is_null() || out.is_null() {
            return fail(SoarStatus::NullPointer, "null argument");
        }
        let mode = match mode {
            SoarMode::Soar => Mode::Soar,
            SoarMode::NonSoar => Mode::NonSoar,
        };
        match run_trial(&(*scenario).0, mode, seed) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(SoarTrialResult(result)));
                SoarStatus::Ok
            }
            Err(e) => {
                let status = match &e {
                    soar_sim::sim::TrialError::Scenario(s) => scenario_status(s),
                    soar_sim::sim::TrialError::Steering { .. } => SoarStatus::Steering,
                };
                fail(status, e.to_string())
            }
        }
    })
}

/// # Safety
/// `result` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn soar_trial_result_free(result: *mut SoarTrialResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn soar_trial_outcome(result: *const SoarTrialResult) -> SoarOutcome {
    match (*result).0.outcome {
        Outcome::GoalReached => SoarOutcome::GoalReached,
        Outcome::Timeout => SoarOutcome::Timeout,
        Outcome::WrongDirection => SoarOutcome::WrongDirection,
        Outcome::Stuck => SoarOutcome::Stuck,
        Outcome::Collision => SoarOutcome::Collision,
    }
}

/// Seconds until the trial ended.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn soar_trial_travel_time(result: *const SoarTrialResult) -> f64 {
    (*result).0.travel_time
}

/// Meters driven.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn soar_trial_path_length(result: *const SoarTrialResult) -> f64 {
    (*result).0.path_length
}

/// Number of trajectory samples, including the start pose.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn soar_trial_len(result: *const SoarTrialResult) -> usize {
    (*result).0.trajectory.len()
}

/// Copies trajectory sample `index` into `out`.
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_trial_point(
    result: *const SoarTrialResult,
    index: usize,
    out: *mut SoarTrajectoryPoint,
) -> SoarStatus {
    guard(|| {
        if result.is_null() || out.is_null() {
            return fail(SoarStatus::NullPointer, "null argument");
        }
        let trajectory = &(*result).0.trajectory;
        let Some(p) = trajectory.get(index) else {
            return fail(
                SoarStatus::OutOfRange,
                format!("index {index} out of range for {} samples", trajectory.len()),
            );
        };
        *out = SoarTrajectoryPoint {
            time: p.time,
            position: SoarVec2 {
                x: p.position.x,
                y: p.position.y,
            },
            heading: p.heading,
            speed: p.speed,
        };
        SoarStatus::Ok
    })
}

/// Commanded unit direction for a robot at `robot` heading for `goal`.
/// `active` may be NULL when no obstacle is within its clearance. `b` is the
/// maximum repulsion gain (> 1).
///
/// # Safety
/// `active` must be NULL or readable; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_steering_direction(
    robot: SoarVec2,
    goal: SoarVec2,
    active: *const SoarActiveObstacle,
    b: f64,
    out: *mut SoarVec2,
) -> SoarStatus {
    guard(|| {
        if out.is_null() {
            return fail(SoarStatus::NullPointer, "null output");
        }
        let params = SteeringParams {
            b,
            ..SteeringParams::default()
        };
        if let Err((field, rule)) = params.validate() {
            return fail(SoarStatus::Steering, format!("{field}: {rule}"));
        }
        let active = active.as_ref().map(|a| ActiveObstacle {
            id: a.id,
            position: Vec2::new(a.position.x, a.position.y),
            surface_distance: a.surface_distance,
            d0: a.d0,
        });
        match steering_direction(Vec2::new(robot.x, robot.y), Vec2::new(goal.x, goal.y), active, &params) {
            Ok(d) => {
                *out = SoarVec2 {
                    x: d.v_hat.x,
                    y: d.v_hat.y,
                };
                SoarStatus::Ok
            }
            Err(e) => fail(SoarStatus::Steering, e.to_string()),
        }
    })
}

/// Depth in meters of a point seen with `disparity` pixels by an ideal
/// rectified rig with focal length `focal_px` and baseline `baseline_m`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_depth_from_disparity(
    disparity: f64,
    focal_px: f64,
    baseline_m: f64,
    out: *mut f64,
) -> SoarStatus {
    guard(|| {
        if out.is_null() {
            return fail(SoarStatus::NullPointer, "null output");
        }
        if !(focal_px > 0.0 && baseline_m > 0.0) {
            return fail(SoarStatus::Perception, "focal length and baseline must be positive");
        }
        let rig = StereoRig {
            focal_px,
            baseline_m,
            ..StereoRig::default()
        };
        match depth_from_disparity(disparity, &rig) {
            Ok(z) => {
                *out = z;
                SoarStatus::Ok
            }
            Err(e) => fail(SoarStatus::Perception, e.to_string()),
        }
    })
}
