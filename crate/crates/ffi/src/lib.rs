//! C ABI over `flapkit`.
//!
//! Projects and simulations cross the boundary as opaque handles, each
//! released by its own `*_free` function. Every fallible call returns a
//! [`FlapkitStatus`]; on failure a message is available from
//! [`flapkit_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use flapkit::actuator::{calibrate_torque_constant, coil_resistance, joule_power, DriveSignal};
use flapkit::budget::{build_report, SimulationSummary, REPORT_SCHEMA_VERSION};
use flapkit::config::{ConfigError, Project};
use flapkit::dynamics::{frequency_sweep, simulate, SimRun};
use flapkit::spring::{effective_inertia_from_resonance, required_stiffness};
use flapkit::wing::design_flexure;
use flapkit::{DesignError, DynamicsError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlapkitStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    Infeasible = 4,
    NumericalError = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlapkitWaveform {
    Square = 0,
    Sine = 1,
}

/// Loaded project configuration.
pub struct FlapkitProject {
    inner: Project,
}

/// Result of a time-domain run.
pub struct FlapkitSimulation {
    run: SimRun,
    summary: SimulationSummary,
}

/// One integration step, SI units.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FlapkitSample {
    pub t: f64,
    pub stroke_angle: f64,
    pub stroke_rate: f64,
    pub pitch_angle: f64,
    pub pitch_rate: f64,
    pub lift: f64,
    pub drag: f64,
    pub tau_drive: f64,
    pub p_elec: f64,
    pub p_aero: f64,
}

/// Description of the last simulated cycle, SI units.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FlapkitSummary {
    pub torque_constant: f64,
    pub frequency: f64,
    pub stroke_amplitude: f64,
    pub pitch_max: f64,
    pub pitch_min: f64,
    pub pitch_at_stroke_extremes: f64,
    pub pitch_reversals: u32,
    pub settled: bool,
    pub mean_lift: f64,
    pub mean_electrical_power: f64,
    pub mean_joule_power: f64,
    pub mean_aero_power: f64,
    pub energy_relative_error: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FlapkitSweepPoint {
    pub frequency: f64,
    pub stroke_amplitude: f64,
    pub mean_lift: f64,
    pub mean_electrical_power: f64,
    pub mean_aero_power: f64,
    pub settled: bool,
    /// False when this point failed; the other fields are then NaN.
    pub ok: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(FlapkitStatus, String);

impl From<DesignError> for Failure {
    fn from(e: DesignError) -> Self {
        let status = match &e {
            DesignError::Infeasible(_) => FlapkitStatus::Infeasible,
            DesignError::Calibration(_) => FlapkitStatus::NumericalError,
            DesignError::Dynamics(d) => dynamics_status(d),
            _ => FlapkitStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<DynamicsError> for Failure {
    fn from(e: DynamicsError) -> Self {
        Failure(dynamics_status(&e), e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure(FlapkitStatus::ConfigError, e.to_string())
    }
}

fn dynamics_status(e: &DynamicsError) -> FlapkitStatus {
    match e {
        DynamicsError::Config(_) => FlapkitStatus::InvalidArgument,
        _ => FlapkitStatus::NumericalError,
    }
}

fn null(what: &str) -> Failure {
    Failure(FlapkitStatus::NullPointer, format!("`{what}` is null"))
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FlapkitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FlapkitStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FlapkitStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn project_ref<'a>(p: *const FlapkitProject) -> Result<&'a Project, Failure> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| null("project"))
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn flapkit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Load the built-in configuration of the device as built.
///
/// # Safety
/// `out_project` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn flapkit_project_load_device(
    out_project: *mut *mut FlapkitProject,
) -> FlapkitStatus {
    guard(|| {
        let slot = out(out_project, "out_project")?;
        *slot = Box::into_raw(Box::new(FlapkitProject {
            inner: Project::device(),
        }));
        Ok(())
    })
}

/// Parse a configuration from NUL-terminated UTF-8 JSON.
///
/// # Safety
/// `json` must be a valid C string; `out_project` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flapkit_project_from_json(
    json: *const c_char,
    out_project: *mut *mut FlapkitProject,
) -> FlapkitStatus {
    guard(|| {
        let slot = out(out_project, "out_project")?;
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| {
            Failure(
                FlapkitStatus::InvalidArgument,
                format!("json is not UTF-8: {e}"),
            )
        })?;
        let inner = Project::from_json(text)?;
        *slot = Box::into_raw(Box::new(FlapkitProject { inner }));
        Ok(())
    })
}

/// # Safety
/// `project` must come from a `flapkit_project_*` constructor and not be
/// used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn flapkit_project_free(project: *mut FlapkitProject) {
    if !project.is_null() {
        drop(Box::from_raw(project));
    }
}

/// Spring stiffness (N·m/rad) placing a point mass (kg) on an arc of radius
/// (m) at resonance frequency (Hz).
///
/// # Safety
/// `out_stiffness` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flapkit_required_stiffness(
    point_mass: f64,
    arc_radius: f64,
    frequency: f64,
    out_stiffness: *mut f64,
) -> FlapkitStatus {
    guard(|| {
        let slot = out(out_stiffness, "out_stiffness")?;
        if !(point_mass >= 0.0 && arc_radius >= 0.0 && frequency >= 0.0) {
            return Err(Failure(
                FlapkitStatus::InvalidArgument,
                "inputs must be >= 0".into(),
            ));
        }
        *slot = required_stiffness(point_mass, arc_radius, frequency).value;
        Ok(())
    })
}

/// Inertia (kg·m²) implied by a stiffness (N·m/rad) and observed resonance
/// (Hz).
///
/// # Safety
/// `out_inertia` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flapkit_effective_inertia(
    stiffness: f64,
    observed_frequency: f64,
    out_inertia: *mut f64,
) -> FlapkitStatus {
    guard(|| {
        let slot = out(out_inertia, "out_inertia")?;
        *slot = effective_inertia_from_resonance(stiffness, observed_frequency)?.value;
        Ok(())
    })
}

/// Mean resistive loss (W) of a bipolar drive of `amplitude` volts.
///
/// # Safety
/// `out_power` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flapkit_joule_power(
    waveform: FlapkitWaveform,
    amplitude: f64,
    resistance: f64,
    out_power: *mut f64,
) -> FlapkitStatus {
    guard(|| {
        let slot = out(out_power, "out_power")?;
        // frequency does not enter the mean loss
        let signal = match waveform {
            FlapkitWaveform::Square => DriveSignal::square(amplitude, 1.0),
            FlapkitWaveform::Sine => DriveSignal::sine(amplitude, 1.0),
        };
        *slot = joule_power(&signal, resistance)?.value;
        Ok(())
    })
}

/// Geometric coil resistance (Ω) of the project's coil.
///
/// # Safety
/// `project` must be a live handle; `out_ohms` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flapkit_coil_resistance(
    project: *const FlapkitProject,
    out_ohms: *mut f64,
) -> FlapkitStatus {
    guard(|| {
        let p = project_ref(project)?;
        let slot = out(out_ohms, "out_ohms")?;
        *slot = coil_resistance(&p.coil)?.value;
        Ok(())
    })
}

/// Total flexure width (m) for the project's flexure material, thickness and
/// length under `max_torque` (N·m) at `max_deflection` (rad).
///
/// # Safety
/// `project` must be a live handle; `out_width` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flapkit_flexure_width(
    project: *const FlapkitProject,
    max_torque: f64,
    max_deflection: f64,
    out_width: *mut f64,
) -> FlapkitStatus {
    guard(|| {
        let p = project_ref(project)?;
        let slot = out(out_width, "out_width")?;
        let f = design_flexure(
            max_torque,
            max_deflection,
            p.flexure.thickness,
            &p.flexure.material,
            p.flexure.length,
            p.wing.length,
        )?;
        *slot = f.total_width;
        Ok(())
    })
}

/// Configured torque constant, or one calibrated to the target stroke.
fn resolve_kt(p: &Project, requested: f64) -> Result<(f64, bool), Failure> {
    if !requested.is_nan() {
        return Ok((requested, false));
    }
    if let Some(k) = p.torque_constant {
        return Ok((k, false));
    }
    let cal = calibrate_torque_constant(
        p.target_stroke,
        &p.sim_config(Some(0.0)),
        &p.simulation.settle,
    )?;
    Ok((cal.torque_constant.0, true))
}

/// Torque constant (N·m/A) that gives the project's target stroke.
///
/// # Safety
/// `project` must be a live handle; `out_kt` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flapkit_calibrate(
    project: *const FlapkitProject,
    out_kt: *mut f64,
) -> FlapkitStatus {
    guard(|| {
        let p = project_ref(project)?;
        let slot = out(out_kt, "out_kt")?;
        let cal = calibrate_torque_constant(
            p.target_stroke,
            &p.sim_config(Some(0.0)),
            &p.simulation.settle,
        )?;
        *slot = cal.torque_constant.0;
        Ok(())
    })
}

/// Simulate `cycles` drive periods from rest. Pass NaN as `torque_constant`
/// to use the configured value, or calibrate when none is configured.
///
/// # Safety
/// `project` must be a live handle; `out_sim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flapkit_simulate(
    project: *const FlapkitProject,
    torque_constant: f64,
    cycles: u32,
    out_sim: *mut *mut FlapkitSimulation,
) -> FlapkitStatus {
    guard(|| {
        let p = project_ref(project)?;
        let slot = out(out_sim, "out_sim")?;
        let (k_t, calibrated) = resolve_kt(p, torque_constant)?;
        let run = simulate(&p.sim_config(Some(k_t)), cycles as usize)?;
        let summary = SimulationSummary {
            schema_version: REPORT_SCHEMA_VERSION,
            config_sha256: p.sha256.clone(),
            torque_constant: k_t,
            calibrated,
            target_stroke: p.target_stroke,
            steady: run.summary.clone(),
        };
        *slot = Box::into_raw(Box::new(FlapkitSimulation { run, summary }));
        Ok(())
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn flapkit_simulation_len(sim: *const FlapkitSimulation) -> usize {
    sim.as_ref().map_or(0, |s| s.run.samples.len())
}

/// # Safety
/// `sim` must be a live handle; `out_sample` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flapkit_simulation_sample(
    sim: *const FlapkitSimulation,
    index: usize,
    out_sample: *mut FlapkitSample,
) -> FlapkitStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        let slot = out(out_sample, "out_sample")?;
        let x = s.run.samples.get(index).ok_or_else(|| {
            Failure(
                FlapkitStatus::InvalidArgument,
                format!(
                    "index {index} out of range ({} samples)",
                    s.run.samples.len()
                ),
            )
        })?;
        *slot = FlapkitSample {
            t: x.t,
            stroke_angle: x.stroke_angle,
            stroke_rate: x.stroke_rate,
            pitch_angle: x.pitch_angle,
            pitch_rate: x.pitch_rate,
            lift: x.lift,
            drag: x.drag,
            tau_drive: x.tau_drive,
            p_elec: x.p_elec,
            p_aero: x.p_aero,
        };
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle; `out_summary` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flapkit_simulation_summary(
    sim: *const FlapkitSimulation,
    out_summary: *mut FlapkitSummary,
) -> FlapkitStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        let slot = out(out_summary, "out_summary")?;
        let st = &s.summary.steady;
        *slot = FlapkitSummary {
            torque_constant: s.summary.torque_constant,
            frequency: st.frequency,
            stroke_amplitude: st.stroke_amplitude,
            pitch_max: st.pitch_max,
            pitch_min: st.pitch_min,
            pitch_at_stroke_extremes: st.pitch_at_stroke_extremes,
            pitch_reversals: st.pitch_reversals,
            settled: st.settled,
            mean_lift: st.mean_lift,
            mean_electrical_power: st.mean_electrical_power,
            mean_joule_power: st.mean_joule_power,
            mean_aero_power: st.mean_aero_power,
            energy_relative_error: st.energy.relative_error,
        };
        Ok(())
    })
}

/// # Safety
/// `sim` must come from [`flapkit_simulate`] and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn flapkit_simulation_free(sim: *mut FlapkitSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Steady response at `n_points` frequencies from `f_min` to `f_max` (Hz)
/// into a caller buffer of `capacity` points. With a null buffer or too
/// small a capacity, `*out_written` receives the needed count and
/// `BufferTooSmall` is returned. `torque_constant` follows
/// [`flapkit_simulate`]; `threads` of 0 uses every core.
///
/// # Safety
/// `project` must be a live handle; `buffer` must hold `capacity` points or
/// be null; `out_written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flapkit_sweep(
    project: *const FlapkitProject,
    torque_constant: f64,
    f_min: f64,
    f_max: f64,
    n_points: usize,
    threads: usize,
    buffer: *mut FlapkitSweepPoint,
    capacity: usize,
    out_written: *mut usize,
) -> FlapkitStatus {
    guard(|| {
        let p = project_ref(project)?;
        let written = out(out_written, "out_written")?;
        *written = 0;
        if buffer.is_null() || capacity < n_points {
            *written = n_points;
            return Err(Failure(
                FlapkitStatus::BufferTooSmall,
                format!("sweep needs room for {n_points} points, buffer holds {capacity}"),
            ));
        }
        let (k_t, _) = resolve_kt(p, torque_constant)?;
        let threads = (threads > 0).then_some(threads);
        let points = frequency_sweep(
            &p.sim_config(Some(k_t)),
            f_min,
            f_max,
            n_points,
            &p.simulation.settle,
            threads,
        )?;
        let dst = std::slice::from_raw_parts_mut(buffer, capacity);
        for (d, s) in dst.iter_mut().zip(&points) {
            *d = FlapkitSweepPoint {
                frequency: s.frequency,
                stroke_amplitude: s.stroke_amplitude,
                mean_lift: s.mean_lift,
                mean_electrical_power: s.mean_electrical_power,
                mean_aero_power: s.mean_aero_power,
                settled: s.settled,
                ok: s.error.is_none(),
            };
        }
        *written = points.len();
        Ok(())
    })
}

/// Design report as a JSON string, with simulation results when `sim` is
/// not null. Release the string with [`flapkit_string_free`].
///
/// # Safety
/// `project` must be a live handle, `sim` null or a live handle, and
/// `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn flapkit_report_json(
    project: *const FlapkitProject,
    sim: *const FlapkitSimulation,
    out_json: *mut *mut c_char,
) -> FlapkitStatus {
    guard(|| {
        let p = project_ref(project)?;
        let slot = out(out_json, "out_json")?;
        let summary = sim.as_ref().map(|s| &s.summary);
        let report = build_report(p, summary)?;
        let c = CString::new(report.to_json()).expect("JSON has no NUL");
        *slot = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn flapkit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
