//! Quasi-steady blade-element aerodynamics of a flapping wing.
//!
//! Only translational forces are modeled. The wing hangs from its leading
//! edge with the stroke plane horizontal, so lift is vertical, drag opposes
//! the stroke, and the normal force acting at the centre of pressure twists
//! the wing about the leading edge.
//!
//! Angle of attack is the angle between the chord and the stroke velocity:
//!
//! ```text
//!   pitch = 0            pitch = ψ > 0, stroke rate > 0
//!
//!     LE ●──▶ v             LE ●──▶ v
//!        │                      ╲
//!        │  α = 90°              ╲  α = 90° − ψ, lift up
//!        TE                       TE
//! ```
//!
//! When the trailing edge leads (`ψ·φ̇ < 0`) the angle of attack is negative
//! and lift points down. Coefficients are defined on `[0°, 90°]` and folded:
//! `CL(−α) = −CL(α)`, `CD(−α) = CD(α)`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, DesignError, DynamicsError};
use crate::wing::WingSpec;

/// `CL(α) = offset + amplitude·sin(gain·α − phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftFit {
    pub offset: f64,
    pub amplitude: f64,
    pub gain: f64,
    /// degrees
    pub phase_deg: f64,
}

/// `CD(α) = offset − amplitude·cos(gain·α − phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DragFit {
    pub offset: f64,
    pub amplitude: f64,
    pub gain: f64,
    /// degrees
    pub phase_deg: f64,
}

impl Default for LiftFit {
    fn default() -> Self {
        Self {
            offset: 0.225,
            amplitude: 1.58,
            gain: 2.13,
            phase_deg: 7.2,
        }
    }
}

impl Default for DragFit {
    fn default() -> Self {
        Self {
            offset: 1.92,
            amplitude: 1.55,
            gain: 2.04,
            phase_deg: 9.82,
        }
    }
}

impl LiftFit {
    fn eval(&self, alpha: f64) -> f64 {
        self.offset + self.amplitude * (self.gain * alpha - self.phase_deg.to_radians()).sin()
    }
}

impl DragFit {
    fn eval(&self, alpha: f64) -> f64 {
        self.offset - self.amplitude * (self.gain * alpha - self.phase_deg.to_radians()).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeroConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    pub air_density: f64,
    pub lift: LiftFit,
    pub drag: DragFit,
    pub n_blade_elements: u32,
}

fn yes() -> bool {
    true
}

impl Default for AeroConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            air_density: 1.225,
            lift: LiftFit::default(),
            drag: DragFit::default(),
            n_blade_elements: 20,
        }
    }
}

impl AeroConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        if !(self.air_density > 0.0) {
            return Err(invalid("aero", "air density must be > 0"));
        }
        if self.n_blade_elements == 0 {
            return Err(invalid("aero", "n_blade_elements must be >= 1"));
        }
        if self.lift.eval(0.0) < 0.0 {
            return Err(invalid("aero", "CL(0) must be >= 0"));
        }
        for deg in 0..=90 {
            let cd = self.drag.eval((deg as f64).to_radians());
            if !(cd > 0.0) {
                return Err(invalid(
                    "aero",
                    format!("CD({deg} deg) = {cd:.3} must be > 0"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub cl: f64,
    pub cd: f64,
}

/// Lift and drag coefficients at a signed angle of attack in `[−90°, 90°]`.
pub fn force_coefficients(alpha: f64, cfg: &AeroConfig) -> Coefficients {
    debug_assert!(
        alpha.abs() <= FRAC_PI_2 + 1e-9,
        "alpha {alpha} outside folding range"
    );
    let a = alpha.abs().min(FRAC_PI_2);
    let cl = cfg.lift.eval(a);
    let cd = cfg.drag.eval(a);
    Coefficients {
        cl: if alpha < 0.0 { -cl } else { cl },
        cd,
    }
}

/// Signed angle of attack for a hanging wing at `pitch` moving at
/// `stroke_rate`.
pub fn angle_of_attack(pitch: f64, stroke_rate: f64) -> f64 {
    let magnitude = FRAC_PI_2 - pitch.abs().min(FRAC_PI_2);
    if pitch * stroke_rate >= 0.0 {
        magnitude
    } else {
        -magnitude
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeroState {
    pub stroke_angle: f64,
    pub stroke_rate: f64,
    pub pitch_angle: f64,
    pub pitch_rate: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AeroLoads {
    /// Vertical force (N), positive up.
    pub lift: f64,
    /// Stroke-plane force (N) resisting the motion, signed with the stroke rate.
    pub drag: f64,
    /// Drag moment about the stroke axis (N·m), signed with the stroke rate.
    pub stroke_torque: f64,
    /// Moment about the leading edge (N·m) in the pitch direction.
    pub pitch_torque: f64,
}

/// Spanwise discretization of a wing, built once per simulation.
#[derive(Debug, Clone)]
pub struct BladeModel {
    cfg: AeroConfig,
    /// Σ ½ρ·c·r²·dr
    span_r2: f64,
    /// Σ ½ρ·c·r³·dr
    span_r3: f64,
    cop_distance: f64,
}

impl BladeModel {
    pub fn new(wing: &WingSpec, cfg: &AeroConfig) -> Self {
        let n = cfg.n_blade_elements.max(1);
        let dr = wing.length / n as f64;
        let chord = wing.mean_chord();
        let (mut s2, mut s3) = (0.0, 0.0);
        for i in 0..n {
            let r = wing.root_offset + (i as f64 + 0.5) * dr;
            let w = 0.5 * cfg.air_density * chord * dr;
            s2 += w * r * r;
            s3 += w * r * r * r;
        }
        Self {
            cfg: *cfg,
            span_r2: s2,
            span_r3: s3,
            cop_distance: wing.cop_distance,
        }
    }

    pub fn loads(&self, stroke_rate: f64, pitch: f64) -> AeroLoads {
        if !self.cfg.enabled || stroke_rate == 0.0 {
            return AeroLoads::default();
        }
        let alpha = angle_of_attack(pitch, stroke_rate);
        let Coefficients { cl, cd } = force_coefficients(alpha, &self.cfg);
        let w2 = stroke_rate * stroke_rate;
        // every element sees the same angle of attack, so the element sums
        // factor into span moments
        let q = self.span_r2 * w2;
        let q_moment = self.span_r3 * w2;
        let dir = stroke_rate.signum();
        let a = alpha.abs();
        let normal = q * (cl.abs() * a.cos() + cd * a.sin());
        AeroLoads {
            lift: q * cl,
            drag: dir * q * cd,
            stroke_torque: dir * q_moment * cd,
            pitch_torque: dir * normal * self.cop_distance,
        }
    }
}

/// Loads on `wing` at one instant.
pub fn blade_element_loads(state: &AeroState, wing: &WingSpec, cfg: &AeroConfig) -> AeroLoads {
    BladeModel::new(wing, cfg).loads(state.stroke_rate, state.pitch_angle)
}

/// One sample of the load history used for cycle averaging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadSample {
    pub lift: f64,
    pub stroke_torque: f64,
    pub stroke_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleAverage {
    pub mean_lift: f64,
    /// `∫|τ·φ̇| dt / T`
    pub mean_aero_power: f64,
}

/// Time averages over a window of evenly spaced samples (spacing `dt`) that
/// must span a whole number of `period`s.
pub fn cycle_average(
    samples: &[LoadSample],
    dt: f64,
    period: f64,
) -> Result<CycleAverage, DynamicsError> {
    let cycles = samples.len() as f64 * dt / period;
    if samples.is_empty() || (cycles - cycles.round()).abs() > 1e-6 || cycles.round() < 1.0 {
        return Err(DynamicsError::PartialCycle(cycles));
    }
    let n = samples.len() as f64;
    let mean_lift = samples.iter().map(|s| s.lift).sum::<f64>() / n;
    let mean_aero_power = samples
        .iter()
        .map(|s| (s.stroke_torque * s.stroke_rate).abs())
        .sum::<f64>()
        / n;
    Ok(CycleAverage {
        mean_lift,
        mean_aero_power,
    })
}
