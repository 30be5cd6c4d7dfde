//! Magnet/coil actuator: masses, winding resistance, drive torque and Joule
//! loss.
//!
//! The coil current is taken as `V/R`; inductance and back-EMF are not
//! modeled. The Lorentz coupling is lumped into a torque constant that is
//! calibrated against a target stroke amplitude with the simulator.

use std::cell::Cell;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{self, SettleCriterion, SimConfig};
use crate::error::{invalid, DesignError, DynamicsError};
use crate::materials::MaterialSpec;
use crate::units::Quantity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetSpec {
    pub height: f64,
    pub diameter: f64,
    pub material: MaterialSpec,
}

impl MagnetSpec {
    pub fn validate(&self) -> Result<(), DesignError> {
        if !(self.height > 0.0 && self.diameter > 0.0) {
            return Err(invalid("magnet", "height and diameter must be > 0"));
        }
        self.material.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoilSpec {
    pub wire_diameter: f64,
    pub layers: u32,
    pub turns_per_layer: u32,
    pub inner_diameter: f64,
    pub height: f64,
    pub material: MaterialSpec,
}

impl CoilSpec {
    pub fn total_turns(&self) -> u32 {
        self.layers * self.turns_per_layer
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        if !(self.wire_diameter > 0.0 && self.inner_diameter > 0.0 && self.height > 0.0) {
            return Err(invalid(
                "coil",
                "wire diameter, inner diameter and height must be > 0",
            ));
        }
        if self.layers == 0 || self.turns_per_layer == 0 {
            return Err(invalid("coil", "layers and turns per layer must be >= 1"));
        }
        // 1 nm of slack for decimal round-off in config values
        if self.height + 1e-9 < self.turns_per_layer as f64 * self.wire_diameter {
            return Err(invalid(
                "coil",
                format!(
                    "{} turns of {:.1} um wire do not fit in {:.1} um height",
                    self.turns_per_layer,
                    self.wire_diameter * 1e6,
                    self.height * 1e6
                ),
            ));
        }
        self.material.validate()
    }

    pub fn outer_diameter(&self) -> f64 {
        self.inner_diameter + 2.0 * self.layers as f64 * self.wire_diameter
    }

    fn wire_area(&self) -> f64 {
        PI * (0.5 * self.wire_diameter).powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    Square,
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSignal {
    pub waveform: Waveform,
    /// Peak voltage (V); a ±70 mV square wave has amplitude 0.07.
    pub amplitude: f64,
    pub frequency: f64,
}

impl DriveSignal {
    pub fn square(amplitude: f64, frequency: f64) -> Self {
        Self {
            waveform: Waveform::Square,
            amplitude,
            frequency,
        }
    }

    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        Self {
            waveform: Waveform::Sine,
            amplitude,
            frequency,
        }
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(invalid("drive", "amplitude must be >= 0"));
        }
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(invalid("drive", "frequency must be > 0"));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    /// Voltage at time `t`. The square wave is high on the first half of
    /// each period.
    pub fn voltage_at(&self, t: f64) -> f64 {
        match self.waveform {
            Waveform::Sine => self.amplitude * (2.0 * PI * self.frequency * t).sin(),
            Waveform::Square => {
                let phase = (self.frequency * t).rem_euclid(1.0);
                if phase < 0.5 {
                    self.amplitude
                } else {
                    -self.amplitude
                }
            }
        }
    }

    pub fn rms(&self) -> f64 {
        match self.waveform {
            Waveform::Square => self.amplitude,
            Waveform::Sine => self.amplitude / 2f64.sqrt(),
        }
    }
}

/// Drive coupling in N·m per ampere.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TorqueConstant(pub f64);

impl TorqueConstant {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Angle weighting of the drive coupling. Constant unless a field map says
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CouplingProfile {
    #[default]
    Constant,
    /// `k_t·cos(φ)^exponent`
    Cosine { exponent: f64 },
}

impl CouplingProfile {
    pub fn weight(&self, stroke_angle: f64) -> f64 {
        match *self {
            CouplingProfile::Constant => 1.0,
            CouplingProfile::Cosine { exponent } => stroke_angle.cos().max(0.0).powf(exponent),
        }
    }
}

/// Cylinder volume times density.
pub fn magnet_mass(spec: &MagnetSpec) -> Quantity {
    let volume = PI * (0.5 * spec.diameter).powi(2) * spec.height;
    Quantity::mass(volume * spec.material.density)
}

/// Total wire length: layer `i` winds at mean diameter `ID + (2i+1)·d`.
pub fn coil_wire_length(spec: &CoilSpec) -> Quantity {
    let per_layer = spec.turns_per_layer as f64 * PI;
    let length: f64 = (0..spec.layers)
        .map(|i| per_layer * (spec.inner_diameter + (2 * i + 1) as f64 * spec.wire_diameter))
        .sum();
    Quantity::length(length)
}

pub fn coil_resistance(spec: &CoilSpec) -> Result<Quantity, DesignError> {
    let rho = spec.material.resistivity()?;
    Ok(Quantity::resistance(
        rho * coil_wire_length(spec).value / spec.wire_area(),
    ))
}

/// Bare copper only; insulation and solder are not counted.
pub fn coil_mass(spec: &CoilSpec) -> Quantity {
    Quantity::mass(coil_wire_length(spec).value * spec.wire_area() * spec.material.density)
}

/// Radial gap between magnet and coil bore, less the sagitta of the magnet's
/// arc over its own length. Negative means the magnet would rub.
pub fn magnet_clearance(magnet: &MagnetSpec, coil: &CoilSpec, arc_radius: f64) -> Quantity {
    let radial = 0.5 * (coil.inner_diameter - magnet.diameter);
    let half = 0.5 * magnet.height;
    let sagitta = if arc_radius > half {
        arc_radius - (arc_radius * arc_radius - half * half).sqrt()
    } else {
        arc_radius
    };
    Quantity::length(radial - sagitta)
}

/// `V_rms²/R`.
pub fn joule_power(signal: &DriveSignal, resistance: f64) -> Result<Quantity, DesignError> {
    if !(resistance > 0.0) {
        return Err(invalid("resistance", "must be > 0"));
    }
    let v = signal.rms();
    Ok(Quantity::power(v * v / resistance))
}

/// `k_t·V(t)/R`.
pub fn drive_torque(
    signal: &DriveSignal,
    k_t: TorqueConstant,
    resistance: f64,
    t: f64,
) -> Result<Quantity, DesignError> {
    if !(resistance > 0.0) {
        return Err(invalid("resistance", "must be > 0"));
    }
    Ok(Quantity::torque(k_t.0 * signal.voltage_at(t) / resistance))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub torque_constant: TorqueConstant,
    /// Steady amplitude reached with the returned constant (rad).
    pub achieved_amplitude: f64,
    pub target_amplitude: f64,
    pub iterations: u32,
}

/// Relative amplitude match the calibration stops at.
pub const CALIBRATION_TOLERANCE: f64 = 1e-3;
const CALIBRATION_MAX_ITER: u32 = 60;

/// Find the torque constant that gives `target_amplitude` (rad) of steady
/// stroke at the configured drive. Amplitude is monotone in `k_t`, so a
/// bracket is grown geometrically and then bisected.
pub fn calibrate_torque_constant(
    target_amplitude: f64,
    cfg: &SimConfig,
    settle: &SettleCriterion,
) -> Result<Calibration, DesignError> {
    if !(target_amplitude >= 0.0) || target_amplitude >= dynamics::STROKE_GUARD {
        return Err(invalid(
            "target amplitude",
            format!("{target_amplitude} rad is outside [0, 90 deg)"),
        ));
    }
    if target_amplitude == 0.0 {
        return Ok(Calibration {
            torque_constant: TorqueConstant(0.0),
            achieved_amplitude: 0.0,
            target_amplitude,
            iterations: 0,
        });
    }
    if cfg.drive.amplitude == 0.0 {
        return Err(DesignError::Calibration("drive amplitude is zero".into()));
    }

    let iterations = Cell::new(0u32);
    let eval = |k: f64| -> Result<f64, DesignError> {
        iterations.set(iterations.get() + 1);
        let mut trial = cfg.clone();
        trial.k_t = TorqueConstant(k);
        match dynamics::steady_state(&trial, settle) {
            Ok(s) => Ok(s.stroke_amplitude),
            // overshooting the stroke guard means k is too large
            Err(DynamicsError::Divergence { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e.into()),
        }
    };

    // linear estimate: resonant amplitude of the square-wave fundamental
    // against structural damping alone; aero only lowers it
    let osc = &cfg.oscillator;
    let omega = 2.0 * PI * cfg.drive.frequency;
    let current = cfg.drive.amplitude / cfg.coil_resistance;
    let c = osc.damping_coefficient().max(1e-30);
    let guess = target_amplitude * c * omega / (4.0 / PI * current);
    let mut k = if cfg.k_t.0 > 0.0 { cfg.k_t.0 } else { guess };

    let a0 = eval(k)?;
    if a0.is_finite() && a0 > 0.0 {
        k *= target_amplitude / a0;
    }
    let (mut lo, mut hi) = (k / 1.25, k * 1.25);
    let mut a_lo = eval(lo)?;
    while a_lo > target_amplitude {
        hi = lo;
        lo /= 2.0;
        a_lo = eval(lo)?;
        if iterations.get() > CALIBRATION_MAX_ITER {
            return Err(DesignError::Calibration(
                "could not bracket from below".into(),
            ));
        }
    }
    let mut a_hi = eval(hi)?;
    while a_hi < target_amplitude {
        lo = hi;
        hi *= 2.0;
        a_hi = eval(hi)?;
        if iterations.get() > CALIBRATION_MAX_ITER {
            return Err(DesignError::Calibration(format!(
                "amplitude {:.3} rad still below target at k_t = {hi:.3e}",
                a_hi
            )));
        }
    }

    while iterations.get() < CALIBRATION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let a = eval(mid)?;
        if (a - target_amplitude).abs() <= CALIBRATION_TOLERANCE * target_amplitude {
            return Ok(Calibration {
                torque_constant: TorqueConstant(mid),
                achieved_amplitude: a,
                target_amplitude,
                iterations: iterations.get(),
            });
        }
        if a < target_amplitude {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(DesignError::Calibration(format!(
        "no convergence after {} simulations (bracket {lo:.4e}..{hi:.4e} N*m/A)",
        iterations.get()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::MaterialSpec;

    pub(crate) fn device_coil() -> CoilSpec {
        CoilSpec {
            wire_diameter: 25e-6,
            layers: 2,
            turns_per_layer: 14,
            inner_diameter: 0.45e-3,
            height: 0.45e-3,
            material: MaterialSpec::copper(),
        }
    }

    fn device_magnet() -> MagnetSpec {
        MagnetSpec {
            height: 0.5e-3,
            diameter: 0.3e-3,
            material: MaterialSpec::ndfeb_n52(),
        }
    }

    // independent oracle: walk every turn and add up its circumference
    fn wire_length_by_turns(spec: &CoilSpec) -> f64 {
        let mut total = 0.0;
        for layer in 0..spec.layers {
            let inner = spec.inner_diameter + 2.0 * layer as f64 * spec.wire_diameter;
            let centre = inner + spec.wire_diameter;
            for _ in 0..spec.turns_per_layer {
                total += PI * centre;
            }
        }
        total
    }

    #[test]
    fn magnet_mass_examples() {
        let m = magnet_mass(&device_magnet()).value;
        // π·(0.15 mm)²·0.5 mm·7500 kg/m³
        let oracle = PI * 0.15e-3f64.powi(2) * 0.5e-3 * 7500.0;
        assert!((m - oracle).abs() < 1e-20);
        assert!((m * 1e6 - 0.265).abs() < 0.001);
        assert!((m * 1e6 - 0.26).abs() / 0.26 < 0.03);

        let mut thin = device_magnet();
        thin.diameter = 1e-12;
        assert!(magnet_mass(&thin).value < 1e-20);

        let mut dense = device_magnet();
        dense.material.density *= 2.0;
        assert!((magnet_mass(&dense).value * 1e6 - 0.530).abs() < 0.002);
    }

    #[test]
    fn wire_length_matches_turn_oracle() {
        let coil = device_coil();
        let l = coil_wire_length(&coil).value;
        let oracle = wire_length_by_turns(&coil);
        assert!((l - oracle).abs() / oracle < 1e-12);
        assert!((l * 1e3 - 43.98).abs() < 0.01, "{l}");

        let single = CoilSpec {
            wire_diameter: 1e-12,
            layers: 1,
            turns_per_layer: 1,
            inner_diameter: 1e-3,
            height: 1e-3,
            material: MaterialSpec::copper(),
        };
        assert!((coil_wire_length(&single).value - PI * 1e-3).abs() < 1e-11);

        let mut doubled = coil.clone();
        doubled.turns_per_layer *= 2;
        let l2 = coil_wire_length(&doubled).value;
        assert!((l2 - 2.0 * l).abs() < 1e-15);
    }

    #[test]
    fn resistance_examples() {
        let coil = device_coil();
        let r = coil_resistance(&coil).unwrap().value;
        assert!((r - 1.5).abs() / 1.5 < 0.10, "{r}");
        // consistency with the length oracle
        let back = r * PI * (12.5e-6f64).powi(2) / 1.68e-8;
        assert!((back - coil_wire_length(&coil).value).abs() / back < 1e-12);

        let mut thin = coil.clone();
        thin.wire_diameter /= 2.0;
        // same length, quarter area
        let r_same_length = 1.68e-8 * coil_wire_length(&coil).value / (PI * (6.25e-6f64).powi(2));
        assert!((r_same_length / r - 4.0).abs() < 1e-12);

        let mut insulator = coil;
        insulator.material = MaterialSpec::polyester();
        assert!(matches!(
            coil_resistance(&insulator),
            Err(DesignError::NotAConductor(_))
        ));
    }

    #[test]
    fn coil_mass_examples() {
        let coil = device_coil();
        let m = coil_mass(&coil).value;
        let oracle = wire_length_by_turns(&coil) * PI * (12.5e-6f64).powi(2) * 8960.0;
        assert!((m - oracle).abs() / oracle < 1e-12);
        assert!((m * 1e6 - 0.19).abs() < 0.01);

        let mut doubled = coil;
        doubled.turns_per_layer *= 2;
        assert!((coil_mass(&doubled).value / m - 2.0).abs() < 1e-12);
    }

    #[test]
    fn coil_validation() {
        let mut coil = device_coil();
        coil.validate().unwrap();
        coil.height = 0.2e-3;
        assert!(coil.validate().is_err());
        let mut coil = device_coil();
        coil.layers = 0;
        assert!(coil.validate().is_err());
    }

    #[test]
    fn clearance_is_positive_for_device_geometry() {
        let c = magnet_clearance(&device_magnet(), &device_coil(), 1.4e-3).value;
        assert!(c > 0.0 && c < 0.075e-3, "{c}");
    }

    #[test]
    fn joule_examples() {
        let sq = DriveSignal::square(0.07, 132.3);
        let p = joule_power(&sq, 1.5).unwrap().value;
        assert!((p - 3.2667e-3).abs() < 1e-6);
        assert!((p - 3.3e-3).abs() / 3.3e-3 < 0.02);
        assert_eq!(
            joule_power(&DriveSignal::square(0.0, 100.0), 2.0)
                .unwrap()
                .value,
            0.0
        );
        let p2 = joule_power(&DriveSignal::square(0.14, 132.3), 1.5)
            .unwrap()
            .value;
        assert!((p2 - 13.07e-3).abs() < 1e-5);
        let flipped = DriveSignal::square(-0.07, 132.3);
        assert_eq!(joule_power(&flipped, 1.5).unwrap().value, p);
        let sine = DriveSignal::sine(0.07, 132.3);
        assert!((joule_power(&sine, 1.5).unwrap().value - p / 2.0).abs() < 1e-15);
        assert!(joule_power(&sq, 0.0).is_err());
    }

    #[test]
    fn drive_torque_examples() {
        let sq = DriveSignal::square(0.07, 100.0);
        let k = TorqueConstant(1e-5);
        let tau = drive_torque(&sq, k, 1.5, 0.001).unwrap().value;
        assert!((tau - 4.6667e-7).abs() < 1e-10);
        let tau_neg = drive_torque(&sq, k, 1.5, 0.006).unwrap().value;
        assert_eq!(tau_neg, -tau);
        let zero = DriveSignal::square(0.0, 100.0);
        assert_eq!(drive_torque(&zero, k, 1.5, 0.001).unwrap().value, 0.0);

        let sine = DriveSignal::sine(0.05, 50.0);
        let t = 0.0013;
        let a = drive_torque(&sine, k, 2.0, t).unwrap().value;
        let twice = DriveSignal::sine(0.10, 50.0);
        let b = drive_torque(&twice, k, 2.0, t).unwrap().value;
        assert!((b - 2.0 * a).abs() < 1e-20);
    }

    #[test]
    fn coupling_profile_weights() {
        assert_eq!(CouplingProfile::Constant.weight(0.7), 1.0);
        let cos2 = CouplingProfile::Cosine { exponent: 2.0 };
        assert!((cos2.weight(PI / 3.0) - 0.25).abs() < 1e-12);
    }
}
