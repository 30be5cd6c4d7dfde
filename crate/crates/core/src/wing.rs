//! Wing planform, pitch inertia, and passive-pitch flexure sizing.
//!
//! Pitch is measured from the hanging (vertical) wing plane about the
//! leading edge. Aspect ratio is single-wing length over mean chord.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, DesignError};
use crate::materials::MaterialSpec;
use crate::units::Quantity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WingSpec {
    /// Root-to-tip length (m).
    pub length: f64,
    pub aspect_ratio: f64,
    pub mass: f64,
    pub n_veins: u32,
    pub vein_width: f64,
    pub membrane_thickness: f64,
    pub adhesive_thickness: f64,
    /// Chordwise centre-of-pressure distance from the leading edge (m).
    pub cop_distance: f64,
    /// Share of the wing mass carried on the leading edge (on the pitch axis).
    #[serde(default)]
    pub leading_edge_mass_fraction: f64,
    /// Distance from the stroke axis to the wing root (m).
    #[serde(default)]
    pub root_offset: f64,
}

impl WingSpec {
    pub fn validate(&self) -> Result<(), DesignError> {
        if !(self.length > 0.0 && self.aspect_ratio > 0.0 && self.mass > 0.0) {
            return Err(invalid("wing", "length, aspect ratio and mass must be > 0"));
        }
        if !(0.0..1.0).contains(&self.leading_edge_mass_fraction) {
            return Err(invalid(
                "wing",
                "leading-edge mass fraction must be in [0, 1)",
            ));
        }
        if !(self.root_offset >= 0.0) {
            return Err(invalid("wing", "root offset must be >= 0"));
        }
        let chord = self.mean_chord();
        if !(self.cop_distance >= 0.0 && self.cop_distance < chord) {
            return Err(invalid(
                "wing",
                format!(
                    "centre of pressure {:.3} mm must lie within the {:.3} mm chord",
                    self.cop_distance * 1e3,
                    chord * 1e3
                ),
            ));
        }
        Ok(())
    }

    pub fn mean_chord(&self) -> f64 {
        self.length / self.aspect_ratio
    }

    pub fn planform(&self) -> Planform {
        wing_planform(self.length, self.aspect_ratio)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Planform {
    pub mean_chord: f64,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlexureSpec {
    pub total_width: f64,
    pub length: f64,
    pub thickness: f64,
    pub n_parts: u32,
    pub material: MaterialSpec,
    /// Structural damping of the pitch hinge as a fraction of critical.
    #[serde(default)]
    pub damping_ratio: f64,
}

impl FlexureSpec {
    pub fn validate(&self) -> Result<(), DesignError> {
        if self.n_parts == 0 {
            return Err(invalid("flexure", "n_parts must be >= 1"));
        }
        if !(self.total_width > 0.0 && self.length > 0.0 && self.thickness > 0.0) {
            return Err(invalid(
                "flexure",
                "width, length and thickness must be > 0",
            ));
        }
        if !(self.damping_ratio >= 0.0) {
            return Err(invalid("flexure", "damping ratio must be >= 0"));
        }
        self.material.validate()
    }

    pub fn part_width(&self) -> f64 {
        self.total_width / self.n_parts as f64
    }

    /// Same total width split into `n` equal parts.
    pub fn split(&self, n: u32) -> FlexureSpec {
        FlexureSpec {
            n_parts: n,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchStopSpec {
    /// Limit for positive pitch (rad, > 0).
    pub positive_limit: f64,
    /// Magnitude of the limit for negative pitch (rad, > 0).
    pub negative_limit: f64,
    pub restitution: f64,
    #[serde(default = "enabled_default")]
    pub enabled: bool,
}

fn enabled_default() -> bool {
    true
}

impl PitchStopSpec {
    /// +30°/−50° as observed on the assembled device.
    pub fn observed() -> Self {
        Self {
            positive_limit: 30f64.to_radians(),
            negative_limit: 50f64.to_radians(),
            restitution: 0.0,
            enabled: true,
        }
    }

    pub fn symmetric(limit: f64) -> Self {
        Self {
            positive_limit: limit,
            negative_limit: limit,
            restitution: 0.0,
            enabled: true,
        }
    }

    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::symmetric(89f64.to_radians())
        }
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        let ok = |l: f64| l > 0.0 && l < PI / 2.0;
        if !ok(self.positive_limit) || !ok(self.negative_limit) {
            return Err(invalid("pitch stops", "limits must lie in (0, 90) degrees"));
        }
        if !(0.0..=1.0).contains(&self.restitution) {
            return Err(invalid("pitch stops", "restitution must be in [0, 1]"));
        }
        Ok(())
    }
}

/// `(E/12)·t³·(w/l)`, summed over the flexure parts.
pub fn flexure_stiffness(spec: &FlexureSpec) -> Quantity {
    let per_part =
        spec.material.elastic_modulus / 12.0 * spec.thickness.powi(3) * spec.part_width()
            / spec.length;
    Quantity::torsional_stiffness(per_part * spec.n_parts as f64)
}

/// Normal force times centre-of-pressure arm.
pub fn max_aero_torque(normal_force: f64, cop_distance: f64) -> Result<Quantity, DesignError> {
    if !(normal_force >= 0.0 && cop_distance >= 0.0) {
        return Err(invalid("aero torque", "force and distance must be >= 0"));
    }
    Ok(Quantity::torque(normal_force * cop_distance))
}

/// Peak normal force on one wing from a cycle-average lift: `0.5·√2·L̄`.
pub fn peak_normal_force(average_lift: f64) -> Quantity {
    Quantity::force(0.5 * 2f64.sqrt() * average_lift)
}

/// Flexure width that deflects `max_deflection` under `max_torque`:
/// `w = 12·l·τ/(θ·E·t³)`, split into three equal parts.
pub fn design_flexure(
    max_torque: f64,
    max_deflection: f64,
    thickness: f64,
    material: &MaterialSpec,
    length: f64,
    leading_edge_length: f64,
) -> Result<FlexureSpec, DesignError> {
    if !(max_torque >= 0.0 && max_deflection > 0.0 && thickness > 0.0 && length > 0.0) {
        return Err(invalid("flexure design", "inputs must be positive"));
    }
    material.validate()?;
    let width = 12.0 * length * max_torque
        / (max_deflection * material.elastic_modulus * thickness.powi(3));
    if width > leading_edge_length {
        // width scales with length, so this is the longest flexure that fits
        let fit_length = length * leading_edge_length / width;
        return Err(DesignError::Infeasible(format!(
            "flexure needs {:.1} um of width but the leading edge is {:.1} um; shorten the flexure to {:.1} um or thicken it",
            width * 1e6,
            leading_edge_length * 1e6,
            fit_length * 1e6
        )));
    }
    Ok(FlexureSpec {
        total_width: width,
        length,
        thickness,
        n_parts: 3,
        material: material.clone(),
        damping_ratio: 0.0,
    })
}

pub fn wing_planform(length: f64, aspect_ratio: f64) -> Planform {
    let mean_chord = length / aspect_ratio;
    Planform {
        mean_chord,
        area: length * mean_chord,
    }
}

/// Inertia about the leading-edge pitch axis. The membrane share of the
/// mass is spread uniformly over the rectangular planform (`∫σc³/3 dr`);
/// the leading-edge share sits on the axis and adds nothing.
pub fn wing_pitch_inertia(spec: &WingSpec) -> Quantity {
    let chord = spec.mean_chord();
    let area = spec.length * chord;
    if area <= 0.0 {
        return Quantity::inertia(0.0);
    }
    let sigma = spec.mass * (1.0 - spec.leading_edge_mass_fraction) / area;
    Quantity::inertia(sigma * chord.powi(3) / 3.0 * spec.length)
}

/// `√(k/I)/2π` for the pitch hinge.
pub fn pitch_resonance_frequency(flexure_stiffness: f64, pitch_inertia: f64) -> Quantity {
    Quantity::frequency((flexure_stiffness / pitch_inertia).sqrt() / (2.0 * PI))
}
