//! Torsion spring sizing, beam-bank stiffness and resonance bookkeeping.
//!
//! The beam bank is modeled as `n` beams bending out of plane in rotational
//! series. The real part was shaped with 3D FEA; `topology_factor` absorbs
//! the difference and reports always say whether it has been calibrated.
//! Off-axis spring modes are not modeled: the stroke is a single rotational
//! degree of freedom.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, DesignError};
use crate::materials::MaterialSpec;
use crate::optimize::golden_section_min;
use crate::units::Quantity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpringSpec {
    pub n_beams: u32,
    pub beam_length: f64,
    pub beam_width: f64,
    pub beam_thickness: f64,
    pub material: MaterialSpec,
    pub topology_factor: f64,
}

impl SpringSpec {
    pub fn validate(&self) -> Result<(), DesignError> {
        if self.n_beams == 0 {
            return Err(invalid("spring", "n_beams must be >= 1"));
        }
        if !(self.beam_length > 0.0 && self.beam_width > 0.0 && self.beam_thickness > 0.0) {
            return Err(invalid("spring", "beam geometry must be > 0"));
        }
        if !(self.topology_factor > 0.0) {
            return Err(invalid("spring", "topology_factor must be > 0"));
        }
        self.material.validate()
    }

    /// Plan-view area taken by the beams, used to break design ties.
    pub fn footprint(&self) -> f64 {
        self.n_beams as f64 * self.beam_width * self.beam_length
    }

    /// Mass of the beams alone (no hub or frame).
    pub fn beam_mass(&self) -> f64 {
        self.footprint() * self.beam_thickness * self.material.density
    }
}

/// Lumped stroke oscillator: stiffness, inertia about the stroke axis, and
/// the point-mass bookkeeping it was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorSpec {
    pub stiffness: f64,
    pub inertia: f64,
    pub arc_radius: f64,
    pub point_mass: f64,
    /// Linear structural damping as a fraction of critical.
    #[serde(default)]
    pub damping_ratio: f64,
}

impl OscillatorSpec {
    /// Point mass at `arc_radius` plus an additive term for glue and frames.
    pub fn from_point_mass(
        stiffness: f64,
        point_mass: f64,
        arc_radius: f64,
        extra_inertia: f64,
        damping_ratio: f64,
    ) -> Self {
        Self {
            stiffness,
            inertia: point_mass * arc_radius * arc_radius + extra_inertia,
            arc_radius,
            point_mass,
            damping_ratio,
        }
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        if !(self.stiffness > 0.0 && self.inertia > 0.0) {
            return Err(invalid("oscillator", "stiffness and inertia must be > 0"));
        }
        if !(self.damping_ratio >= 0.0) {
            return Err(invalid("oscillator", "damping ratio must be >= 0"));
        }
        let bare = self.point_mass * self.arc_radius * self.arc_radius;
        if self.inertia < bare * (1.0 - 1e-12) {
            return Err(invalid(
                "oscillator",
                format!(
                    "inertia {:.4e} is below the point-mass inertia {bare:.4e}",
                    self.inertia
                ),
            ));
        }
        Ok(())
    }

    pub fn natural_frequency(&self) -> f64 {
        (self.stiffness / self.inertia).sqrt() / (2.0 * PI)
    }

    /// Viscous coefficient `2ζ√(kI)` in N·m·s/rad.
    pub fn damping_coefficient(&self) -> f64 {
        2.0 * self.damping_ratio * (self.stiffness * self.inertia).sqrt()
    }

    /// Inertia beyond the bare point mass (glue, frames, wing).
    pub fn added_inertia(&self) -> f64 {
        self.inertia - self.point_mass * self.arc_radius * self.arc_radius
    }
}

/// `m·r²·(2πf)²`.
pub fn required_stiffness(point_mass: f64, arc_radius: f64, target_freq: f64) -> Quantity {
    let w = 2.0 * PI * target_freq;
    Quantity::torsional_stiffness(point_mass * arc_radius * arc_radius * w * w)
}

/// `√(k/I)/2π`.
pub fn resonance_frequency(osc: &OscillatorSpec) -> Quantity {
    Quantity::frequency(osc.natural_frequency())
}

/// Inertia implied by an observed resonance: `k/(2πf)²`.
pub fn effective_inertia_from_resonance(
    stiffness: f64,
    f_obs: f64,
) -> Result<Quantity, DesignError> {
    if !(stiffness > 0.0 && f_obs > 0.0) {
        return Err(invalid(
            "resonance inversion",
            "stiffness and frequency must be > 0",
        ));
    }
    let w = 2.0 * PI * f_obs;
    Ok(Quantity::inertia(stiffness / (w * w)))
}

/// Stiffness implied by an observed resonance for a known inertia.
pub fn stiffness_from_resonance(inertia: f64, f_obs: f64) -> Result<Quantity, DesignError> {
    if !(inertia > 0.0 && f_obs > 0.0) {
        return Err(invalid(
            "resonance inversion",
            "inertia and frequency must be > 0",
        ));
    }
    let w = 2.0 * PI * f_obs;
    Ok(Quantity::torsional_stiffness(inertia * w * w))
}

/// `topology·E·(w·t³/12)/(n·L)`.
pub fn beam_bank_stiffness(spec: &SpringSpec) -> Quantity {
    Quantity::torsional_stiffness(bank_stiffness(
        spec.material.elastic_modulus,
        spec.beam_width,
        spec.beam_thickness,
        spec.n_beams,
        spec.beam_length,
        spec.topology_factor,
    ))
}

fn bank_stiffness(e: f64, width: f64, thickness: f64, n: u32, length: f64, factor: f64) -> f64 {
    let second_moment = width * thickness.powi(3) / 12.0;
    factor * e * second_moment / (n as f64 * length)
}

/// Topology factor that makes `spec` produce `target` (N·m/rad).
pub fn calibrate_topology_factor(spec: &SpringSpec, target: f64) -> f64 {
    let unit = SpringSpec {
        topology_factor: 1.0,
        ..spec.clone()
    };
    target / beam_bank_stiffness(&unit).value
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpringConstraints {
    pub thickness: f64,
    pub width: (f64, f64),
    pub length: (f64, f64),
    pub n_beams: (u32, u32),
    pub topology_factor: f64,
}

impl SpringConstraints {
    fn validate(&self) -> Result<(), DesignError> {
        let ordered = |(lo, hi): (f64, f64)| lo > 0.0 && lo <= hi && hi.is_finite();
        if !(self.thickness > 0.0) || !ordered(self.width) || !ordered(self.length) {
            return Err(invalid(
                "spring constraints",
                "bounds must be positive and ordered",
            ));
        }
        if self.n_beams.0 == 0 || self.n_beams.0 > self.n_beams.1 {
            return Err(invalid(
                "spring constraints",
                "n_beams bounds must satisfy 1 <= lo <= hi",
            ));
        }
        if !(self.topology_factor > 0.0) {
            return Err(invalid("spring constraints", "topology_factor must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpringDesign {
    pub spec: SpringSpec,
    pub target_stiffness: f64,
    pub achieved_stiffness: f64,
    pub relative_error: f64,
}

/// Relative stiffness error a design may carry.
pub const DESIGN_TOLERANCE: f64 = 0.02;
const WIDTH_GRID: usize = 21;

/// Inverse spring design. Integer beam counts and a width grid are scanned,
/// the beam length is refined by golden section, and among designs within
/// [`DESIGN_TOLERANCE`] the smallest footprint wins, then the fewest beams.
pub fn design_spring(
    target: f64,
    material: &MaterialSpec,
    constraints: &SpringConstraints,
) -> Result<SpringDesign, DesignError> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(invalid("target stiffness", "must be > 0"));
    }
    constraints.validate()?;
    material.validate()?;

    let c = *constraints;
    let widths: Vec<f64> = if c.width.0 == c.width.1 {
        vec![c.width.0]
    } else {
        (0..WIDTH_GRID)
            .map(|i| c.width.0 + (c.width.1 - c.width.0) * i as f64 / (WIDTH_GRID - 1) as f64)
            .collect()
    };

    let candidates: Vec<(u32, f64, f64, f64)> = (c.n_beams.0..=c.n_beams.1)
        .into_par_iter()
        .flat_map_iter(|n| {
            let widths = &widths;
            widths.iter().map(move |&w| {
                let k_of = |len: f64| {
                    bank_stiffness(
                        material.elastic_modulus,
                        w,
                        c.thickness,
                        n,
                        len,
                        c.topology_factor,
                    )
                };
                let miss = |len: f64| (k_of(len) / target).ln().powi(2);
                let len = golden_section_min(miss, c.length.0, c.length.1, 1e-13 * c.length.1);
                let achieved = k_of(len);
                (n, w, len, achieved)
            })
        })
        .collect();

    let rel_err = |k: f64| (k - target).abs() / target;
    let feasible = candidates
        .iter()
        .filter(|cand| rel_err(cand.3) <= DESIGN_TOLERANCE)
        .min_by(|a, b| {
            let fa = a.0 as f64 * a.1 * a.2;
            let fb = b.0 as f64 * b.1 * b.2;
            // footprints within 1e-9 are ties
            if (fa - fb).abs() <= 1e-9 * fa.max(fb) {
                a.0.cmp(&b.0).then(a.1.total_cmp(&b.1))
            } else {
                fa.total_cmp(&fb)
            }
        });

    match feasible {
        Some(&(n, w, len, achieved)) => Ok(SpringDesign {
            spec: SpringSpec {
                n_beams: n,
                beam_length: len,
                beam_width: w,
                beam_thickness: c.thickness,
                material: material.clone(),
                topology_factor: c.topology_factor,
            },
            target_stiffness: target,
            achieved_stiffness: achieved,
            relative_error: rel_err(achieved),
        }),
        None => {
            let nearest = candidates
                .iter()
                .min_by(|a, b| rel_err(a.3).total_cmp(&rel_err(b.3)))
                .map(|cand| cand.3)
                .unwrap_or(f64::NAN);
            Err(DesignError::Infeasible(format!(
                "target {:.4e} N*m/rad unreachable within bounds; nearest achievable {:.4e} N*m/rad ({:+.1}%)",
                target,
                nearest,
                100.0 * (nearest - target) / target
            )))
        }
    }
}
