//! Mass, power, lift and efficiency bookkeeping, and the design report that
//! strings every derived figure next to the published one.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::actuator::{
    coil_mass, coil_resistance, coil_wire_length, joule_power, magnet_clearance, magnet_mass,
};
use crate::config::{Derating, Project};
use crate::dynamics::SteadyState;
use crate::error::DesignError;
use crate::spring::{
    beam_bank_stiffness, effective_inertia_from_resonance, required_stiffness, OscillatorSpec,
};
use crate::units::STANDARD_GRAVITY;
use crate::wing::{
    design_flexure, flexure_stiffness, max_aero_torque, peak_normal_force,
    pitch_resonance_frequency, wing_pitch_inertia,
};

/// Hover power per unit body mass for fruit flies (W/kg).
pub const FRUIT_FLY_SPECIFIC_POWER: f64 = 29.0;
/// Rounding slack between a mass table's rows and its net (kg).
pub const NET_ROUNDING: f64 = 1e-9;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassEntry {
    pub name: String,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassBudget {
    pub entries: Vec<MassEntry>,
    pub net: f64,
}

impl MassBudget {
    pub fn new(entries: Vec<MassEntry>) -> Result<Self, DesignError> {
        if let Some(e) = entries
            .iter()
            .find(|e| !(e.mass >= 0.0 && e.mass.is_finite()))
        {
            return Err(DesignError::Budget(format!(
                "mass of `{}` must be >= 0",
                e.name
            )));
        }
        let net = entries.iter().map(|e| e.mass).sum();
        Ok(Self { entries, net })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.mass)
    }
}

/// `specific_power × mass`.
pub fn specific_power_requirement(
    vehicle_mass: f64,
    specific_power: f64,
) -> Result<f64, DesignError> {
    if !(vehicle_mass >= 0.0 && specific_power >= 0.0) {
        return Err(DesignError::Budget(
            "mass and specific power must be >= 0".into(),
        ));
    }
    Ok(vehicle_mass * specific_power)
}

impl Derating {
    pub fn validate(&self) -> Result<(), DesignError> {
        let ok = |f: f64| f > 0.0 && f <= 2.0;
        if !ok(self.lift_factor) || !ok(self.power_factor) {
            return Err(DesignError::Budget(
                "derating factors must lie in (0, 2]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    /// kg of lift
    pub expected_lift: f64,
    /// W
    pub expected_power: f64,
}

/// Lift scaled down and power scaled up by the empirical derating of an
/// unoptimized wing.
pub fn derated_expectation(
    designed_lift: f64,
    designed_power: f64,
    derating: &Derating,
) -> Result<Expectation, DesignError> {
    derating.validate()?;
    Ok(Expectation {
        expected_lift: designed_lift * derating.lift_factor,
        expected_power: designed_power * derating.power_factor,
    })
}

/// `mech_out / electrical_in`.
pub fn efficiency(mech_out: f64, electrical_in: f64) -> Result<f64, DesignError> {
    if !(electrical_in > 0.0) {
        return Err(DesignError::Budget("electrical input must be > 0".into()));
    }
    if !(mech_out >= 0.0) {
        return Err(DesignError::Budget("mechanical output must be >= 0".into()));
    }
    if mech_out > electrical_in {
        return Err(DesignError::Budget(format!(
            "mechanical output {mech_out:.4e} W exceeds electrical input {electrical_in:.4e} W"
        )));
    }
    Ok(mech_out / electrical_in)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget {
    pub electrical_in: f64,
    pub joule_loss: f64,
    pub mech_out: f64,
    /// kg of lift
    pub lift_estimate: f64,
    pub efficiency: f64,
    pub lift_factor: f64,
    pub power_factor: f64,
}

impl PowerBudget {
    pub fn new(
        electrical_in: f64,
        joule_loss: f64,
        mech_out: f64,
        lift_estimate: f64,
        derating: &Derating,
    ) -> Result<Self, DesignError> {
        derating.validate()?;
        Ok(Self {
            electrical_in,
            joule_loss,
            mech_out,
            lift_estimate,
            efficiency: efficiency(mech_out, electrical_in)?,
            lift_factor: derating.lift_factor,
            power_factor: derating.power_factor,
        })
    }
}

/// What a simulation run hands to the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub schema_version: u32,
    pub config_sha256: String,
    /// N·m/A
    pub torque_constant: f64,
    pub calibrated: bool,
    pub target_stroke: f64,
    pub steady: SteadyState,
}

/// Allowed deviation of a computed figure from a published one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tolerance {
    Relative { value: f64 },
    Absolute { value: f64 },
    Band { low: f64, high: f64 },
}

impl Tolerance {
    fn accepts(&self, published: f64, computed: f64) -> bool {
        match *self {
            Tolerance::Relative { value } => {
                (computed - published).abs() <= value * published.abs()
            }
            Tolerance::Absolute { value } => (computed - published).abs() <= value,
            Tolerance::Band { low, high } => computed >= low && computed <= high,
        }
    }

    fn describe(&self, unit: &str) -> String {
        match *self {
            Tolerance::Relative { value } => format!("±{:.3}%", value * 100.0),
            Tolerance::Absolute { value } => format!("±{} {unit}", sig(value)),
            Tolerance::Band { low, high } => format!("[{}, {}] {unit}", sig(low), sig(high)),
        }
    }
}

/// One published figure against its computed counterpart, in display
/// units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub unit: String,
    pub published: f64,
    pub computed: f64,
    pub delta: f64,
    pub tolerance: Tolerance,
    pub pass: bool,
}

fn check(name: &str, unit: &str, published: f64, computed: f64, tolerance: Tolerance) -> Check {
    Check {
        name: name.into(),
        unit: unit.into(),
        published,
        computed,
        delta: computed - published,
        pass: tolerance.accepts(published, computed),
        tolerance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassRow {
    pub name: String,
    /// mg
    pub computed: f64,
    /// mg
    pub table: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSection {
    pub rows: Vec<MassRow>,
    pub computed_net: f64,
    pub table_sum: f64,
    pub table_net: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StiffnessSection {
    pub target_frequency_hz: f64,
    pub sizing_mass_mg: f64,
    pub required_unm: f64,
    pub design_unm: f64,
    pub beam_bank_unm: f64,
    pub topology_factor: f64,
    pub topology_calibrated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSection {
    pub closure: String,
    pub bare_magnet_inertia: f64,
    pub bare_magnet_resonance_hz: f64,
    pub observed_hz: f64,
    pub effective_inertia: f64,
    pub inertia_ratio: f64,
    pub model_stiffness_unm: f64,
    pub model_inertia: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlexureSection {
    pub design_average_lift_mn: f64,
    pub peak_normal_force_mn: f64,
    pub max_aero_torque_unm: f64,
    pub design_width_um: f64,
    /// width from the unrounded torque
    pub unrounded_width_um: f64,
    pub built_width_um: f64,
    pub built_part_width_um: f64,
    pub built_stiffness: f64,
    pub pitch_inertia: f64,
    pub pitch_resonance_hz: f64,
    /// Pitch resonance over drive frequency; quasi-static pitch needs ≫ 1.
    pub quasi_static_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorSection {
    pub wire_length_mm: f64,
    pub resistance_ohm: f64,
    pub resistance_from_geometry: bool,
    pub coil_outer_diameter_mm: f64,
    pub magnet_clearance_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSection {
    pub drive_amplitude_mv: f64,
    pub joule_mw: f64,
    pub vehicle_mass_mg: f64,
    pub specific_power_w_per_kg: f64,
    pub vehicle_power_uw: f64,
    pub designed_lift_per_wing_mg: f64,
    pub designed_power_per_wing_uw: f64,
    pub expected_lift_mg: f64,
    pub expected_power_uw: f64,
    pub efficiency: f64,
    pub muscle_efficiency: f64,
    pub muscle_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSection {
    pub torque_constant: f64,
    pub calibrated: bool,
    pub frequency_hz: f64,
    pub detuning: f64,
    pub stroke_amplitude_deg: f64,
    pub pitch_max_deg: f64,
    pub pitch_min_deg: f64,
    pub pitch_at_stroke_extremes_deg: f64,
    pub stroke_at_pitch_extrema: f64,
    pub pitch_reversals: u32,
    pub mean_lift_mg: f64,
    pub mean_lift_un: f64,
    pub quasi_static_mean_lift_mg: f64,
    pub mean_electrical_mw: f64,
    pub mean_aero_uw: f64,
    pub efficiency: f64,
    pub energy_audit_error: f64,
    pub settled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub schema_version: u32,
    pub config_sha256: String,
    pub mass: MassSection,
    pub stiffness: StiffnessSection,
    pub resonance: ResonanceSection,
    pub flexure: FlexureSection,
    pub actuator: ActuatorSection,
    pub power: PowerSection,
    pub simulation: Option<SimulationSection>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

fn mg(kg: f64) -> f64 {
    kg * 1e6
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b) / b
}

/// Assemble the report. Without a simulation summary only the static chains
/// are filled in.
pub fn build_report(
    p: &Project,
    sim: Option<&SimulationSummary>,
) -> Result<DesignReport, DesignError> {
    let mut warnings = Vec::new();
    let mut checks = Vec::new();
    let rf = &p.reference;
    let b = &p.budget;

    // mass
    let computed = [
        ("coil", coil_mass(&p.coil).value, "bare copper winding"),
        ("magnet", magnet_mass(&p.magnet).value, "cylinder geometry"),
        ("spring", p.spring.beam_mass(), "beams only"),
        ("d_frame", b.d_frame_mass, "config value"),
        ("wing", p.wing.mass, "config value"),
    ];
    let computed_budget = MassBudget::new(
        computed
            .iter()
            .map(|(n, m, _)| MassEntry {
                name: (*n).into(),
                mass: *m,
            })
            .collect(),
    )?;
    let table = MassBudget::new(
        b.table
            .iter()
            .map(|(n, m)| MassEntry {
                name: n.clone(),
                mass: *m,
            })
            .collect(),
    )?;
    let rows: Vec<MassRow> = computed
        .iter()
        .map(|(n, m, src)| MassRow {
            name: (*n).into(),
            computed: mg(*m),
            table: mg(table.get(n).unwrap_or(f64::NAN)),
            source: (*src).into(),
        })
        .collect();
    if (table.net - b.table_net).abs() > NET_ROUNDING {
        warnings.push(format!(
            "mass table rows sum to {:.2} mg but the printed net is {:.2} mg (rounding)",
            mg(table.net),
            mg(b.table_net)
        ));
    }
    let coil_gap = rel(
        computed_budget.get("coil").unwrap_or(0.0),
        table.get("coil").unwrap_or(f64::NAN),
    );
    if coil_gap.abs() > 0.05 {
        warnings.push(format!(
            "coil mass model gap: bare copper gives {:.3} mg against {:.2} mg weighed ({:+.0}%); insulation, bond coat and leads are not modeled",
            mg(computed_budget.get("coil").unwrap_or(0.0)),
            mg(table.get("coil").unwrap_or(f64::NAN)),
            coil_gap * 100.0
        ));
    }
    let spring_gap = rel(
        p.spring.beam_mass(),
        table.get("spring").unwrap_or(f64::NAN),
    );
    if spring_gap.abs() > 0.05 {
        warnings.push(format!(
            "spring mass from beam area differs from the table by {:+.0}%",
            spring_gap * 100.0
        ));
    }
    checks.push(check(
        "magnet mass from geometry",
        "mg",
        mg(rf.magnet_mass),
        mg(magnet_mass(&p.magnet).value),
        Tolerance::Relative { value: 0.05 },
    ));

    // stiffness
    let t = &p.spring_targets;
    let required = required_stiffness(p.magnet_mass, t.arc_radius, t.target_frequency).value;
    checks.push(check(
        "required spring stiffness",
        "uNm",
        rf.required_stiffness * 1e6,
        required * 1e6,
        Tolerance::Relative { value: 0.015 },
    ));
    let bank = beam_bank_stiffness(&p.spring).value;
    if p.topology_calibrated {
        warnings.push(format!(
            "spring topology factor {:.3} is calibrated so the listed beams give the design stiffness",
            p.spring.topology_factor
        ));
    }

    // resonance
    let bare_i = p.magnet_mass * t.arc_radius * t.arc_radius;
    let bare =
        OscillatorSpec::from_point_mass(t.design_stiffness, p.magnet_mass, t.arc_radius, 0.0, 0.0);
    let eff_i = effective_inertia_from_resonance(t.design_stiffness, p.observed_resonance)?.value;

    // flexure
    let ft = &p.flexure_targets;
    let normal = peak_normal_force(ft.design_average_lift).value;
    let torque = max_aero_torque(normal, p.wing.cop_distance)?.value;
    checks.push(check(
        "peak aerodynamic pitch torque",
        "uNm",
        rf.max_aero_torque * 1e6,
        torque * 1e6,
        Tolerance::Relative { value: 0.02 },
    ));
    // the published chain carries the torque at two figures into the width step
    let designed = design_flexure(
        rf.max_aero_torque,
        ft.max_deflection,
        p.flexure.thickness,
        &p.flexure.material,
        p.flexure.length,
        p.wing.length,
    )?;
    checks.push(check(
        "flexure width",
        "um",
        rf.flexure_width * 1e6,
        designed.total_width * 1e6,
        Tolerance::Band {
            low: 390.0,
            high: 400.0,
        },
    ));
    let unrounded_width = design_flexure(
        torque,
        ft.max_deflection,
        p.flexure.thickness,
        &p.flexure.material,
        p.flexure.length,
        p.wing.length,
    )?
    .total_width;
    let i_pitch = wing_pitch_inertia(&p.wing).value;
    let k_flex = flexure_stiffness(&p.flexure).value;
    let f_pitch = pitch_resonance_frequency(k_flex, i_pitch).value;
    let qs_ratio = f_pitch / p.drive.frequency;
    if qs_ratio < 3.0 {
        warnings.push(format!(
            "pitch resonance {:.1} Hz is not well above the {:.1} Hz stroke; pitch will lag its aerodynamic equilibrium",
            f_pitch, p.drive.frequency
        ));
    }

    // actuator
    let r_geo = coil_resistance(&p.coil)?.value;
    checks.push(check(
        "coil resistance",
        "ohm",
        rf.coil_resistance,
        r_geo,
        Tolerance::Band {
            low: 1.3,
            high: 1.7,
        },
    ));

    // power
    let joule = joule_power(&p.drive, p.coil_resistance)?.value;
    checks.push(check(
        "Joule loss",
        "mW",
        rf.joule_power * 1e3,
        joule * 1e3,
        Tolerance::Relative { value: 0.02 },
    ));
    let p_1mg = specific_power_requirement(1e-6, b.specific_power)?;
    checks.push(check(
        "power for 1 mg of lift",
        "uW",
        rf.specific_power_1mg * 1e6,
        p_1mg * 1e6,
        Tolerance::Relative { value: 1e-9 },
    ));
    let vehicle_power = specific_power_requirement(b.vehicle_mass, b.specific_power)?;
    let per_wing_lift = b.vehicle_mass / b.wings as f64;
    let per_wing_power = vehicle_power / b.wings as f64;
    let expect = derated_expectation(per_wing_lift, per_wing_power, &b.derating)?;
    checks.push(check(
        "expected mechanical power, one wing",
        "uW",
        rf.mechanical_power * 1e6,
        expect.expected_power * 1e6,
        Tolerance::Relative { value: 0.02 },
    ));
    checks.push(check(
        "expected lift, one wing",
        "mg",
        mg(rf.lift),
        mg(expect.expected_lift),
        Tolerance::Relative { value: 1e-9 },
    ));
    let budget = PowerBudget::new(
        joule,
        joule,
        expect.expected_power,
        expect.expected_lift,
        &b.derating,
    )?;
    checks.push(check(
        "electromechanical efficiency",
        "%",
        rf.efficiency * 100.0,
        budget.efficiency * 100.0,
        Tolerance::Absolute { value: 0.03 },
    ));
    let muscle_ratio = rf.muscle_efficiency / budget.efficiency;

    // simulation
    let simulation = match sim {
        None => {
            warnings.push("no simulation summary: report covers the static chains only".into());
            None
        }
        Some(s) => {
            if s.config_sha256 != p.sha256 {
                warnings.push("simulation summary was produced from a different config".into());
            }
            let st = &s.steady;
            let lift_mg = mg(st.mean_lift / STANDARD_GRAVITY);
            let sim_eff = if st.mean_electrical_power > 0.0 {
                st.mean_aero_power / st.mean_electrical_power
            } else {
                0.0
            };
            checks.push(check(
                "stroke amplitude",
                "deg",
                rf.stroke_amplitude.to_degrees(),
                st.stroke_amplitude.to_degrees(),
                Tolerance::Absolute { value: 1.0 },
            ));
            if p.stops.enabled {
                checks.push(check(
                    "peak positive pitch",
                    "deg",
                    p.stops.positive_limit.to_degrees(),
                    st.pitch_max.to_degrees(),
                    Tolerance::Absolute { value: 1.0 },
                ));
                checks.push(check(
                    "peak negative pitch",
                    "deg",
                    -p.stops.negative_limit.to_degrees(),
                    st.pitch_min.to_degrees(),
                    Tolerance::Absolute { value: 1.0 },
                ));
            }
            checks.push(check(
                "pitch at stroke extremes",
                "deg",
                0.0,
                st.pitch_at_stroke_extremes.to_degrees(),
                Tolerance::Absolute { value: 5.0 },
            ));
            checks.push(check(
                "mean lift, one wing (model band)",
                "mg",
                mg(rf.lift),
                lift_mg,
                Tolerance::Band {
                    low: 0.1,
                    high: 1.2,
                },
            ));
            let design_lift_mg = mg(ft.design_average_lift / STANDARD_GRAVITY);
            warnings.push(format!(
                "simulated mean lift {:.3} mg ({:.2} uN) against 0.3 mg expected and {:.2} mg ({:.3} mN) flexure design figure",
                lift_mg,
                st.mean_lift * 1e6,
                design_lift_mg,
                ft.design_average_lift * 1e3
            ));
            if !st.settled {
                warnings.push("simulation did not meet the settling criterion".into());
            }
            Some(SimulationSection {
                torque_constant: s.torque_constant,
                calibrated: s.calibrated,
                frequency_hz: st.frequency,
                detuning: st.frequency / p.oscillator.natural_frequency() - 1.0,
                stroke_amplitude_deg: st.stroke_amplitude.to_degrees(),
                pitch_max_deg: st.pitch_max.to_degrees(),
                pitch_min_deg: st.pitch_min.to_degrees(),
                pitch_at_stroke_extremes_deg: st.pitch_at_stroke_extremes.to_degrees(),
                stroke_at_pitch_extrema: st.stroke_at_pitch_extrema,
                pitch_reversals: st.pitch_reversals,
                mean_lift_mg: lift_mg,
                mean_lift_un: st.mean_lift * 1e6,
                quasi_static_mean_lift_mg: mg(st.quasi_static_mean_lift / STANDARD_GRAVITY),
                mean_electrical_mw: st.mean_electrical_power * 1e3,
                mean_aero_uw: st.mean_aero_power * 1e6,
                efficiency: sim_eff,
                energy_audit_error: st.energy.relative_error,
                settled: st.settled,
            })
        }
    };

    Ok(DesignReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config_sha256: p.sha256.clone(),
        mass: MassSection {
            rows,
            computed_net: mg(computed_budget.net),
            table_sum: mg(table.net),
            table_net: mg(b.table_net),
        },
        stiffness: StiffnessSection {
            target_frequency_hz: t.target_frequency,
            sizing_mass_mg: mg(p.magnet_mass),
            required_unm: required * 1e6,
            design_unm: t.design_stiffness * 1e6,
            beam_bank_unm: bank * 1e6,
            topology_factor: p.spring.topology_factor,
            topology_calibrated: p.topology_calibrated,
        },
        resonance: ResonanceSection {
            closure: format!("{:?}", p.closure),
            bare_magnet_inertia: bare_i,
            bare_magnet_resonance_hz: bare.natural_frequency(),
            observed_hz: p.observed_resonance,
            effective_inertia: eff_i,
            inertia_ratio: eff_i / bare_i,
            model_stiffness_unm: p.oscillator.stiffness * 1e6,
            model_inertia: p.oscillator.inertia,
        },
        flexure: FlexureSection {
            design_average_lift_mn: ft.design_average_lift * 1e3,
            peak_normal_force_mn: normal * 1e3,
            max_aero_torque_unm: torque * 1e6,
            design_width_um: designed.total_width * 1e6,
            unrounded_width_um: unrounded_width * 1e6,
            built_width_um: p.flexure.total_width * 1e6,
            built_part_width_um: p.flexure.part_width() * 1e6,
            built_stiffness: k_flex,
            pitch_inertia: i_pitch,
            pitch_resonance_hz: f_pitch,
            quasi_static_ratio: qs_ratio,
        },
        actuator: ActuatorSection {
            wire_length_mm: coil_wire_length(&p.coil).value * 1e3,
            resistance_ohm: p.coil_resistance,
            resistance_from_geometry: p.resistance_from_geometry,
            coil_outer_diameter_mm: p.coil.outer_diameter() * 1e3,
            magnet_clearance_um: magnet_clearance(&p.magnet, &p.coil, t.arc_radius).value * 1e6,
        },
        power: PowerSection {
            drive_amplitude_mv: p.drive.amplitude * 1e3,
            joule_mw: joule * 1e3,
            vehicle_mass_mg: mg(b.vehicle_mass),
            specific_power_w_per_kg: b.specific_power,
            vehicle_power_uw: vehicle_power * 1e6,
            designed_lift_per_wing_mg: mg(per_wing_lift),
            designed_power_per_wing_uw: per_wing_power * 1e6,
            expected_lift_mg: mg(expect.expected_lift),
            expected_power_uw: expect.expected_power * 1e6,
            efficiency: budget.efficiency,
            muscle_efficiency: rf.muscle_efficiency,
            muscle_ratio,
        },
        simulation,
        checks,
        warnings,
    })
}

/// Four significant figures without trailing noise.
fn sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = (3 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.digits$}")
}

impl DesignReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text rendering: one line per check, then the chains and
    /// warnings.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "flapkit design report (config sha256 {})",
            self.config_sha256
        );
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<38} {:>12} {:>12} {:>10}  {:<18} verdict",
            "check", "published", "computed", "delta", "tolerance"
        );
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<38} {:>12} {:>12} {:>10}  {:<18} {}",
                c.name,
                format!("{} {}", sig(c.published), c.unit),
                format!("{} {}", sig(c.computed), c.unit),
                sig(c.delta),
                c.tolerance.describe(&c.unit),
                if c.pass { "ok" } else { "MISS" }
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "mass (mg)            computed   table");
        for r in &self.mass.rows {
            let _ = writeln!(
                s,
                "  {:<18} {:>8.3} {:>7.2}   {}",
                r.name, r.computed, r.table, r.source
            );
        }
        let _ = writeln!(
            s,
            "  {:<18} {:>8.3} {:>7.2}   (printed net {:.2})",
            "sum", self.mass.computed_net, self.mass.table_sum, self.mass.table_net
        );
        let st = &self.stiffness;
        let _ = writeln!(
            s,
            "\nstiffness: required {:.4} uNm at {} Hz, design {:.3} uNm, beam bank {:.4} uNm (topology factor {:.3}{})",
            st.required_unm,
            st.target_frequency_hz,
            st.design_unm,
            st.beam_bank_unm,
            st.topology_factor,
            if st.topology_calibrated { ", calibrated" } else { "" }
        );
        let r = &self.resonance;
        let _ = writeln!(
            s,
            "resonance: bare magnet {:.1} Hz, observed {:.1} Hz, effective inertia {:.4e} kg*m2 ({:.2}x bare)",
            r.bare_magnet_resonance_hz, r.observed_hz, r.effective_inertia, r.inertia_ratio
        );
        let f = &self.flexure;
        let _ = writeln!(
            s,
            "flexure: normal force {:.5} mN, torque {:.5} uNm, design width {:.1} um ({:.1} um unrounded), built {:.0} um ({:.0} um parts), pitch resonance {:.1} Hz ({:.2}x drive)",
            f.peak_normal_force_mn,
            f.max_aero_torque_unm,
            f.design_width_um,
            f.unrounded_width_um,
            f.built_width_um,
            f.built_part_width_um,
            f.pitch_resonance_hz,
            f.quasi_static_ratio
        );
        let a = &self.actuator;
        let _ =
            writeln!(
            s,
            "coil: wire {:.2} mm, {:.3} ohm{}, outer diameter {:.3} mm, magnet clearance {:.1} um",
            a.wire_length_mm,
            a.resistance_ohm,
            if a.resistance_from_geometry { " (geometric)" } else { "" },
            a.coil_outer_diameter_mm,
            a.magnet_clearance_um
        );
        let p = &self.power;
        let _ = writeln!(
            s,
            "power: Joule {:.3} mW at {:.0} mV; {:.1} uW for {:.2} mg; per wing {:.2} mg / {:.2} uW designed, {:.2} mg / {:.2} uW expected; efficiency {:.3}% ({:.1}x below muscle)",
            p.joule_mw,
            p.drive_amplitude_mv,
            p.vehicle_power_uw,
            p.vehicle_mass_mg,
            p.designed_lift_per_wing_mg,
            p.designed_power_per_wing_uw,
            p.expected_lift_mg,
            p.expected_power_uw,
            p.efficiency * 100.0,
            p.muscle_ratio
        );
        if let Some(m) = &self.simulation {
            let _ = writeln!(
                s,
                "simulation: {:.2} Hz ({:+.3}% detuned), stroke {:.2} deg, pitch {:+.1}/{:+.1} deg, {} reversals, lift {:.4} mg (quasi-static pitch {:.3} mg), electrical {:.3} mW, aero {:.2} uW",
                m.frequency_hz,
                m.detuning * 100.0,
                m.stroke_amplitude_deg,
                m.pitch_max_deg,
                m.pitch_min_deg,
                m.pitch_reversals,
                m.mean_lift_mg,
                m.quasi_static_mean_lift_mg,
                m.mean_electrical_mw,
                m.mean_aero_uw
            );
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(s, "\nwarnings:");
            for w in &self.warnings {
                let _ = writeln!(s, "  - {w}");
            }
        }
        s
    }
}

/// Ratio of muscle to device efficiency, the gap quoted against insects.
pub fn efficiency_gap(device: f64, muscle: f64) -> f64 {
    muscle / device
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specific_power_examples() {
        assert_eq!(
            specific_power_requirement(1e-6, FRUIT_FLY_SPECIFIC_POWER).unwrap(),
            29e-6
        );
        let p = specific_power_requirement(0.7e-6, FRUIT_FLY_SPECIFIC_POWER).unwrap();
        assert!((p - 20.3e-6).abs() < 1e-15);
        assert_eq!(
            specific_power_requirement(0.0, FRUIT_FLY_SPECIFIC_POWER).unwrap(),
            0.0
        );
        assert!(specific_power_requirement(-1.0, 29.0).is_err());
    }

    #[test]
    fn derating_examples() {
        let d = Derating::default();
        let e = derated_expectation(0.5e-6, 14.5e-6, &d).unwrap();
        assert!((e.expected_lift - 0.3e-6).abs() < 1e-18);
        assert!((e.expected_power - 23.2e-6).abs() < 1e-15);
        let one = Derating {
            lift_factor: 1.0,
            power_factor: 1.0,
        };
        let e = derated_expectation(0.5e-6, 14.5e-6, &one).unwrap();
        assert_eq!(e.expected_lift, 0.5e-6);
        assert_eq!(e.expected_power, 14.5e-6);
        let bad = Derating {
            lift_factor: 0.0,
            power_factor: 1.0,
        };
        assert!(derated_expectation(1.0, 1.0, &bad).is_err());
    }

    #[test]
    fn efficiency_examples() {
        let e = efficiency(23e-6, 3.27e-3).unwrap();
        assert!((e * 100.0 - 0.70).abs() < 0.03);
        assert_eq!(efficiency(0.0, 1.0).unwrap(), 0.0);
        assert!(matches!(efficiency(2.0, 1.0), Err(DesignError::Budget(_))));
        assert!(efficiency(1.0, 0.0).is_err());
        let gap = efficiency_gap(e, 0.17);
        assert!((gap - 24.0).abs() < 1.0, "{gap}");
    }

    #[test]
    fn mass_budget_sums() {
        let b = MassBudget::new(
            [
                ("coil", 0.25),
                ("magnet", 0.26),
                ("spring", 0.15),
                ("d_frame", 0.05),
                ("wing", 0.02),
            ]
            .iter()
            .map(|(n, m)| MassEntry {
                name: (*n).into(),
                mass: m * 1e-6,
            })
            .collect(),
        )
        .unwrap();
        assert!((b.net - 0.73e-6).abs() < NET_ROUNDING);
        assert!(MassBudget::new(vec![MassEntry {
            name: "x".into(),
            mass: -1.0
        }])
        .is_err());
    }

    #[test]
    fn power_budget_identity() {
        let pb = PowerBudget::new(3.27e-3, 3.27e-3, 23e-6, 0.3e-6, &Derating::default()).unwrap();
        assert_eq!(pb.efficiency * pb.electrical_in, pb.mech_out);
    }

    #[test]
    fn static_report_flags_table_rounding() {
        let p = Project::device();
        let r = build_report(&p, None).unwrap();
        assert!(r.simulation.is_none());
        assert!(r.warnings.iter().any(|w| w.contains("printed net")));
        assert!(r.warnings.iter().any(|w| w.contains("coil mass model gap")));
        let failing: Vec<_> = r
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| &c.name)
            .collect();
        assert!(failing.is_empty(), "{failing:?}");
        assert_eq!(r.to_json(), build_report(&p, None).unwrap().to_json());
    }
}
