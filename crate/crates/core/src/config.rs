//! Project configuration files.
//!
//! Every dimensioned value is a string with an explicit unit suffix
//! (`"0.3mm"`, `"70mV"`, `"0.8uNm"`). Unknown keys are rejected, and parse
//! errors carry the JSON path of the offending value.

use std::collections::BTreeMap;
use std::fmt;
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::actuator::{
    coil_resistance, magnet_mass, CoilSpec, CouplingProfile, DriveSignal, MagnetSpec,
    TorqueConstant, Waveform,
};
use crate::aero::{AeroConfig, DragFit, LiftFit};
use crate::dynamics::{SettleCriterion, SimConfig};
use crate::error::{invalid, DesignError};
use crate::materials::{MaterialDb, MaterialOverride};
use crate::spring::{
    calibrate_topology_factor, effective_inertia_from_resonance, stiffness_from_resonance,
    OscillatorSpec, SpringConstraints, SpringSpec,
};
use crate::units::{parse_quantity, Dimension, STANDARD_GRAVITY};
use crate::wing::{FlexureSpec, PitchStopSpec, WingSpec};

/// Canonical configuration describing the device as built.
pub const DEVICE_JSON: &str = include_str!("../data/device.json");

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Version(u32),
    #[error(transparent)]
    Invalid(#[from] DesignError),
}

pub trait Dim {
    const DIM: Dimension;
}

macro_rules! dims {
    ($($name:ident),* $(,)?) => {
        /// Marker types naming the dimension a config field must carry.
        pub mod dim {
            use super::Dim;
            use crate::units::Dimension;
            $(
                #[derive(Debug, Clone, Copy, PartialEq)]
                pub struct $name;
                impl Dim for $name {
                    const DIM: Dimension = Dimension::$name;
                }
            )*
        }
    };
}

dims!(
    Dimensionless,
    Mass,
    Length,
    Frequency,
    Angle,
    Force,
    TorsionalStiffness,
    Inertia,
    Time,
    Voltage,
    Resistance,
    Pressure,
    Density,
    Resistivity,
    SpecificPower,
    TorqueConstant,
    Power,
    Torque,
);

/// SI value parsed from a unit-suffixed string of dimension `D`.
#[derive(Clone, Copy, PartialEq)]
pub struct Qty<D: Dim> {
    pub si: f64,
    _dim: PhantomData<D>,
}

impl<D: Dim> Qty<D> {
    pub fn new(si: f64) -> Self {
        Self {
            si,
            _dim: PhantomData,
        }
    }
}

impl<D: Dim> fmt::Debug for Qty<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({})", D::DIM, self.si)
    }
}

impl<'de, D: Dim> Deserialize<'de> for Qty<D> {
    fn deserialize<De: Deserializer<'de>>(d: De) -> Result<Self, De::Error> {
        struct V<D>(PhantomData<D>);
        impl<D: Dim> de::Visitor<'_> for V<D> {
            type Value = Qty<D>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a string with a {:?} unit suffix", D::DIM)
            }
            fn visit_str<E: de::Error>(self, s: &str) -> Result<Qty<D>, E> {
                parse_quantity(s, D::DIM)
                    .map(|q| Qty::new(q.value))
                    .map_err(E::custom)
            }
        }
        d.deserialize_str(V(PhantomData))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialRaw {
    elastic_modulus: Option<Qty<dim::Pressure>>,
    density: Option<Qty<dim::Density>>,
    resistivity: Option<Qty<dim::Resistivity>>,
    stock_thickness: Option<Qty<dim::Length>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MagnetRaw {
    material: String,
    height: Qty<dim::Length>,
    diameter: Qty<dim::Length>,
    /// Weighed mass; overrides the geometric estimate when present.
    mass: Option<Qty<dim::Mass>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoilRaw {
    material: String,
    wire_diameter: Qty<dim::Length>,
    layers: u32,
    turns_per_layer: u32,
    inner_diameter: Qty<dim::Length>,
    height: Qty<dim::Length>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpringBoundsRaw {
    width: [Qty<dim::Length>; 2],
    length: [Qty<dim::Length>; 2],
    n_beams: [u32; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpringRaw {
    material: String,
    n_beams: u32,
    beam_length: Qty<dim::Length>,
    beam_width: Qty<dim::Length>,
    beam_thickness: Qty<dim::Length>,
    /// Omitted: calibrated so the listed beams give `design_stiffness`.
    topology_factor: Option<f64>,
    design_stiffness: Qty<dim::TorsionalStiffness>,
    arc_radius: Qty<dim::Length>,
    target_frequency: Qty<dim::Frequency>,
    design_bounds: SpringBoundsRaw,
}

/// How the stroke oscillator is reconciled with the observed resonance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// Keep the design stiffness and infer the inertia.
    FixStiffness,
    /// Keep magnet plus extra inertia and infer the stiffness.
    FixInertia,
    /// Design stiffness with magnet plus extra inertia; ignore the observation.
    PointMass,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OscillatorRaw {
    closure: Closure,
    observed_resonance: Qty<dim::Frequency>,
    #[serde(default)]
    extra_inertia: Option<Qty<dim::Inertia>>,
    damping_ratio: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WingRaw {
    length: Qty<dim::Length>,
    aspect_ratio: f64,
    mass: Qty<dim::Mass>,
    n_veins: u32,
    vein_width: Qty<dim::Length>,
    membrane_thickness: Qty<dim::Length>,
    adhesive_thickness: Qty<dim::Length>,
    cop_distance: Qty<dim::Length>,
    #[serde(default)]
    leading_edge_mass_fraction: f64,
    #[serde(default)]
    root_offset: Option<Qty<dim::Length>>,
    #[serde(default)]
    pitch_misalignment: Option<Qty<dim::Angle>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlexureRaw {
    material: String,
    total_width: Qty<dim::Length>,
    length: Qty<dim::Length>,
    thickness: Qty<dim::Length>,
    n_parts: u32,
    damping_ratio: f64,
    max_deflection: Qty<dim::Angle>,
    design_average_lift: Qty<dim::Force>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StopsRaw {
    #[serde(default = "yes")]
    enabled: bool,
    positive_limit: Qty<dim::Angle>,
    negative_limit: Qty<dim::Angle>,
    restitution: f64,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitRaw {
    offset: f64,
    amplitude: f64,
    gain: f64,
    phase: Qty<dim::Angle>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AeroRaw {
    #[serde(default = "yes")]
    enabled: bool,
    air_density: Qty<dim::Density>,
    lift: FitRaw,
    drag: FitRaw,
    n_blade_elements: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriveRaw {
    waveform: Waveform,
    amplitude: Qty<dim::Voltage>,
    frequency: Qty<dim::Frequency>,
    target_stroke: Qty<dim::Angle>,
    torque_constant: Option<Qty<dim::TorqueConstant>>,
    resistance: Option<Qty<dim::Resistance>>,
    #[serde(default)]
    coupling: CouplingProfile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SettleRaw {
    drift: f64,
    window: usize,
    min_cycles: usize,
    max_cycles: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulationRaw {
    dt: Qty<dim::Time>,
    cycles: usize,
    settle: Option<SettleRaw>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRaw {
    coil: Qty<dim::Mass>,
    magnet: Qty<dim::Mass>,
    spring: Qty<dim::Mass>,
    d_frame: Qty<dim::Mass>,
    wing: Qty<dim::Mass>,
    net: Qty<dim::Mass>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeratingRaw {
    lift_factor: f64,
    power_factor: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BudgetRaw {
    table: TableRaw,
    d_frame_mass: Qty<dim::Mass>,
    vehicle_mass: Qty<dim::Mass>,
    wings: u32,
    specific_power: Qty<dim::SpecificPower>,
    derating: DeratingRaw,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceRaw {
    magnet_mass: Qty<dim::Mass>,
    required_stiffness: Qty<dim::TorsionalStiffness>,
    max_aero_torque: Qty<dim::Torque>,
    flexure_width: Qty<dim::Length>,
    coil_resistance: Qty<dim::Resistance>,
    joule_power: Qty<dim::Power>,
    specific_power_1mg: Qty<dim::Power>,
    mechanical_power: Qty<dim::Power>,
    lift: Qty<dim::Mass>,
    efficiency: Qty<dim::Dimensionless>,
    muscle_efficiency: Qty<dim::Dimensionless>,
    stroke_amplitude: Qty<dim::Angle>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectRaw {
    schema_version: u32,
    #[serde(default)]
    materials: BTreeMap<String, MaterialRaw>,
    magnet: MagnetRaw,
    coil: CoilRaw,
    spring: SpringRaw,
    oscillator: OscillatorRaw,
    wing: WingRaw,
    flexure: FlexureRaw,
    stops: StopsRaw,
    aero: AeroRaw,
    drive: DriveRaw,
    simulation: SimulationRaw,
    budget: BudgetRaw,
    reference: ReferenceRaw,
    #[serde(default)]
    output_dir: Option<String>,
}

/// Inputs to the spring sizing flow.
#[derive(Debug, Clone, PartialEq)]
pub struct SpringTargets {
    pub design_stiffness: f64,
    pub arc_radius: f64,
    pub target_frequency: f64,
    pub constraints: SpringConstraints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlexureTargets {
    pub max_deflection: f64,
    pub design_average_lift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derating {
    pub lift_factor: f64,
    pub power_factor: f64,
}

impl Default for Derating {
    fn default() -> Self {
        Self {
            lift_factor: 0.6,
            power_factor: 1.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetInputs {
    /// Component masses as printed, in table order.
    pub table: Vec<(String, f64)>,
    pub table_net: f64,
    pub d_frame_mass: f64,
    pub vehicle_mass: f64,
    pub wings: u32,
    pub specific_power: f64,
    pub derating: Derating,
}

/// Published figures the report compares against (SI).
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub magnet_mass: f64,
    pub required_stiffness: f64,
    pub max_aero_torque: f64,
    pub flexure_width: f64,
    pub coil_resistance: f64,
    pub joule_power: f64,
    pub specific_power_1mg: f64,
    pub mechanical_power: f64,
    /// kg of lift (mass-force)
    pub lift: f64,
    pub efficiency: f64,
    pub muscle_efficiency: f64,
    pub stroke_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationControls {
    pub dt: f64,
    pub cycles: usize,
    pub settle: SettleCriterion,
}

/// A fully resolved project: SI values, materials looked up, closures
/// applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Project {
    pub materials: MaterialDb,
    pub magnet: MagnetSpec,
    /// Mass used for sizing and the oscillator point mass.
    pub magnet_mass: f64,
    pub coil: CoilSpec,
    pub spring: SpringSpec,
    /// True when the topology factor was fitted rather than given.
    pub topology_calibrated: bool,
    pub spring_targets: SpringTargets,
    pub closure: Closure,
    pub observed_resonance: f64,
    pub oscillator: OscillatorSpec,
    pub wing: WingSpec,
    pub pitch_misalignment: f64,
    pub flexure: FlexureSpec,
    pub flexure_targets: FlexureTargets,
    pub stops: PitchStopSpec,
    pub aero: AeroConfig,
    pub drive: DriveSignal,
    pub coupling: CouplingProfile,
    pub target_stroke: f64,
    pub torque_constant: Option<f64>,
    pub coil_resistance: f64,
    /// True when the resistance comes from the winding geometry.
    pub resistance_from_geometry: bool,
    pub simulation: SimulationControls,
    pub budget: BudgetInputs,
    pub reference: Reference,
    pub output_dir: PathBuf,
    /// Hex SHA-256 of the config text.
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Project {
    /// The built-in configuration of the device as built.
    pub fn device() -> Self {
        Self::from_json(DEVICE_JSON).expect("built-in config is valid")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: ProjectRaw =
            serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Version(raw.schema_version));
        }
        resolve(raw, sha256_hex(text.as_bytes()))
    }

    /// Simulator settings; `k_t` falls back to the configured constant or 0.
    pub fn sim_config(&self, k_t: Option<f64>) -> SimConfig {
        SimConfig {
            oscillator: self.oscillator,
            wing: self.wing.clone(),
            flexure: self.flexure.clone(),
            stops: self.stops,
            aero: self.aero,
            drive: self.drive,
            k_t: TorqueConstant(k_t.or(self.torque_constant).unwrap_or(0.0)),
            coupling: self.coupling,
            coil_resistance: self.coil_resistance,
            dt: self.simulation.dt,
            pitch_misalignment: self.pitch_misalignment,
        }
    }

    /// Mass-force expressed in newtons.
    pub fn weight(mass: f64) -> f64 {
        mass * STANDARD_GRAVITY
    }
}

fn resolve(raw: ProjectRaw, sha256: String) -> Result<Project, ConfigError> {
    let mut materials = MaterialDb::builtin();
    for (name, m) in &raw.materials {
        let ov = MaterialOverride {
            elastic_modulus: m.elastic_modulus.map(|q| q.si),
            density: m.density.map(|q| q.si),
            resistivity: m.resistivity.map(|q| q.si),
            stock_thickness: m.stock_thickness.map(|q| q.si),
        };
        materials.apply(name, &ov)?;
    }

    let magnet = MagnetSpec {
        height: raw.magnet.height.si,
        diameter: raw.magnet.diameter.si,
        material: materials.get(&raw.magnet.material)?.clone(),
    };
    magnet.validate()?;

    let c = &raw.coil;
    let coil = CoilSpec {
        wire_diameter: c.wire_diameter.si,
        layers: c.layers,
        turns_per_layer: c.turns_per_layer,
        inner_diameter: c.inner_diameter.si,
        height: c.height.si,
        material: materials.get(&c.material)?.clone(),
    };
    coil.validate()?;

    let s = &raw.spring;
    let mut spring = SpringSpec {
        n_beams: s.n_beams,
        beam_length: s.beam_length.si,
        beam_width: s.beam_width.si,
        beam_thickness: s.beam_thickness.si,
        material: materials.get(&s.material)?.clone(),
        topology_factor: s.topology_factor.unwrap_or(1.0),
    };
    if s.topology_factor.is_none() {
        spring.topology_factor = calibrate_topology_factor(&spring, s.design_stiffness.si);
    }
    spring.validate()?;
    let b = &s.design_bounds;
    let spring_targets = SpringTargets {
        design_stiffness: s.design_stiffness.si,
        arc_radius: s.arc_radius.si,
        target_frequency: s.target_frequency.si,
        constraints: SpringConstraints {
            thickness: s.beam_thickness.si,
            width: (b.width[0].si, b.width[1].si),
            length: (b.length[0].si, b.length[1].si),
            n_beams: (b.n_beams[0], b.n_beams[1]),
            topology_factor: spring.topology_factor,
        },
    };

    let o = &raw.oscillator;
    let m_magnet = raw
        .magnet
        .mass
        .map(|q| q.si)
        .unwrap_or_else(|| magnet_mass(&magnet).value);
    let r = spring_targets.arc_radius;
    let extra = o.extra_inertia.map(|q| q.si).unwrap_or(0.0);
    let bare = m_magnet * r * r;
    let (k, inertia) = match o.closure {
        Closure::FixStiffness => {
            let k = spring_targets.design_stiffness;
            (
                k,
                effective_inertia_from_resonance(k, o.observed_resonance.si)?.value,
            )
        }
        Closure::FixInertia => {
            let i = bare + extra;
            (
                stiffness_from_resonance(i, o.observed_resonance.si)?.value,
                i,
            )
        }
        Closure::PointMass => (spring_targets.design_stiffness, bare + extra),
    };
    let oscillator = OscillatorSpec {
        stiffness: k,
        inertia,
        arc_radius: r,
        point_mass: m_magnet,
        damping_ratio: o.damping_ratio,
    };
    oscillator.validate()?;

    let w = &raw.wing;
    let wing = WingSpec {
        length: w.length.si,
        aspect_ratio: w.aspect_ratio,
        mass: w.mass.si,
        n_veins: w.n_veins,
        vein_width: w.vein_width.si,
        membrane_thickness: w.membrane_thickness.si,
        adhesive_thickness: w.adhesive_thickness.si,
        cop_distance: w.cop_distance.si,
        leading_edge_mass_fraction: w.leading_edge_mass_fraction,
        root_offset: w.root_offset.map(|q| q.si).unwrap_or(0.0),
    };
    wing.validate()?;

    let f = &raw.flexure;
    let flexure = FlexureSpec {
        total_width: f.total_width.si,
        length: f.length.si,
        thickness: f.thickness.si,
        n_parts: f.n_parts,
        material: materials.get(&f.material)?.clone(),
        damping_ratio: f.damping_ratio,
    };
    flexure.validate()?;
    if !(f.max_deflection.si > 0.0 && f.design_average_lift.si >= 0.0) {
        return Err(invalid(
            "flexure",
            "max_deflection must be > 0 and design_average_lift >= 0",
        )
        .into());
    }

    let stops = PitchStopSpec {
        positive_limit: raw.stops.positive_limit.si,
        negative_limit: raw.stops.negative_limit.si.abs(),
        restitution: raw.stops.restitution,
        enabled: raw.stops.enabled,
    };
    stops.validate()?;

    let fit = |r: &FitRaw| (r.offset, r.amplitude, r.gain, r.phase.si.to_degrees());
    let (lo, la, lg, lp) = fit(&raw.aero.lift);
    let (d_o, da, dg, dp) = fit(&raw.aero.drag);
    let aero = AeroConfig {
        enabled: raw.aero.enabled,
        air_density: raw.aero.air_density.si,
        lift: LiftFit {
            offset: lo,
            amplitude: la,
            gain: lg,
            phase_deg: lp,
        },
        drag: DragFit {
            offset: d_o,
            amplitude: da,
            gain: dg,
            phase_deg: dp,
        },
        n_blade_elements: raw.aero.n_blade_elements,
    };
    aero.validate()?;

    let d = &raw.drive;
    let drive = DriveSignal {
        waveform: d.waveform,
        amplitude: d.amplitude.si,
        frequency: d.frequency.si,
    };
    drive.validate()?;
    let resistance_from_geometry = d.resistance.is_none();
    let coil_r = match d.resistance {
        Some(q) => q.si,
        None => coil_resistance(&coil)?.value,
    };

    let sim = &raw.simulation;
    if sim.cycles == 0 {
        return Err(invalid("simulation", "cycles must be >= 1").into());
    }
    let settle = match &sim.settle {
        Some(s) => SettleCriterion {
            drift: s.drift,
            window: s.window,
            min_cycles: s.min_cycles,
            max_cycles: s.max_cycles,
        },
        None => SettleCriterion::default(),
    };

    let bu = &raw.budget;
    let t = &bu.table;
    let budget = BudgetInputs {
        table: vec![
            ("coil".into(), t.coil.si),
            ("magnet".into(), t.magnet.si),
            ("spring".into(), t.spring.si),
            ("d_frame".into(), t.d_frame.si),
            ("wing".into(), t.wing.si),
        ],
        table_net: t.net.si,
        d_frame_mass: bu.d_frame_mass.si,
        vehicle_mass: bu.vehicle_mass.si,
        wings: bu.wings.max(1),
        specific_power: bu.specific_power.si,
        derating: Derating {
            lift_factor: bu.derating.lift_factor,
            power_factor: bu.derating.power_factor,
        },
    };

    let rf = &raw.reference;
    let reference = Reference {
        magnet_mass: rf.magnet_mass.si,
        required_stiffness: rf.required_stiffness.si,
        max_aero_torque: rf.max_aero_torque.si,
        flexure_width: rf.flexure_width.si,
        coil_resistance: rf.coil_resistance.si,
        joule_power: rf.joule_power.si,
        specific_power_1mg: rf.specific_power_1mg.si,
        mechanical_power: rf.mechanical_power.si,
        lift: rf.lift.si,
        efficiency: rf.efficiency.si,
        muscle_efficiency: rf.muscle_efficiency.si,
        stroke_amplitude: rf.stroke_amplitude.si,
    };

    let project = Project {
        materials,
        magnet,
        magnet_mass: m_magnet,
        coil,
        spring,
        topology_calibrated: s.topology_factor.is_none(),
        spring_targets,
        closure: o.closure,
        observed_resonance: o.observed_resonance.si,
        oscillator,
        wing,
        pitch_misalignment: w.pitch_misalignment.map(|q| q.si).unwrap_or(0.0),
        flexure,
        flexure_targets: FlexureTargets {
            max_deflection: f.max_deflection.si,
            design_average_lift: f.design_average_lift.si,
        },
        stops,
        aero,
        drive,
        coupling: d.coupling,
        target_stroke: d.target_stroke.si,
        torque_constant: d.torque_constant.map(|q| q.si),
        coil_resistance: coil_r,
        resistance_from_geometry,
        simulation: SimulationControls {
            dt: sim.dt.si,
            cycles: sim.cycles,
            settle,
        },
        budget,
        reference,
        output_dir: PathBuf::from(raw.output_dir.as_deref().unwrap_or("flapkit-out")),
        sha256,
    };
    project
        .sim_config(None)
        .validate()
        .map_err(|e| ConfigError::Invalid(DesignError::Dynamics(e)))?;
    Ok(project)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_config_loads() {
        let p = Project::device();
        assert_eq!(p.spring.n_beams, 16);
        assert!((p.oscillator.stiffness - 0.8e-6).abs() < 1e-15);
        assert!((p.oscillator.natural_frequency() - 132.3).abs() < 1e-9);
        assert!((p.drive.amplitude - 0.07).abs() < 1e-15);
        assert!(p.topology_calibrated);
        assert_eq!(p.sha256.len(), 64);
    }

    #[test]
    fn hash_tracks_content() {
        let a = Project::from_json(DEVICE_JSON).unwrap();
        let edited = DEVICE_JSON.replacen("\"cycles\": 200", "\"cycles\": 201", 1);
        let b = Project::from_json(&edited).unwrap();
        assert_ne!(a.sha256, b.sha256);
    }

    #[test]
    fn malformed_unit_reports_path() {
        let bad = DEVICE_JSON.replacen(
            "\"target_frequency\": \"130Hz\"",
            "\"target_frequency\": \"130 Hzz\"",
            1,
        );
        assert_ne!(bad, DEVICE_JSON);
        match Project::from_json(&bad) {
            Err(ConfigError::Schema { path, .. }) => assert_eq!(path, "spring.target_frequency"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bare_numbers_need_units() {
        let bad = DEVICE_JSON.replacen("\"arc_radius\": \"1.4mm\"", "\"arc_radius\": 0.0014", 1);
        assert!(matches!(
            Project::from_json(&bad),
            Err(ConfigError::Schema { .. })
        ));
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = DEVICE_JSON.replacen(
            "\"schema_version\": 1,",
            "\"schema_version\": 1, \"colour\": \"red\",",
            1,
        );
        match Project::from_json(&bad) {
            Err(ConfigError::Schema { message, .. }) => assert!(message.contains("colour")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn closures_agree_on_frequency() {
        for closure in ["fix_inertia", "fix_stiffness"] {
            let text = DEVICE_JSON.replacen("\"fix_stiffness\"", &format!("\"{closure}\""), 1);
            let p = Project::from_json(&text).unwrap();
            assert!(
                (p.oscillator.natural_frequency() - 132.3).abs() < 1e-9,
                "{closure}"
            );
        }
    }

    #[test]
    fn material_override_applies() {
        let text = DEVICE_JSON.replacen(
            "\"materials\": {}",
            "\"materials\": {\"copper\": {\"resistivity\": \"3.36e-8ohm*m\"}}",
            1,
        );
        let p = Project::from_json(&text).unwrap();
        let base = Project::device();
        assert!((p.coil_resistance / base.coil_resistance - 2.0).abs() < 1e-12);
    }
}
