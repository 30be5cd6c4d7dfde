//! Driven stroke oscillator coupled to a passive pitch hinge with hard stops.
//!
//! ```text
//!   I·φ̈  = k_t·w(φ)·V/R − k·φ − c·φ̇ − τ_aero,stroke
//!   Iₚ·ψ̈ = −k_f·(ψ − ψ₀) − cₚ·ψ̇ + τ_aero,pitch
//! ```
//!
//! Integration is fixed-step RK4 with an even number of steps per drive
//! period, so square-wave edges fall on step boundaries and half-cycles are
//! exact. Energy flows are carried as extra integrator states, which makes
//! the per-cycle audit an identity up to truncation error.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actuator::{CouplingProfile, DriveSignal, TorqueConstant, Waveform};
use crate::aero::{cycle_average, AeroConfig, BladeModel, LoadSample};
use crate::error::{DesignError, DynamicsError};
use crate::optimize::golden_section_max;
use crate::spring::OscillatorSpec;
use crate::units::Quantity;
use crate::wing::{flexure_stiffness, wing_pitch_inertia, FlexureSpec, PitchStopSpec, WingSpec};

/// Stroke excursion treated as divergence (rad).
pub const STROKE_GUARD: f64 = FRAC_PI_2;
/// Allowed pitch overshoot past a stop (rad).
pub const STOP_PENETRATION_TOLERANCE: f64 = 0.1 * PI / 180.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub time: f64,
    pub stroke_angle: f64,
    pub stroke_rate: f64,
    pub pitch_angle: f64,
    pub pitch_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub oscillator: OscillatorSpec,
    pub wing: WingSpec,
    pub flexure: FlexureSpec,
    pub stops: PitchStopSpec,
    pub aero: AeroConfig,
    pub drive: DriveSignal,
    pub k_t: TorqueConstant,
    #[serde(default)]
    pub coupling: CouplingProfile,
    pub coil_resistance: f64,
    /// Requested step; the integrator uses the largest step not above this
    /// that divides the period into an even count.
    pub dt: f64,
    /// Neutral angle of the flexure (rad), from assembly misalignment.
    #[serde(default)]
    pub pitch_misalignment: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let cfg = |e: DesignError| DynamicsError::Config(e.to_string());
        self.oscillator.validate().map_err(cfg)?;
        self.wing.validate().map_err(cfg)?;
        self.flexure.validate().map_err(cfg)?;
        if self.stops.enabled {
            self.stops.validate().map_err(cfg)?;
        }
        if self.aero.enabled {
            self.aero.validate().map_err(cfg)?;
        }
        self.drive.validate().map_err(cfg)?;
        if !(self.k_t.0 >= 0.0) {
            return Err(DynamicsError::Config("torque constant must be >= 0".into()));
        }
        if !(self.coil_resistance > 0.0) {
            return Err(DynamicsError::Config("coil resistance must be > 0".into()));
        }
        let max_dt = self.max_dt();
        if !(self.dt > 0.0) || self.dt > max_dt * (1.0 + 1e-9) {
            return Err(DynamicsError::Config(format!(
                "dt = {:.3e} s must be in (0, {max_dt:.3e}] for a {} Hz drive",
                self.dt, self.drive.frequency
            )));
        }
        if !(self.pitch_misalignment.abs() < FRAC_PI_2) {
            return Err(DynamicsError::Config(
                "pitch misalignment must be within ±90 deg".into(),
            ));
        }
        Ok(())
    }

    /// Coarsest step accepted at the current drive frequency.
    pub fn max_dt(&self) -> f64 {
        1.0 / (1000.0 * self.drive.frequency)
    }

    pub fn steps_per_cycle(&self) -> usize {
        let n = (self.drive.period() / self.dt - 1e-9).ceil().max(2.0) as usize;
        n + n % 2
    }

    pub fn effective_dt(&self) -> f64 {
        self.drive.period() / self.steps_per_cycle() as f64
    }

    pub fn pitch_inertia(&self) -> f64 {
        wing_pitch_inertia(&self.wing).value
    }

    pub fn flexure_stiffness(&self) -> f64 {
        flexure_stiffness(&self.flexure).value
    }

    /// Same config with aerodynamics and stops switched off: a linear
    /// single-degree-of-freedom stroke oscillator.
    pub fn linearized(&self) -> Self {
        Self {
            aero: AeroConfig {
                enabled: false,
                ..self.aero
            },
            stops: PitchStopSpec {
                enabled: false,
                ..self.stops
            },
            ..self.clone()
        }
    }

    /// Retuned to drive frequency `f`, tightening `dt` if the faster drive
    /// needs it.
    pub fn at_frequency(&self, f: f64) -> Self {
        let mut c = self.clone();
        c.drive.frequency = f;
        c.dt = c.dt.min(c.max_dt());
        c
    }
}

/// When a run counts as steady: the per-cycle stroke amplitude stays within
/// a relative band of `drift` for `window` consecutive cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettleCriterion {
    pub drift: f64,
    pub window: usize,
    pub min_cycles: usize,
    pub max_cycles: usize,
}

impl Default for SettleCriterion {
    fn default() -> Self {
        Self {
            drift: 0.005,
            window: 10,
            min_cycles: 20,
            max_cycles: 1000,
        }
    }
}

impl SettleCriterion {
    /// Tight settling for calibration and resonance search, where amplitude
    /// differences of a fraction of a percent matter.
    pub fn tight() -> Self {
        Self {
            drift: 1e-5,
            window: 10,
            min_cycles: 30,
            max_cycles: 4000,
        }
    }
}

// y = [φ, φ̇, ψ, ψ̇, E_joule, E_drive, E_damping, E_aero]
const NY: usize = 8;
type Y = [f64; NY];

#[derive(Debug, Clone)]
struct Model {
    stiffness: f64,
    inertia: f64,
    damping: f64,
    flex_k: f64,
    pitch_inertia: f64,
    pitch_damping: f64,
    neutral: f64,
    blade: BladeModel,
    drive: DriveSignal,
    k_t: f64,
    coupling: CouplingProfile,
    resistance: f64,
    stops: PitchStopSpec,
    dt: f64,
    steps_per_cycle: usize,
}

impl Model {
    fn new(cfg: &SimConfig) -> Result<Self, DynamicsError> {
        cfg.validate()?;
        let flex_k = cfg.flexure_stiffness();
        let pitch_inertia = cfg.pitch_inertia();
        Ok(Self {
            stiffness: cfg.oscillator.stiffness,
            inertia: cfg.oscillator.inertia,
            damping: cfg.oscillator.damping_coefficient(),
            flex_k,
            pitch_inertia,
            pitch_damping: 2.0 * cfg.flexure.damping_ratio * (flex_k * pitch_inertia).sqrt(),
            neutral: cfg.pitch_misalignment,
            blade: BladeModel::new(&cfg.wing, &cfg.aero),
            drive: cfg.drive,
            k_t: cfg.k_t.0,
            coupling: cfg.coupling,
            resistance: cfg.coil_resistance,
            stops: cfg.stops,
            dt: cfg.effective_dt(),
            steps_per_cycle: cfg.steps_per_cycle(),
        })
    }

    fn period(&self) -> f64 {
        self.dt * self.steps_per_cycle as f64
    }

    fn drive_torque(&self, stroke: f64, v: f64) -> f64 {
        self.k_t * self.coupling.weight(stroke) * v / self.resistance
    }

    fn deriv(&self, y: &Y, v: f64) -> Y {
        let [phi, w, psi, q, ..] = *y;
        let loads = self.blade.loads(w, psi);
        let tau_d = self.drive_torque(phi, v);
        let acc_s =
            (tau_d - self.stiffness * phi - self.damping * w - loads.stroke_torque) / self.inertia;
        let acc_p = (-self.flex_k * (psi - self.neutral) - self.pitch_damping * q
            + loads.pitch_torque)
            / self.pitch_inertia;
        [
            w,
            acc_s,
            q,
            acc_p,
            v * v / self.resistance,
            tau_d * w,
            self.damping * w * w + self.pitch_damping * q * q,
            loads.stroke_torque * w - loads.pitch_torque * q,
        ]
    }

    /// Voltage seen by an RK4 stage at `t` within the step starting at `t0`.
    /// Square waves are held at their mid-step value.
    fn stage_voltage(&self, t0: f64, t: f64) -> f64 {
        match self.drive.waveform {
            Waveform::Square => self.drive.voltage_at(t0 + 0.5 * self.dt),
            Waveform::Sine => self.drive.voltage_at(t),
        }
    }

    fn mechanical_energy(&self, y: &Y) -> f64 {
        let [phi, w, psi, q, ..] = *y;
        0.5 * self.inertia * w * w
            + 0.5 * self.stiffness * phi * phi
            + 0.5 * self.pitch_inertia * q * q
            + 0.5 * self.flex_k * (psi - self.neutral).powi(2)
    }

    /// Clamp pitch to the stops. Returns the energy the collision removed.
    fn resolve_stops(&self, y: &mut Y) -> f64 {
        if !self.stops.enabled {
            return 0.0;
        }
        let (hi, lo) = (self.stops.positive_limit, -self.stops.negative_limit);
        let (psi, q) = (y[2], y[3]);
        let (limit, into) = if psi > hi {
            (hi, q > 0.0)
        } else if psi < lo {
            (lo, q < 0.0)
        } else {
            return 0.0;
        };
        let before = self.mechanical_energy(y);
        y[2] = limit;
        if into {
            y[3] = -self.stops.restitution * q;
        }
        before - self.mechanical_energy(y)
    }
}

#[derive(Debug, Clone)]
struct Integrator {
    y: Y,
    step: u64,
    stop_loss: f64,
}

impl Integrator {
    fn new(model: &Model, initial: &SimState) -> Self {
        let mut y = [0.0; NY];
        y[0] = initial.stroke_angle;
        y[1] = initial.stroke_rate;
        y[2] = initial.pitch_angle;
        y[3] = initial.pitch_rate;
        let mut s = Self {
            y,
            step: 0,
            stop_loss: 0.0,
        };
        s.stop_loss += model.resolve_stops(&mut s.y);
        s
    }

    fn time(&self, model: &Model, t_offset: f64) -> f64 {
        t_offset + self.step as f64 * model.dt
    }

    /// One RK4 step; returns the voltage held over the step.
    fn advance(&mut self, m: &Model, t_offset: f64) -> Result<f64, DynamicsError> {
        let h = m.dt;
        let t0 = self.time(m, t_offset);
        let y = &self.y;
        let add = |a: &Y, k: &Y, s: f64| -> Y {
            let mut o = *a;
            for i in 0..NY {
                o[i] += s * k[i];
            }
            o
        };
        let k1 = m.deriv(y, m.stage_voltage(t0, t0));
        let k2 = m.deriv(&add(y, &k1, 0.5 * h), m.stage_voltage(t0, t0 + 0.5 * h));
        let k3 = m.deriv(&add(y, &k2, 0.5 * h), m.stage_voltage(t0, t0 + 0.5 * h));
        let k4 = m.deriv(&add(y, &k3, h), m.stage_voltage(t0, t0 + h));
        let mut next = *y;
        for i in 0..NY {
            next[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        self.stop_loss += m.resolve_stops(&mut next);
        let bad = next.iter().any(|v| !v.is_finite());
        if bad || next[0].abs() > STROKE_GUARD || next[2].abs() >= FRAC_PI_2 {
            let last_valid = self.state(m, t_offset);
            self.step += 1;
            return Err(DynamicsError::Divergence {
                time: self.time(m, t_offset),
                stroke: next[0],
                pitch: next[2],
                last_valid,
            });
        }
        self.step += 1;
        self.y = next;
        Ok(m.stage_voltage(t0, t0 + 0.5 * h))
    }

    fn state(&self, m: &Model, t_offset: f64) -> SimState {
        SimState {
            time: self.time(m, t_offset),
            stroke_angle: self.y[0],
            stroke_rate: self.y[1],
            pitch_angle: self.y[2],
            pitch_rate: self.y[3],
        }
    }
}

/// Advance `state` by one step of the configured integrator.
pub fn step(state: &SimState, cfg: &SimConfig) -> Result<SimState, DynamicsError> {
    let m = Model::new(cfg)?;
    let mut it = Integrator::new(&m, state);
    it.advance(&m, state.time)?;
    Ok(it.state(&m, state.time))
}

/// One row of a simulated time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub stroke_angle: f64,
    pub stroke_rate: f64,
    pub pitch_angle: f64,
    pub pitch_rate: f64,
    pub lift: f64,
    pub drag: f64,
    pub tau_drive: f64,
    /// Electrical input `V²/R + τ_drive·φ̇` (W).
    pub p_elec: f64,
    /// Net mechanical power delivered to the air (W).
    pub p_aero: f64,
}

impl Sample {
    pub const CSV_HEADER: [&'static str; 10] = [
        "t",
        "stroke_angle",
        "stroke_rate",
        "pitch_angle",
        "pitch_rate",
        "lift",
        "drag",
        "tau_drive",
        "P_elec",
        "P_aero",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.t,
            self.stroke_angle,
            self.stroke_rate,
            self.pitch_angle,
            self.pitch_rate,
            self.lift,
            self.drag,
            self.tau_drive,
            self.p_elec,
            self.p_aero,
        ]
    }
}

fn sample(m: &Model, it: &Integrator, v: f64) -> Sample {
    let [phi, w, psi, q, ..] = it.y;
    let loads = m.blade.loads(w, psi);
    let tau = m.drive_torque(phi, v);
    Sample {
        t: it.time(m, 0.0),
        stroke_angle: phi,
        stroke_rate: w,
        pitch_angle: psi,
        pitch_rate: q,
        lift: loads.lift,
        drag: loads.drag,
        tau_drive: tau,
        p_elec: v * v / m.resistance + tau * w,
        p_aero: loads.stroke_torque * w - loads.pitch_torque * q,
    }
}

/// Energy bookkeeping over one steady cycle (J).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit {
    pub electrical_in: f64,
    pub joule: f64,
    /// Mechanical work delivered by the drive torque.
    pub drive_work: f64,
    pub aero_work: f64,
    pub structural_damping: f64,
    pub stop_loss: f64,
    /// Change in stored kinetic plus elastic energy.
    pub stored_change: f64,
    /// `electrical_in − (joule + aero + damping + stops + stored)` relative
    /// to `electrical_in`.
    pub relative_error: f64,
    /// Same balance restricted to the drive work, relative to it.
    pub mechanical_relative_error: f64,
}

/// Condensed description of one steady cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub frequency: f64,
    pub dt: f64,
    pub cycles: usize,
    pub settled: bool,
    /// Half the peak-to-peak stroke angle (rad).
    pub stroke_amplitude: f64,
    pub pitch_max: f64,
    pub pitch_min: f64,
    /// Largest |pitch| at the two stroke extremes (rad).
    pub pitch_at_stroke_extremes: f64,
    /// Largest |stroke| at a pitch extremum, as a fraction of the amplitude.
    /// Zero means the extremum sits at mid-stroke.
    pub stroke_at_pitch_extrema: f64,
    /// Pitch sign changes per cycle (1° hysteresis).
    pub pitch_reversals: u32,
    /// Share of the cycle spent resting on a stop.
    pub stop_contact_fraction: f64,
    /// Cycle-mean lift (N).
    pub mean_lift: f64,
    /// Cycle-mean lift if pitch sat at its aerodynamic equilibrium (N).
    pub quasi_static_mean_lift: f64,
    pub mean_electrical_power: f64,
    pub mean_joule_power: f64,
    pub mean_drive_power: f64,
    /// `∫|τ_aero·φ̇|/T` (W).
    pub mean_aero_power: f64,
    pub energy: EnergyAudit,
    /// RMS difference of the normalized state across the recorded cycle.
    pub cycle_mismatch: f64,
    pub final_state: SimState,
}

/// Pitch where the flexure balances the aerodynamic moment at `stroke_rate`,
/// clamped to the stops.
fn quasi_static_pitch(m: &Model, stroke_rate: f64) -> f64 {
    let (mut lo, mut hi) = if m.stops.enabled {
        (-m.stops.negative_limit, m.stops.positive_limit)
    } else {
        (-89f64.to_radians(), 89f64.to_radians())
    };
    let g = |psi: f64| -m.flex_k * (psi - m.neutral) + m.blade.loads(stroke_rate, psi).pitch_torque;
    if g(hi) >= 0.0 {
        return hi;
    }
    if g(lo) <= 0.0 {
        return lo;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

struct CycleRecord {
    samples: Vec<Sample>,
    start: Y,
    end: Y,
    stop_loss: f64,
}

fn record_cycle(
    m: &Model,
    it: &mut Integrator,
    out: Option<&mut Vec<Sample>>,
) -> Result<CycleRecord, DynamicsError> {
    let start = it.y;
    let loss0 = it.stop_loss;
    let mut samples = Vec::with_capacity(m.steps_per_cycle);
    for _ in 0..m.steps_per_cycle {
        let v = it.advance(m, 0.0)?;
        samples.push(sample(m, it, v));
    }
    if let Some(o) = out {
        o.extend_from_slice(&samples);
    }
    Ok(CycleRecord {
        samples,
        start,
        end: it.y,
        stop_loss: it.stop_loss - loss0,
    })
}

fn amplitude_of(samples: &[Sample]) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in samples {
        lo = lo.min(s.stroke_angle);
        hi = hi.max(s.stroke_angle);
    }
    0.5 * (hi - lo)
}

/// Vertex of the parabola through three equally spaced samples.
fn parabolic_peak(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den.abs() < f64::MIN_POSITIVE {
        return b;
    }
    b - 0.125 * (c - a).powi(2) / den
}

fn refined_amplitude(samples: &[Sample]) -> f64 {
    let n = samples.len();
    let at = |i: usize| samples[i % n].stroke_angle;
    let imax = (0..n).max_by(|&a, &b| at(a).total_cmp(&at(b))).unwrap_or(0);
    let imin = (0..n).min_by(|&a, &b| at(a).total_cmp(&at(b))).unwrap_or(0);
    let hi = parabolic_peak(at(imax + n - 1), at(imax), at(imax + 1));
    let lo = -parabolic_peak(-at(imin + n - 1), -at(imin), -at(imin + 1));
    0.5 * (hi - lo)
}

/// Index at the centre of the plateau around an extremum of `values`.
fn plateau_centre(values: &[f64], target: f64, band: f64) -> usize {
    let n = values.len();
    let (mut sx, mut sy) = (0.0, 0.0);
    for (i, v) in values.iter().enumerate() {
        if (v - target).abs() <= band {
            let th = 2.0 * PI * i as f64 / n as f64;
            sx += th.cos();
            sy += th.sin();
        }
    }
    let th = sy.atan2(sx).rem_euclid(2.0 * PI);
    ((th / (2.0 * PI) * n as f64).round() as usize) % n
}

fn analyse(
    m: &Model,
    rec: &CycleRecord,
    cycles: usize,
    settled: bool,
) -> Result<SteadyState, DynamicsError> {
    let s = &rec.samples;
    let n = s.len();
    let period = m.period();
    let amplitude = refined_amplitude(s);

    let pitch: Vec<f64> = s.iter().map(|x| x.pitch_angle).collect();
    let pitch_max = pitch.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pitch_min = pitch.iter().cloned().fold(f64::INFINITY, f64::min);
    let stroke_at = |i: usize| s[i].stroke_angle.abs() / amplitude.max(f64::MIN_POSITIVE);
    let band = 0.1f64.to_radians();
    let stroke_at_pitch_extrema = stroke_at(plateau_centre(&pitch, pitch_max, band))
        .max(stroke_at(plateau_centre(&pitch, pitch_min, band)));
    let i_top = (0..n)
        .max_by(|&a, &b| s[a].stroke_angle.total_cmp(&s[b].stroke_angle))
        .unwrap_or(0);
    let i_bot = (0..n)
        .min_by(|&a, &b| s[a].stroke_angle.total_cmp(&s[b].stroke_angle))
        .unwrap_or(0);
    let pitch_at_stroke_extremes = s[i_top].pitch_angle.abs().max(s[i_bot].pitch_angle.abs());

    let hyst = 1f64.to_radians();
    let mut sign = 0i8;
    let mut changes = 0u32;
    // walk the cycle twice so the wrap-around crossing is counted once
    for i in 0..2 * n {
        let p = pitch[i % n];
        let now = if p > hyst {
            1
        } else if p < -hyst {
            -1
        } else {
            sign
        };
        if sign != 0 && now != sign && i >= n {
            changes += 1;
        }
        sign = now;
    }

    let on_stop = if m.stops.enabled {
        pitch
            .iter()
            .filter(|&&p| {
                p >= m.stops.positive_limit - 1e-12 || p <= -m.stops.negative_limit + 1e-12
            })
            .count()
    } else {
        0
    };

    let loads: Vec<LoadSample> = s
        .iter()
        .map(|x| {
            let l = m.blade.loads(x.stroke_rate, x.pitch_angle);
            LoadSample {
                lift: l.lift,
                stroke_torque: l.stroke_torque,
                stroke_rate: x.stroke_rate,
            }
        })
        .collect();
    let avg = cycle_average(&loads, m.dt, period)?;
    let qs_lift = s
        .iter()
        .map(|x| {
            m.blade
                .loads(x.stroke_rate, quasi_static_pitch(m, x.stroke_rate))
                .lift
        })
        .sum::<f64>()
        / n as f64;

    let d = |i: usize| rec.end[i] - rec.start[i];
    let joule = d(4);
    let drive_work = d(5);
    let damping = d(6);
    let aero = d(7);
    let stored = m.mechanical_energy(&rec.end) - m.mechanical_energy(&rec.start);
    let electrical_in = joule + drive_work;
    let mech_resid = drive_work - (aero + damping + rec.stop_loss + stored);
    let scale = |x: f64| if x.abs() > 0.0 { x.abs() } else { 1.0 };
    let energy = EnergyAudit {
        electrical_in,
        joule,
        drive_work,
        aero_work: aero,
        structural_damping: damping,
        stop_loss: rec.stop_loss,
        stored_change: stored,
        relative_error: mech_resid.abs() / scale(electrical_in),
        mechanical_relative_error: mech_resid.abs() / scale(drive_work),
    };

    let omega = 2.0 * PI / period;
    let pitch_scale = (0.5 * (pitch_max - pitch_min)).max(1e-6);
    let norms = [
        amplitude.max(1e-12),
        amplitude.max(1e-12) * omega,
        pitch_scale,
        pitch_scale * omega,
    ];
    let mismatch = ((0..4)
        .map(|i| ((rec.end[i] - rec.start[i]) / norms[i]).powi(2))
        .sum::<f64>()
        / 4.0)
        .sqrt();

    let last = s[n - 1];
    Ok(SteadyState {
        frequency: 1.0 / period,
        dt: m.dt,
        cycles,
        settled,
        stroke_amplitude: amplitude,
        pitch_max,
        pitch_min,
        pitch_at_stroke_extremes,
        stroke_at_pitch_extrema,
        pitch_reversals: changes,
        stop_contact_fraction: on_stop as f64 / n as f64,
        mean_lift: avg.mean_lift,
        quasi_static_mean_lift: qs_lift,
        mean_electrical_power: electrical_in / period,
        mean_joule_power: joule / period,
        mean_drive_power: drive_work / period,
        mean_aero_power: avg.mean_aero_power,
        energy,
        cycle_mismatch: mismatch,
        final_state: SimState {
            time: last.t,
            stroke_angle: last.stroke_angle,
            stroke_rate: last.stroke_rate,
            pitch_angle: last.pitch_angle,
            pitch_rate: last.pitch_rate,
        },
    })
}

fn initial_state(cfg: &SimConfig) -> SimState {
    SimState {
        pitch_angle: cfg.pitch_misalignment,
        ..SimState::default()
    }
}

fn within_band(history: &[f64], window: usize, drift: f64) -> bool {
    if history.len() < window {
        return false;
    }
    let tail = &history[history.len() - window..];
    let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        return true;
    }
    (hi - lo) <= drift * hi
}

/// Run from rest until the stroke amplitude settles, then describe one
/// further cycle. Not settling within `max_cycles` is reported through
/// `settled = false`, not as an error.
pub fn steady_state(
    cfg: &SimConfig,
    settle: &SettleCriterion,
) -> Result<SteadyState, DynamicsError> {
    let m = Model::new(cfg)?;
    let mut it = Integrator::new(&m, &initial_state(cfg));
    let mut history = Vec::new();
    let mut settled = false;
    for cycle in 1..=settle.max_cycles.max(1) {
        let rec = record_cycle(&m, &mut it, None)?;
        history.push(amplitude_of(&rec.samples));
        if cycle >= settle.min_cycles && within_band(&history, settle.window, settle.drift) {
            settled = true;
            break;
        }
    }
    let rec = record_cycle(&m, &mut it, None)?;
    analyse(&m, &rec, history.len() + 1, settled)
}

/// Full time series plus a description of the last cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub dt: f64,
    pub steps_per_cycle: usize,
    pub samples: Vec<Sample>,
    pub summary: SteadyState,
}

/// Simulate `n_cycles` drive periods from rest, sampling every step.
pub fn simulate(cfg: &SimConfig, n_cycles: usize) -> Result<SimRun, DynamicsError> {
    if n_cycles == 0 {
        return Err(DynamicsError::Config("n_cycles must be >= 1".into()));
    }
    let m = Model::new(cfg)?;
    let mut it = Integrator::new(&m, &initial_state(cfg));
    let mut samples = Vec::with_capacity(n_cycles * m.steps_per_cycle);
    let mut history = Vec::with_capacity(n_cycles);
    let settle = SettleCriterion::default();
    let mut last = None;
    for _ in 0..n_cycles {
        let rec = record_cycle(&m, &mut it, Some(&mut samples))?;
        history.push(amplitude_of(&rec.samples));
        last = Some(rec);
    }
    let rec = last.expect("at least one cycle");
    let settled = within_band(&history, settle.window + 1, settle.drift);
    let summary = analyse(&m, &rec, n_cycles, settled)?;
    Ok(SimRun {
        dt: m.dt,
        steps_per_cycle: m.steps_per_cycle,
        samples,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub frequency: f64,
    pub stroke_amplitude: f64,
    pub mean_lift: f64,
    pub mean_electrical_power: f64,
    pub mean_aero_power: f64,
    pub settled: bool,
    /// Set when this point failed; the other fields are then NaN.
    pub error: Option<String>,
}

/// Evenly spaced frequencies from `f_min` to `f_max` inclusive.
pub fn sweep_grid(f_min: f64, f_max: f64, n_points: usize) -> Result<Vec<f64>, DynamicsError> {
    if n_points == 0 || !(f_min > 0.0) || !f_max.is_finite() {
        return Err(DynamicsError::Config(
            "sweep needs n_points >= 1 and positive frequencies".into(),
        ));
    }
    if n_points == 1 {
        return Ok(vec![f_min]);
    }
    if !(f_min < f_max) {
        return Err(DynamicsError::Config(format!(
            "sweep range {f_min}..{f_max} Hz is empty"
        )));
    }
    let step = (f_max - f_min) / (n_points - 1) as f64;
    Ok((0..n_points).map(|i| f_min + step * i as f64).collect())
}

fn sweep_point(cfg: &SimConfig, f: f64, settle: &SettleCriterion) -> SweepPoint {
    match steady_state(&cfg.at_frequency(f), settle) {
        Ok(s) => SweepPoint {
            frequency: f,
            stroke_amplitude: s.stroke_amplitude,
            mean_lift: s.mean_lift,
            mean_electrical_power: s.mean_electrical_power,
            mean_aero_power: s.mean_aero_power,
            settled: s.settled,
            error: None,
        },
        Err(e) => SweepPoint {
            frequency: f,
            stroke_amplitude: f64::NAN,
            mean_lift: f64::NAN,
            mean_electrical_power: f64::NAN,
            mean_aero_power: f64::NAN,
            settled: false,
            error: Some(e.to_string()),
        },
    }
}

/// Steady response at each grid frequency. Points run concurrently on up to
/// `threads` workers (the global pool when `None`); results are ordered by
/// frequency and independent of scheduling.
pub fn frequency_sweep(
    cfg: &SimConfig,
    f_min: f64,
    f_max: f64,
    n_points: usize,
    settle: &SettleCriterion,
    threads: Option<usize>,
) -> Result<Vec<SweepPoint>, DynamicsError> {
    let grid = sweep_grid(f_min, f_max, n_points)?;
    cfg.at_frequency(grid[0]).validate()?;
    let run = || {
        grid.par_iter()
            .map(|&f| sweep_point(cfg, f, settle))
            .collect::<Vec<_>>()
    };
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| DynamicsError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

const RESONANCE_GRID: usize = 21;
const RESONANCE_TOL: f64 = 0.01;

/// Drive frequency of peak steady stroke amplitude inside `bracket` (Hz).
pub fn find_resonance(
    cfg: &SimConfig,
    bracket: (f64, f64),
    settle: &SettleCriterion,
) -> Result<Quantity, DynamicsError> {
    let (lo, hi) = bracket;
    let points = frequency_sweep(cfg, lo, hi, RESONANCE_GRID, settle, None)?;
    if let Some(p) = points.iter().find(|p| p.error.is_some()) {
        return Err(DynamicsError::Config(format!(
            "sweep failed at {:.3} Hz: {}",
            p.frequency,
            p.error.as_deref().unwrap_or_default()
        )));
    }
    let best = (0..points.len())
        .max_by(|&a, &b| {
            points[a]
                .stroke_amplitude
                .total_cmp(&points[b].stroke_amplitude)
        })
        .unwrap_or(0);
    if best == 0 || best == points.len() - 1 {
        return Err(DynamicsError::Bracket { lo, hi });
    }
    let mut failure = None;
    let (f, _) = golden_section_max(
        |f| match steady_state(&cfg.at_frequency(f), settle) {
            Ok(s) => s.stroke_amplitude,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        points[best - 1].frequency,
        points[best + 1].frequency,
        RESONANCE_TOL,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Quantity::frequency(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::MaterialSpec;

    fn base() -> SimConfig {
        let osc = OscillatorSpec::from_point_mass(0.8e-6, 0.26e-6, 1.4e-3, 0.0, 0.02);
        SimConfig {
            oscillator: osc,
            wing: WingSpec {
                length: 3.5e-3,
                aspect_ratio: 3.0,
                mass: 0.02e-6,
                n_veins: 5,
                vein_width: 30e-6,
                membrane_thickness: 1.5e-6,
                adhesive_thickness: 18e-6,
                cop_distance: 0.4e-3,
                leading_edge_mass_fraction: 0.0,
                root_offset: 0.0,
            },
            flexure: FlexureSpec {
                total_width: 390e-6,
                length: 100e-6,
                thickness: 1.5e-6,
                n_parts: 3,
                material: MaterialSpec::polyester(),
                damping_ratio: 0.3,
            },
            stops: PitchStopSpec::observed(),
            aero: AeroConfig::default(),
            drive: DriveSignal::square(0.07, 150.0),
            k_t: TorqueConstant(1e-8),
            coupling: CouplingProfile::Constant,
            coil_resistance: 1.5,
            dt: 1.0 / (1000.0 * 150.0),
            pitch_misalignment: 0.0,
        }
    }

    #[test]
    fn rest_stays_at_rest() {
        let mut cfg = base();
        cfg.drive.amplitude = 0.0;
        let mut s = SimState::default();
        for _ in 0..100 {
            s = step(&s, &cfg).unwrap();
        }
        assert_eq!(s.stroke_angle, 0.0);
        assert_eq!(s.pitch_angle, 0.0);
        assert_eq!(s.stroke_rate, 0.0);
    }

    #[test]
    fn pitch_beyond_stop_is_projected() {
        let cfg = base();
        let s = SimState {
            pitch_angle: 40f64.to_radians(),
            pitch_rate: 50.0,
            ..SimState::default()
        };
        let next = step(&s, &cfg).unwrap();
        assert!(next.pitch_angle <= cfg.stops.positive_limit + STOP_PENETRATION_TOLERANCE);
    }

    #[test]
    fn rejects_coarse_dt() {
        let mut cfg = base();
        cfg.dt = 2.0 / (1000.0 * 150.0);
        assert!(matches!(cfg.validate(), Err(DynamicsError::Config(_))));
        assert!(simulate(&base(), 0).is_err());
    }

    #[test]
    fn even_steps_per_cycle() {
        let mut cfg = base();
        cfg.drive.frequency = 132.3;
        cfg.dt = 1e-6;
        let n = cfg.steps_per_cycle();
        assert_eq!(n % 2, 0);
        assert!(cfg.effective_dt() <= cfg.dt);
    }

    // x'' + 2ζω x' + ω² x = (F/I) sin(Ωt), x(0) = x'(0) = 0
    fn driven_oscillator(k: f64, i: f64, c: f64, f0: f64, omega_d: f64, t: f64) -> f64 {
        let w0 = (k / i).sqrt();
        let g = c / (2.0 * i);
        let wd = (w0 * w0 - g * g).sqrt();
        let a = f0 / i;
        let den = (w0 * w0 - omega_d * omega_d).powi(2) + (2.0 * g * omega_d).powi(2);
        let p = a * (w0 * w0 - omega_d * omega_d) / den;
        let q = -a * 2.0 * g * omega_d / den;
        // particular x_p = p sin Ωt + q cos Ωt; homogeneous fixes x(0), x'(0)
        let c1 = -q;
        let c2 = (-p * omega_d + g * c1) / wd;
        p * (omega_d * t).sin()
            + q * (omega_d * t).cos()
            + (-g * t).exp() * (c1 * (wd * t).cos() + c2 * (wd * t).sin())
    }

    #[test]
    fn matches_analytic_driven_oscillator() {
        let mut cfg = base().linearized();
        cfg.drive = DriveSignal::sine(0.07, 140.0);
        cfg.dt = cfg.max_dt();
        let run = simulate(&cfg, 50).unwrap();
        let o = cfg.oscillator;
        let f0 = cfg.k_t.0 * 0.07 / 1.5;
        let wd = 2.0 * PI * 140.0;
        let mut worst = 0.0f64;
        let mut peak = 0.0f64;
        for s in &run.samples {
            let x = driven_oscillator(o.stiffness, o.inertia, o.damping_coefficient(), f0, wd, s.t);
            worst = worst.max((s.stroke_angle - x).abs());
            peak = peak.max(x.abs());
        }
        assert!(worst / peak < 1e-3, "relative error {}", worst / peak);
    }

    #[test]
    fn energy_audit_closes() {
        let s = steady_state(&base(), &SettleCriterion::default()).unwrap();
        assert!(s.energy.relative_error < 0.02);
        assert!(s.energy.mechanical_relative_error < 0.02, "{:?}", s.energy);
        assert!(s.energy.aero_work > 0.0);
    }

    #[test]
    fn halving_dt_barely_moves_amplitude() {
        let cfg = base();
        let mut fine = cfg.clone();
        fine.dt = cfg.dt / 2.0;
        let a = steady_state(&cfg, &SettleCriterion::tight())
            .unwrap()
            .stroke_amplitude;
        let b = steady_state(&fine, &SettleCriterion::tight())
            .unwrap()
            .stroke_amplitude;
        assert!(((a - b) / b).abs() < 1e-3, "{a} vs {b}");
    }

    #[test]
    fn half_wave_symmetry_without_stops() {
        let mut cfg = base();
        cfg.stops = PitchStopSpec::disabled();
        let run = simulate(&cfg, 60).unwrap();
        let n = run.steps_per_cycle;
        let last = &run.samples[run.samples.len() - n..];
        let h = n / 2;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..h {
            num += (last[i + h].pitch_angle + last[i].pitch_angle).powi(2);
            den += last[i].pitch_angle.powi(2);
        }
        assert!((num / den).sqrt() < 0.01);
    }

    #[test]
    fn stops_hold() {
        let s = steady_state(&base(), &SettleCriterion::default()).unwrap();
        assert!(s.pitch_max <= 30f64.to_radians() + STOP_PENETRATION_TOLERANCE);
        assert!(s.pitch_min >= -50f64.to_radians() - STOP_PENETRATION_TOLERANCE);
    }

    #[test]
    fn linear_resonance_matches_oracle() {
        let osc = OscillatorSpec::from_point_mass(0.34e-6, 0.26e-6, 1.4e-3, 0.0, 0.02);
        let mut cfg = base().linearized();
        cfg.oscillator = osc;
        let f = find_resonance(&cfg, (110.0, 150.0), &SettleCriterion::tight()).unwrap();
        let expect = osc.natural_frequency();
        assert!((f.value - expect).abs() < 0.1, "{} vs {expect}", f.value);
    }

    #[test]
    fn bracket_without_peak_is_an_error() {
        let cfg = base().linearized();
        let r = find_resonance(&cfg, (100.0, 150.0), &SettleCriterion::default());
        assert!(matches!(r, Err(DynamicsError::Bracket { .. })));
    }

    #[test]
    fn off_resonance_is_attenuated() {
        let cfg = base().linearized();
        let fn_ = cfg.oscillator.natural_frequency();
        let at = |f: f64| {
            steady_state(&cfg.at_frequency(f), &SettleCriterion::default())
                .unwrap()
                .stroke_amplitude
        };
        assert!(at(0.5 * fn_) < at(fn_));
    }

    #[test]
    fn sweep_is_ordered_and_thread_independent() {
        let cfg = base().linearized();
        let s = SettleCriterion::default();
        let a = frequency_sweep(&cfg, 150.0, 250.0, 6, &s, Some(1)).unwrap();
        let b = frequency_sweep(&cfg, 150.0, 250.0, 6, &s, Some(4)).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].frequency < w[1].frequency));
    }
}
