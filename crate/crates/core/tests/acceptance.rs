//! Acceptance criteria for the device as built. Prints one PASS/FAIL line per
//! criterion and exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;

use flapkit::actuator::{
    calibrate_torque_constant, coil_resistance, coil_wire_length, joule_power, magnet_mass,
    DriveSignal,
};
use flapkit::aero::AeroConfig;
use flapkit::budget::{build_report, efficiency, specific_power_requirement, SimulationSummary};
use flapkit::config::Project;
use flapkit::dynamics::{
    find_resonance, simulate, steady_state, SettleCriterion, SimConfig, SteadyState,
};
use flapkit::materials::MaterialSpec;
use flapkit::spring::{effective_inertia_from_resonance, required_stiffness, OscillatorSpec};
use flapkit::units::STANDARD_GRAVITY;
use flapkit::wing::{
    design_flexure, flexure_stiffness, max_aero_torque, peak_normal_force, FlexureSpec,
};

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn spring_sizing() -> Outcome {
    let k = required_stiffness(0.26e-6, 1.4e-3, 130.0).value;
    let oracle = 0.26e-6 * 1.4e-3f64.powi(2) * (2.0 * PI * 130.0).powi(2);
    let pass = rel(k, 0.34e-6) <= 0.015 && rel(k, oracle) < 1e-12;
    Outcome {
        id: "1",
        title: "spring sizing",
        pass,
        detail: format!(
            "required {:.4} uNm vs 0.34 uNm (tol 1.5%), oracle {:.4} uNm",
            k * 1e6,
            oracle * 1e6
        ),
    }
}

fn flexure_sizing() -> Outcome {
    let poly = MaterialSpec::polyester();
    let f = design_flexure(0.0028e-6, 1.0, 1.5e-6, &poly, 100e-6, 3.5e-3).unwrap();
    let built = FlexureSpec {
        total_width: 390e-6,
        ..f.clone()
    };
    let k = flexure_stiffness(&built).value;
    let closed = 2.5e9 * 390e-6 * 1.5e-6f64.powi(3) / (12.0 * 100e-6);
    let width_ok = (390e-6..=400e-6).contains(&f.total_width);
    let k_ok = rel(k, closed) <= 0.005 && rel(2.74e-9, closed) <= 0.005;
    Outcome {
        id: "2",
        title: "flexure sizing",
        pass: width_ok && k_ok,
        detail: format!(
            "width {:.1} um in [390, 400] um; k(390 um) {:.4e} vs closed form {:.4e} and 2.74e-9 (tol 0.5%)",
            f.total_width * 1e6,
            k,
            closed
        ),
    }
}

fn aero_torque_chain() -> Outcome {
    let n = peak_normal_force(0.01e-3).value;
    let t = max_aero_torque(n, 0.4e-3).unwrap().value;
    let n_ok = rel(n, 0.00707e-3) < 1e-3;
    let t_ok = rel(t, 0.0028e-6) <= 0.02;
    Outcome {
        id: "3",
        title: "aero torque chain",
        pass: n_ok && t_ok,
        detail: format!(
            "normal force {:.5} mN, torque {:.5} uNm vs 0.0028 uNm (tol 2%)",
            n * 1e3,
            t * 1e6
        ),
    }
}

fn coil_resistance_check() -> Outcome {
    let coil = Project::device().coil;
    let r = coil_resistance(&coil).unwrap().value;
    let l = coil_wire_length(&coil).value;
    let turns = (coil.layers * coil.turns_per_layer) as f64;
    let l_oracle = turns * PI * (coil.inner_diameter + coil.layers as f64 * coil.wire_diameter);
    let r_oracle = 1.68e-8 * l_oracle / (PI * coil.wire_diameter.powi(2) / 4.0);
    let pass = (1.3..=1.7).contains(&r) && rel(l, l_oracle) < 1e-12 && rel(r, r_oracle) < 1e-12;
    Outcome {
        id: "4",
        title: "coil resistance",
        pass,
        detail: format!(
            "{:.4} ohm in [1.3, 1.7]; wire {:.3} mm, oracle mismatch {:.1e} / {:.1e}",
            r,
            l * 1e3,
            rel(l, l_oracle),
            rel(r, r_oracle)
        ),
    }
}

fn power_chain() -> Outcome {
    let p = joule_power(&DriveSignal::square(0.07, 132.3), 1.5)
        .unwrap()
        .value;
    let s = specific_power_requirement(1e-6, 29.0).unwrap();
    let e = efficiency(23e-6, 3.27e-3).unwrap();
    let oracle = 0.07f64.powi(2) / 1.5;
    let pass = rel(p, oracle) < 1e-12
        && rel(p, 3.3e-3) <= 0.02
        && s == 29e-6
        && (e * 100.0 - 0.70).abs() <= 0.03;
    Outcome {
        id: "5",
        title: "power chain",
        pass,
        detail: format!(
            "Joule {:.4} mW vs 3.3 mW (tol 2%); 1 mg needs {} uW; efficiency {:.4}% vs 0.70% (tol 0.03%)",
            p * 1e3,
            s * 1e6,
            e * 100.0
        ),
    }
}

// Drive sized for a small linear response: without aero damping the
// calibrated drive would carry the stroke past its travel.
fn small_drive(cfg: &mut SimConfig, amplitude: f64) {
    let o = cfg.oscillator;
    let omega = (o.stiffness / o.inertia).sqrt();
    let current = cfg.drive.amplitude / cfg.coil_resistance;
    cfg.k_t.0 = amplitude * o.damping_coefficient() * omega / (4.0 / PI * current);
}

fn resonance_closure(base: &SimConfig) -> Outcome {
    let settle = SettleCriterion::tight();
    let inertia = effective_inertia_from_resonance(0.8e-6, 132.3)
        .unwrap()
        .value;
    let mut cfg = base.linearized();
    cfg.oscillator = OscillatorSpec {
        stiffness: 0.8e-6,
        inertia,
        ..cfg.oscillator
    };
    small_drive(&mut cfg, 10f64.to_radians());
    let built = find_resonance(&cfg, (120.0, 145.0), &settle).map(|q| q.value);
    let mut bare = base.linearized();
    bare.oscillator = OscillatorSpec::from_point_mass(
        0.34e-6,
        0.26e-6,
        1.4e-3,
        0.0,
        base.oscillator.damping_ratio,
    );
    small_drive(&mut bare, 10f64.to_radians());
    let magnet = find_resonance(&bare, (120.0, 140.0), &settle).map(|q| q.value);
    match (built, magnet) {
        (Ok(a), Ok(b)) => Outcome {
            id: "6",
            title: "resonance closure",
            pass: (a - 132.3).abs() <= 0.2 && (b - 130.0).abs() <= 0.2,
            detail: format!("effective inertia {a:.3} Hz vs 132.3 Hz, bare magnet {b:.3} Hz vs 130.0 Hz (tol 0.2 Hz)"),
        },
        (a, b) => Outcome {
            id: "6",
            title: "resonance closure",
            pass: false,
            detail: format!("search failed: {a:?} {b:?}"),
        },
    }
}

fn kinematics(s: &SteadyState, cfg: &SimConfig) -> Vec<Outcome> {
    let amp = s.stroke_amplitude.to_degrees();
    let pos = cfg.stops.positive_limit.to_degrees();
    let neg = -cfg.stops.negative_limit.to_degrees();
    vec![
        Outcome {
            id: "7a",
            title: "stroke amplitude",
            pass: (amp - 45.0).abs() <= 1.0,
            detail: format!("{amp:.3} deg vs 45 deg (tol 1 deg)"),
        },
        Outcome {
            id: "7b",
            title: "pitch phase",
            pass: s.stroke_at_pitch_extrema <= 0.25 && s.pitch_at_stroke_extremes.to_degrees() < 5.0,
            detail: format!(
                "pitch extrema at {:.2} of stroke amplitude (mid-stroke <= 0.25); |pitch| {:.2} deg at stroke extremes (< 5 deg)",
                s.stroke_at_pitch_extrema,
                s.pitch_at_stroke_extremes.to_degrees()
            ),
        },
        Outcome {
            id: "7c",
            title: "pitch stops",
            pass: (s.pitch_max.to_degrees() - pos).abs() <= 1.0 && (s.pitch_min.to_degrees() - neg).abs() <= 1.0,
            detail: format!(
                "pitch {:+.3} / {:+.3} deg vs stops {pos:+.0} / {neg:+.0} deg (tol 1 deg)",
                s.pitch_max.to_degrees(),
                s.pitch_min.to_degrees()
            ),
        },
        Outcome {
            id: "7d",
            title: "pitch reversal",
            pass: s.pitch_reversals == 2,
            detail: format!("{} reversals per cycle (one per half-cycle)", s.pitch_reversals),
        },
    ]
}

// x'' + 2γx' + ω₀²x = a·sin(Ωt) from rest
fn driven_oscillator(w0: f64, g: f64, a: f64, omega: f64, t: f64) -> f64 {
    let wd = (w0 * w0 - g * g).sqrt();
    let den = (w0 * w0 - omega * omega).powi(2) + (2.0 * g * omega).powi(2);
    let p = a * (w0 * w0 - omega * omega) / den;
    let q = -a * 2.0 * g * omega / den;
    let c1 = -q;
    let c2 = (-p * omega + g * c1) / wd;
    p * (omega * t).sin()
        + q * (omega * t).cos()
        + (-g * t).exp() * (c1 * (wd * t).cos() + c2 * (wd * t).sin())
}

fn numerical_hygiene(cfg: &SimConfig, steady: &SteadyState) -> Outcome {
    // analytic oracle: sine drive on the linear oscillator, 50 cycles
    let mut lin = cfg.linearized();
    lin.drive = DriveSignal::sine(cfg.drive.amplitude, cfg.drive.frequency);
    let run = simulate(&lin, 50).unwrap();
    let o = lin.oscillator;
    let w0 = (o.stiffness / o.inertia).sqrt();
    let g = o.damping_coefficient() / (2.0 * o.inertia);
    let a = lin.k_t.0 * lin.drive.amplitude / lin.coil_resistance / o.inertia;
    let omega = 2.0 * PI * lin.drive.frequency;
    let (mut worst, mut peak) = (0.0f64, 0.0f64);
    for s in &run.samples {
        let x = driven_oscillator(w0, g, a, omega, s.t);
        worst = worst.max((s.stroke_angle - x).abs());
        peak = peak.max(x.abs());
    }
    let oracle_err = worst / peak;

    let energy = steady.energy.relative_error;

    let settle = SettleCriterion::tight();
    let coarse = steady_state(cfg, &settle).unwrap();
    let mut fine_cfg = cfg.clone();
    fine_cfg.dt = cfg.effective_dt() / 2.0;
    let fine = steady_state(&fine_cfg, &settle).unwrap();
    let dt_change = rel(coarse.stroke_amplitude, fine.stroke_amplitude);

    let mut refined = cfg.clone();
    refined.aero = AeroConfig {
        n_blade_elements: 200,
        ..cfg.aero
    };
    let at200 = steady_state(&refined, &settle).unwrap();
    let lift_change = rel(coarse.mean_lift, at200.mean_lift);

    Outcome {
        id: "8",
        title: "numerical hygiene",
        pass: oracle_err < 1e-3 && energy <= 0.02 && dt_change < 1e-3 && lift_change < 0.01,
        detail: format!(
            "oracle {oracle_err:.2e} (< 1e-3); energy audit {energy:.2e} (<= 2%); dt halving {dt_change:.2e} (< 1e-3); 20->200 elements {lift_change:.2e} (< 1%)"
        ),
    }
}

fn mass_budget(p: &Project) -> Outcome {
    let m = magnet_mass(&p.magnet).value;
    let report = build_report(p, None);
    let warned = report
        .as_ref()
        .map(|r| {
            r.warnings
                .iter()
                .any(|w| w.contains("0.73") && w.contains("0.70"))
        })
        .unwrap_or(false);
    Outcome {
        id: "9",
        title: "mass budget",
        pass: rel(m, 0.26e-6) <= 0.05 && warned,
        detail: format!(
            "magnet {:.4} mg vs 0.26 mg (tol 5%); sum/net rounding {}",
            m * 1e6,
            if warned {
                "reported as a warning"
            } else {
                "not reported"
            }
        ),
    }
}

fn lift_band(p: &Project, summary: &SimulationSummary) -> Outcome {
    let report = build_report(p, Some(summary)).unwrap();
    let sim = report.simulation.as_ref().unwrap();
    let lift = sim.mean_lift_mg;
    let design = p.flexure_targets.design_average_lift / STANDARD_GRAVITY * 1e6;
    Outcome {
        id: "10",
        title: "mean lift band",
        pass: (0.1..=1.2).contains(&lift),
        detail: format!(
            "{lift:.4} mg in [0.1, 1.2] mg; {:.2}x the 0.3 mg expectation, {:.3}x the {design:.2} mg design figure",
            lift / 0.3,
            lift / design
        ),
    }
}

fn main() -> ExitCode {
    let p = Project::device();
    let settle = p.simulation.settle;
    let cal = calibrate_torque_constant(p.target_stroke, &p.sim_config(Some(0.0)), &settle)
        .expect("calibration succeeds");
    let cfg = p.sim_config(Some(cal.torque_constant.0));
    let steady = steady_state(&cfg, &settle).expect("steady state");
    let summary = SimulationSummary {
        schema_version: flapkit::budget::REPORT_SCHEMA_VERSION,
        config_sha256: p.sha256.clone(),
        torque_constant: cal.torque_constant.0,
        calibrated: true,
        target_stroke: p.target_stroke,
        steady: steady.clone(),
    };

    let mut outcomes = vec![
        spring_sizing(),
        flexure_sizing(),
        aero_torque_chain(),
        coil_resistance_check(),
        power_chain(),
        resonance_closure(&cfg),
    ];
    outcomes.extend(kinematics(&steady, &cfg));
    outcomes.push(numerical_hygiene(&cfg, &steady));
    outcomes.push(mass_budget(&p));
    outcomes.push(lift_band(&p, &summary));

    for o in &outcomes {
        println!(
            "{} {:<3} {:<20} {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.id,
            o.title,
            o.detail
        );
    }
    println!(
        "info    calibrated k_t {:.4} uNm/A; pitch resonance {:.1} Hz vs {:.1} Hz drive; lift with quasi-static pitch {:.4} mg",
        cal.torque_constant.0 * 1e6,
        flapkit::wing::pitch_resonance_frequency(cfg.flexure_stiffness(), cfg.pitch_inertia()).value,
        cfg.drive.frequency,
        steady.quasi_static_mean_lift / STANDARD_GRAVITY * 1e6
    );

    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!(
        "acceptance: {} of {} criteria pass{}",
        outcomes.len() - failed.len(),
        outcomes.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failing: {}", failed.join(", "))
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
