use std::ffi::{CStr, CString};
use std::ptr;

use flapkit_ffi::*;

fn last_error() -> String {
    let p = flapkit_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn scalar_chain_matches_library() {
    let mut k = 0.0;
    let st = unsafe { flapkit_required_stiffness(0.26e-6, 1.4e-3, 130.0, &mut k) };
    assert_eq!(st, FlapkitStatus::Ok);
    let oracle = 0.26e-6 * 1.4e-3f64.powi(2) * (2.0 * std::f64::consts::PI * 130.0).powi(2);
    assert!((k - oracle).abs() / oracle < 1e-12);

    let mut i = 0.0;
    assert_eq!(
        unsafe { flapkit_effective_inertia(0.8e-6, 132.3, &mut i) },
        FlapkitStatus::Ok
    );
    assert!((i - 1.1577e-12).abs() / 1.1577e-12 < 1e-3);
    assert_eq!(
        unsafe { flapkit_effective_inertia(0.8e-6, 0.0, &mut i) },
        FlapkitStatus::InvalidArgument
    );

    let mut p = 0.0;
    assert_eq!(
        unsafe { flapkit_joule_power(FlapkitWaveform::Square, 0.07, 1.5, &mut p) },
        FlapkitStatus::Ok
    );
    assert!((p - 0.07 * 0.07 / 1.5).abs() < 1e-15);
    assert_eq!(
        unsafe { flapkit_joule_power(FlapkitWaveform::Sine, 0.07, 1.5, &mut p) },
        FlapkitStatus::Ok
    );
    assert!((p - 0.07 * 0.07 / 3.0).abs() < 1e-15);
}

#[test]
fn config_errors_carry_location() {
    let bad = flapkit::config::DEVICE_JSON.replace("\"130Hz\"", "\"130 Hzz\"");
    let c = CString::new(bad).unwrap();
    let mut h = ptr::null_mut();
    let st = unsafe { flapkit_project_from_json(c.as_ptr(), &mut h) };
    assert_eq!(st, FlapkitStatus::ConfigError);
    assert!(h.is_null());
    assert!(last_error().contains("spring.target_frequency"));
}

#[test]
fn infeasible_flexure_is_flagged() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { flapkit_project_load_device(&mut h) },
        FlapkitStatus::Ok
    );
    let mut w = 0.0;
    assert_eq!(
        unsafe { flapkit_flexure_width(h, 2.8e-9, 1.0, &mut w) },
        FlapkitStatus::Ok
    );
    assert!((390e-6..=400e-6).contains(&w));
    assert_eq!(
        unsafe { flapkit_flexure_width(h, 2.8e-7, 1.0, &mut w) },
        FlapkitStatus::Infeasible
    );
    assert!(last_error().contains("leading edge"));
    unsafe { flapkit_project_free(h) };
}

#[test]
fn simulation_handle_round_trip() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { flapkit_project_load_device(&mut h) },
        FlapkitStatus::Ok
    );
    let mut sim = ptr::null_mut();
    assert_eq!(
        unsafe { flapkit_simulate(h, 0.9075e-6, 0, &mut sim) },
        FlapkitStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { flapkit_simulate(h, 0.9075e-6, 40, &mut sim) },
        FlapkitStatus::Ok
    );

    let p = flapkit::config::Project::device();
    let direct = flapkit::dynamics::simulate(&p.sim_config(Some(0.9075e-6)), 40).unwrap();
    let n = unsafe { flapkit_simulation_len(sim) };
    assert_eq!(n, direct.samples.len());
    let mut s = FlapkitSample::default();
    assert_eq!(
        unsafe { flapkit_simulation_sample(sim, n - 1, &mut s) },
        FlapkitStatus::Ok
    );
    assert_eq!(s.stroke_angle, direct.samples[n - 1].stroke_angle);
    let mut sum = FlapkitSummary::default();
    assert_eq!(
        unsafe { flapkit_simulation_summary(sim, &mut sum) },
        FlapkitStatus::Ok
    );
    assert_eq!(sum.stroke_amplitude, direct.summary.stroke_amplitude);

    let mut json = ptr::null_mut();
    assert_eq!(
        unsafe { flapkit_report_json(h, sim, &mut json) },
        FlapkitStatus::Ok
    );
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { flapkit_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["simulation"]["stroke_amplitude_deg"].is_number());

    unsafe {
        flapkit_simulation_free(sim);
        flapkit_project_free(h);
        flapkit_simulation_free(ptr::null_mut());
        flapkit_project_free(ptr::null_mut());
    }
    assert_eq!(unsafe { flapkit_simulation_len(ptr::null()) }, 0);
}

#[test]
fn sweep_reports_needed_capacity() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { flapkit_project_load_device(&mut h) },
        FlapkitStatus::Ok
    );
    let mut n = 0usize;
    let st = unsafe { flapkit_sweep(h, 0.9075e-6, 130.0, 134.0, 4, 1, ptr::null_mut(), 0, &mut n) };
    assert_eq!(st, FlapkitStatus::BufferTooSmall);
    assert_eq!(n, 4);
    let mut buf = vec![FlapkitSweepPoint::default(); 4];
    let st = unsafe {
        flapkit_sweep(
            h,
            0.9075e-6,
            130.0,
            134.0,
            4,
            2,
            buf.as_mut_ptr(),
            buf.len(),
            &mut n,
        )
    };
    assert_eq!(st, FlapkitStatus::Ok);
    assert_eq!(n, 4);
    assert!(buf.iter().all(|p| p.ok));
    assert!(buf.windows(2).all(|w| w[0].frequency < w[1].frequency));
    unsafe { flapkit_project_free(h) };
}
