use std::ffi::{c_char, CStr};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use dynit_ffi::*;

fn reference_model(lambda_p: f64, p_db: f64) -> *mut DynitModel {
    let mut scn = std::mem::MaybeUninit::<DynitScenario>::uninit();
    unsafe {
        assert_eq!(
            dynit_scenario_reference(lambda_p, p_db, scn.as_mut_ptr()),
            DynitStatus::Ok
        );
        let scn = scn.assume_init();
        let mut model = ptr::null_mut();
        assert_eq!(dynit_model_new(&scn, 0.0, &mut model), DynitStatus::Ok);
        assert!(!model.is_null());
        model
    }
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        dynit_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn outage_matches_core_library() {
    let m = reference_model(2.0, 10.0);
    let model = dynit::Model::new(dynit::Scenario::reference(2.0, 10.0), 1e-12).unwrap();
    for &x in &[0.01, 0.3, 1.0, 7.5, 200.0] {
        let mut v = f64::NAN;
        unsafe {
            assert_eq!(
                dynit_outage(m, DYNIT_REGIME_GENERAL, x, &mut v),
                DynitStatus::Ok
            );
        }
        let want = model.outage(dynit::Regime::General, x).unwrap();
        assert_eq!(v.to_bits(), want.to_bits(), "x = {x}");
    }
    unsafe { dynit_model_free(m) };
}

#[test]
fn curve_agrees_with_pointwise_calls() {
    let m = reference_model(3.0, 5.0);
    let xs = [0.1, 1.0, 10.0, 100.0];
    let mut curve = [0.0; 4];
    unsafe {
        assert_eq!(
            dynit_outage_curve(
                m,
                DYNIT_REGIME_HIGH_POWER,
                xs.as_ptr(),
                xs.len(),
                curve.as_mut_ptr()
            ),
            DynitStatus::Ok
        );
        for (x, c) in xs.iter().zip(curve) {
            let mut v = 0.0;
            dynit_outage(m, DYNIT_REGIME_HIGH_POWER, *x, &mut v);
            assert_eq!(v, c);
        }
        assert!(curve.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(
            dynit_outage_curve(m, DYNIT_REGIME_GENERAL, ptr::null(), 0, ptr::null_mut()),
            DynitStatus::Ok
        );
        dynit_model_free(m);
    }
}

#[test]
fn capacity_and_simulation_agree() {
    let m = reference_model(2.0, 10.0);
    let mut cap = DynitCapacity::default();
    let mut sim = DynitSimSummary::default();
    unsafe {
        assert_eq!(
            dynit_mean_capacity(m, DYNIT_REGIME_GENERAL, 1e-8, &mut cap),
            DynitStatus::Ok
        );
        assert_eq!(
            dynit_simulate(m, DYNIT_REGIME_GENERAL, 0.0, 200_000, 7, &mut sim),
            DynitStatus::Ok
        );
        dynit_model_free(m);
    }
    assert!((cap.closed_term + cap.i4_value - cap.mean_capacity).abs() < 1e-12);
    assert_eq!(sim.n_samples, 200_000);
    assert_eq!(sim.constraint_violations, 0);
    assert!((0.0..=1.0).contains(&sim.peak_fraction));
    let rel = (sim.mean_capacity - cap.mean_capacity).abs() / cap.mean_capacity;
    assert!(
        rel < 2e-2,
        "analytic {} vs simulated {}",
        cap.mean_capacity,
        sim.mean_capacity
    );
}

#[test]
fn threshold_law_and_power_cdfs() {
    let m = reference_model(4.0, 10.0);
    unsafe {
        let (mut lo, mut hi, mut pdf) = (0.0, 0.0, 0.0);
        dynit_psi_cdf(m, 0.5, &mut lo);
        dynit_psi_cdf(m, 5.0, &mut hi);
        assert!(0.0 < lo && lo < hi && hi < 1.0);
        assert_eq!(dynit_psi_pdf(m, 0.5, &mut pdf), DynitStatus::Ok);
        assert!(pdf > 0.0);
        for which in 0..3 {
            let mut v = -1.0;
            assert_eq!(dynit_power_cdf(m, which, 1.0, &mut v), DynitStatus::Ok);
            assert!((0.0..=1.0).contains(&v));
        }
        let mut v = 0.0;
        assert_eq!(dynit_power_cdf(m, 3, 1.0, &mut v), DynitStatus::Config);
        let mut k = 0usize;
        dynit_model_k_max(m, &mut k);
        assert!(k >= 2);
        dynit_model_free(m);
    }
}

#[test]
fn fixed_threshold_entry_points() {
    let m = reference_model(1.0, 10.0);
    let psi = 10f64.powf(-0.5);
    unsafe {
        let mut f = 0.0;
        assert_eq!(dynit_outage_fixed_it(m, 1.0, psi, &mut f), DynitStatus::Ok);
        assert!(0.0 < f && f < 1.0);
        let mut cap = DynitCapacity::default();
        assert_eq!(
            dynit_capacity_fixed_it(m, psi, 1e-8, &mut cap),
            DynitStatus::Ok
        );
        let mut sim = DynitSimSummary::default();
        assert_eq!(
            dynit_simulate(m, DYNIT_REGIME_FIXED_IT, psi, 100_000, 3, &mut sim),
            DynitStatus::Ok
        );
        assert!((sim.mean_capacity - cap.mean_capacity).abs() / cap.mean_capacity < 3e-2);
        dynit_model_free(m);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(dynit_upper_gamma0(-1.0, &mut v), DynitStatus::Domain);
        assert!(!last_error().is_empty());

        assert_eq!(
            dynit_outage(ptr::null(), 0, 1.0, &mut v),
            DynitStatus::NullPointer
        );
        assert!(last_error().contains("model"));

        let m = reference_model(2.0, 0.0);
        assert_eq!(dynit_outage(m, 9, 1.0, &mut v), DynitStatus::Config);
        assert_eq!(
            dynit_outage(m, 0, 1.0, ptr::null_mut()),
            DynitStatus::NullPointer
        );
        dynit_model_free(m);
        dynit_model_free(ptr::null_mut());

        let mut bad = std::mem::zeroed::<DynitScenario>();
        dynit_scenario_reference(2.0, 0.0, &mut bad);
        bad.sigma2 = -1.0;
        let mut out = ptr::null_mut();
        assert_eq!(
            dynit_model_new(&bad, 0.0, &mut out),
            DynitStatus::InvalidScenario
        );
        assert!(out.is_null());
    }
}

#[test]
fn error_message_truncates_and_reports_length() {
    unsafe {
        let mut v = 0.0;
        dynit_upper_gamma0(0.0, &mut v);
        let full = dynit_last_error_message(ptr::null_mut(), 0);
        let mut buf = [1 as c_char; 5];
        assert_eq!(dynit_last_error_message(buf.as_mut_ptr(), buf.len()), full);
        assert_eq!(buf[4], 0);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_bytes().len(), 4);
    }
}

#[test]
fn special_functions() {
    let (mut g, mut s) = (0.0, 0.0);
    unsafe {
        dynit_upper_gamma0(1.0, &mut g);
        dynit_exp_scaled_gamma0(1.0, &mut s);
    }
    assert!((g - 0.219_383_934_395_520_3).abs() < 1e-14);
    assert!((s - g * std::f64::consts::E).abs() < 1e-14);
}

#[test]
fn static_strings() {
    let v = unsafe { CStr::from_ptr(dynit_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    let s = unsafe { CStr::from_ptr(dynit_status_string(DynitStatus::Quadrature)) };
    assert!(s.to_str().unwrap().contains("quadrature"));
}

#[test]
fn header_declares_exports_and_compiles() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/dynit.h");
    let text = std::fs::read_to_string(&header).unwrap();
    let lib = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = lib
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .filter_map(|rest| rest.split('(').next())
        .collect();
    assert!(exports.len() > 15);
    for name in exports {
        assert!(
            text.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }

    // Syntax check with whatever C compiler is around; skipped if none.
    let tmp = tempdir();
    let src = tmp.join("check.c");
    std::fs::write(
        &src,
        "#include \"dynit.h\"\nint main(void) { return DYNIT_STATUS_OK; }\n",
    )
    .unwrap();
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .status()
    else {
        return;
    };
    assert!(status.success());
}

fn tempdir() -> PathBuf {
    let p = std::env::temp_dir().join(format!("dynit-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&p).unwrap();
    p
}
