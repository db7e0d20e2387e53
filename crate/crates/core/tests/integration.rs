use dynit::analytic::{outage_general, Regime};
use dynit::distributions::{build_series, Scenario};
use dynit::experiments::{parse_specs, run_experiment, write_experiment, FigureId};
use dynit::montecarlo::{simulate, SimConfig};
use dynit::quadrature::{integrate_semi_infinite, Tolerance, DEFAULT_MAX_SUBDIVISIONS};
use dynit::specfun::{exp_scaled_gamma0, upper_gamma0};
use dynit::{CurveTable, Model};

#[test]
fn upper_gamma0_matches_its_integral() {
    for &x in &[1e-3, 0.1, 1.0, 4.0, 30.0] {
        let q = integrate_semi_infinite(
            |t| (-t).exp() / t,
            x,
            Tolerance {
                abs: 0.0,
                rel: 1e-12,
            },
            DEFAULT_MAX_SUBDIVISIONS,
        )
        .unwrap();
        let g = upper_gamma0(x).unwrap();
        assert!(
            (g - q.value).abs() <= 1e-10 * g.max(1e-300),
            "x = {x}: {g} vs {}",
            q.value
        );
        let s = exp_scaled_gamma0(x).unwrap();
        assert!((s - g * x.exp()).abs() <= 1e-12 * s);
    }
}

#[test]
fn analytic_outage_tracks_simulation() {
    let scn = Scenario::reference(3.0, 5.0);
    let series = build_series(&scn, 1e-12).unwrap();
    let sim = simulate(&scn, &SimConfig::new(200_000, 11)).unwrap();
    let grid = dynit::analytic::log_grid(1e-3, 1e3, 120);
    let gap = sim
        .gamma_s
        .sup_distance(|x| outage_general(x, &series, &scn).unwrap(), &grid);
    assert!(gap < 6e-3, "sup gap {gap}");
    assert_eq!(sim.constraint_violations, 0);

    let cap = Model::new(scn, 1e-12)
        .unwrap()
        .mean_capacity(Regime::General, 1e-8)
        .unwrap();
    let rel = (sim.capacity.mean() - cap.mean_capacity).abs() / cap.mean_capacity;
    assert!(
        rel < 2e-2,
        "capacity {} vs {}",
        sim.capacity.mean(),
        cap.mean_capacity
    );
}

#[test]
fn experiment_csv_round_trips_through_disk() {
    let mut specs = parse_specs(
        r#"
        [defaults.sim]
        samples = 20000
        seed = 5

        [[experiment]]
        figure = "fig5"
        output = "nested/fig5.csv"
        sweep = { lambda_p = [2, 4], p_db = [0] }
        "#,
    )
    .unwrap();
    let spec = specs.remove(0);
    assert_eq!(spec.figure, FigureId::Fig5);
    let dir = tempfile::tempdir().unwrap();
    let path = write_experiment(&spec, dir.path(), true).unwrap();
    let read = CurveTable::read_csv(&path).unwrap();
    let fresh = run_experiment(&spec).unwrap();
    assert_eq!(read, fresh);
    assert_eq!(read.meta("seed"), Some("5"));
    assert!(read.column_names().any(|c| c == "outage_analytic_lp4_p0db"));
    assert!(path.with_extension("gp").exists());
}

#[test]
fn spec_errors_name_the_experiment() {
    let err = parse_specs(
        r#"
        [[experiment]]
        figure = "fig2"

        [[experiment]]
        figure = "fig5"
        scenario = { sigma2 = 1.0, sigma2_db = 0.0 }
        "#,
    )
    .unwrap_err();
    assert!(err.to_string().contains("#2"), "{err}");

    assert!(parse_specs("[[experiment]]\nfigure = \"fig99\"\n").is_err());
    assert!(parse_specs("[[experiment]]\nfigure = \"fig2\"\ncolour = 1\n").is_err());
    assert!(parse_specs("").unwrap().is_empty());
}
