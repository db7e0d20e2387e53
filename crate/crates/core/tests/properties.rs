use dynit::analytic::{cdf_ptx, cdf_t, mean_capacity, outage_fixed_it, outage_general, Regime};
use dynit::distributions::{build_series, psi_cdf, MixtureExp, Scenario};
use dynit::montecarlo::{ChannelDraw, EmpiricalDist, SimRegime};
use dynit::CurveTable;
use proptest::prelude::*;

fn scenario() -> impl Strategy<Value = Scenario> {
    (
        0.2f64..8.0,
        0.05f64..2.0,
        0.05f64..2.0,
        0.05f64..2.0,
        0.05f64..2.0,
        0.1f64..5.0,
        -15.0f64..35.0,
    )
        .prop_map(|(lp, pp, sp, ss, ps, s2, p_db)| {
            Scenario::new(lp, pp, sp, ss, ps, s2, 10f64.powf(p_db / 10.0)).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_weights_are_a_subprobability(scn in scenario()) {
        let s = build_series(&scn, 1e-12).unwrap();
        prop_assert!(s.k_max() >= 1);
        prop_assert!(s.weights().iter().all(|&w| w >= 0.0));
        prop_assert!(s.alphas().windows(2).all(|a| a[0] < a[1]));
        prop_assert!((s.total_mass() - 1.0).abs() < 1e-9);
        prop_assert!(s.tail_mass() < 1e-12);
    }

    #[test]
    fn outage_is_a_cdf(scn in scenario(), a in -4.0f64..4.0, b in -4.0f64..4.0) {
        let s = build_series(&scn, 1e-12).unwrap();
        let (lo, hi) = (10f64.powf(a.min(b)), 10f64.powf(a.max(b)));
        let f_lo = outage_general(lo, &s, &scn).unwrap();
        let f_hi = outage_general(hi, &s, &scn).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f_lo));
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f_hi));
        prop_assert!(f_lo <= f_hi + 1e-10, "F({lo}) = {f_lo} > F({hi}) = {f_hi}");
    }

    #[test]
    fn outage_nondecreasing_in_demand_rate(scn in scenario(), a in -3.0f64..3.0, d in 0.1f64..3.0) {
        let x = 10f64.powf(a);
        let lo = scn.with_lambda_p(scn.lambda_p);
        let hi = scn.with_lambda_p(scn.lambda_p + d);
        let f_lo = outage_general(x, &build_series(&lo, 1e-12).unwrap(), &lo).unwrap();
        let f_hi = outage_general(x, &build_series(&hi, 1e-12).unwrap(), &hi).unwrap();
        prop_assert!(f_lo <= f_hi + 1e-9);
    }

    #[test]
    fn clipping_never_lowers_the_power_cdf(scn in scenario(), a in -4.0f64..4.0) {
        let s = build_series(&scn, 1e-12).unwrap();
        let x = 10f64.powf(a);
        prop_assert!(cdf_ptx(x, &s, &scn) + 1e-12 >= cdf_t(x, &s, &scn));
        if x >= scn.p_peak {
            prop_assert_eq!(cdf_ptx(x, &s, &scn), 1.0);
        }
    }

    #[test]
    fn psi_cdf_is_monotone(scn in scenario(), a in -4.0f64..4.0, b in 0.0f64..2.0) {
        let s = build_series(&scn, 1e-12).unwrap();
        let mix = MixtureExp::from_series(&s, &scn);
        let x = 10f64.powf(a);
        prop_assert!(psi_cdf(x, &mix) <= psi_cdf(x * 10f64.powf(b), &mix) + 1e-15);
    }

    #[test]
    fn fixed_threshold_outage_is_a_cdf(scn in scenario(), a in -3.0f64..3.0, psi_db in -20.0f64..20.0) {
        let psi = 10f64.powf(psi_db / 10.0);
        let x = 10f64.powf(a);
        let f = outage_fixed_it(x, psi, &scn).unwrap();
        let g = outage_fixed_it(2.0 * x, psi, &scn).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(f <= g + 1e-12);
    }

    #[test]
    fn draw_pipeline_respects_constraints(
        scn in scenario(),
        g in prop::array::uniform4(1e-3f64..20.0),
        c in 1u64..12,
    ) {
        let d = ChannelDraw::from_inputs(&scn, g[0], g[1], g[2], g[3], c, SimRegime::General);
        prop_assert!((d.gamma_p - (c as f64).exp_m1()).abs() <= 1e-12 * d.gamma_p);
        prop_assert!(d.p_tx <= scn.p_peak);
        prop_assert!(d.it_constraint_holds());
        prop_assert!(d.capacity() >= 0.0);
        let hp = d.under(&scn, SimRegime::HighPower);
        prop_assert!(hp.p_tx >= d.p_tx);
        prop_assert!(hp.it_constraint_holds());
    }

    #[test]
    fn ecdf_is_a_step_cdf(mut xs in prop::collection::vec(-1e3f64..1e3, 1..200), probe in -2e3f64..2e3) {
        let d = EmpiricalDist::new(xs.clone()).unwrap();
        xs.sort_by(f64::total_cmp);
        let below = xs.iter().filter(|&&v| v <= probe).count();
        prop_assert_eq!(d.ecdf(probe), below as f64 / xs.len() as f64);
        prop_assert_eq!(d.ecdf(xs[xs.len() - 1]), 1.0);
        prop_assert!(d.ecdf(probe) <= d.ecdf(probe + 1.0));
    }

    #[test]
    fn table_round_trips_bit_exactly(
        cols in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 5), 1..5),
    ) {
        let mut t = CurveTable::new();
        for (i, c) in cols.iter().enumerate() {
            t.push_column(format!("c{i}"), c.clone()).unwrap();
        }
        t.set_meta("seed", 7);
        let back = CurveTable::from_csv_str(&t.to_csv_string().unwrap()).unwrap();
        prop_assert_eq!(back, t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn capacity_is_nonnegative_and_grows_with_power(lp in 0.5f64..6.0, p_db in -10.0f64..20.0) {
        let a = Scenario::reference(lp, p_db);
        let b = Scenario::reference(lp, p_db + 3.0);
        let ca = mean_capacity(Regime::General, &build_series(&a, 1e-12).unwrap(), &a, 1e-8).unwrap();
        let cb = mean_capacity(Regime::General, &build_series(&b, 1e-12).unwrap(), &b, 1e-8).unwrap();
        prop_assert!(ca.mean_capacity >= 0.0);
        prop_assert!(ca.quad_abs_err <= 1e-8);
        prop_assert!(cb.mean_capacity > ca.mean_capacity);
    }
}
