//! The cross-validation suite behind `dynit accept`.
//!
//! Each criterion is a set of [`Check`]s with a measured value and a pinned
//! tolerance; it passes only if every check does. Monte Carlo ECDFs are cached per
//! `(λ_p, p, regime)` so criteria that look at the same simulation share it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::{Arc, Mutex};

use crate::analytic::{
    capacity_by_definition, capacity_fixed_it, log_grid, mean_capacity, outage_fixed_it,
    outage_general, outage_general_variant, outage_high_power, outage_high_power_variant,
    FormulaVariant, Regime, DEFAULT_QUAD_TOL,
};
use crate::distributions::{
    build_series, db_to_linear, psi_pdf, zt_poisson_pmf, MixtureExp, Scenario, DEFAULT_TAIL_TOL,
};
use crate::error::{Error, Result};
use crate::experiments::{psi_bin_edges, write_all, ExperimentSpec, FigureId};
use crate::montecarlo::{
    instantaneous_trace, sample_demand_counts, simulate, SimConfig, SimRegime, DEFAULT_PARTITIONS,
    DEFAULT_SEED,
};
use crate::quadrature::{integrate_semi_infinite, Tolerance, DEFAULT_MAX_SUBDIVISIONS};
use crate::table::strip_timestamp;

/// Tolerances and reference values.
pub mod limits {
    pub const ZT_PMF_2_2: f64 = 0.313;
    pub const ZT_PMF_ANALYTIC_TOL: f64 = 5e-4;
    pub const ZT_PMF_EMPIRICAL_TOL: f64 = 2e-3;
    pub const PSI_NORMALISATION_TOL: f64 = 1e-9;
    pub const OUTAGE_AT_ZERO_MAX: f64 = 1e-6;
    pub const OUTAGE_AT_INF_MIN: f64 = 1.0 - 1e-3;
    pub const SINR_CDF_SUP: f64 = 5e-3;
    pub const PSI_HISTOGRAM_LINF: f64 = 1e-2;
    pub const OUTAGE_SUP: f64 = 1e-2;
    pub const CAPACITY_REL: f64 = 2e-2;
    pub const REGIME_GAP_SUP: f64 = 1e-3;
    pub const TRACE_WIN_FRACTION: f64 = 0.8;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub label: String,
    pub measured: String,
    pub tolerance: String,
    pub passed: bool,
}

impl Check {
    fn at_most(label: impl Into<String>, measured: f64, limit: f64) -> Self {
        Check {
            label: label.into(),
            measured: format!("{measured:.4e}"),
            tolerance: format!("<= {limit:.1e}"),
            passed: measured <= limit,
        }
    }

    fn below(label: impl Into<String>, measured: f64, limit: f64) -> Self {
        Check {
            label: label.into(),
            measured: format!("{measured:.4e}"),
            tolerance: format!("< {limit:.1e}"),
            passed: measured < limit,
        }
    }

    fn at_least(label: impl Into<String>, measured: f64, limit: f64) -> Self {
        Check {
            label: label.into(),
            measured: format!("{measured:.6}"),
            tolerance: format!(">= {limit}"),
            passed: measured >= limit,
        }
    }

    fn holds(label: impl Into<String>, measured: impl Into<String>, passed: bool) -> Self {
        Check {
            label: label.into(),
            measured: measured.into(),
            tolerance: "holds".into(),
            passed,
        }
    }

    fn error(label: impl Into<String>, e: &Error) -> Self {
        Check {
            label: label.into(),
            measured: format!("error: {e}"),
            tolerance: "no error".into(),
            passed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    /// The first failing check, or the last check if all pass.
    pub fn headline(&self) -> Option<&Check> {
        self.checks
            .iter()
            .find(|c| !c.passed)
            .or_else(|| self.checks.last())
    }

    /// One line: verdict, id, title and the headline measurement.
    pub fn summary_line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        match self.headline() {
            Some(h) => format!(
                "[{verdict}] criterion {:>2}: {} | {}: measured {} (tolerance {})",
                self.id, self.title, h.label, h.measured, h.tolerance
            ),
            None => format!(
                "[{verdict}] criterion {:>2}: {} | no checks",
                self.id, self.title
            ),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.summary_line())?;
        for c in &self.checks {
            writeln!(
                f,
                "    {} {}: {} (tolerance {})",
                if c.passed { "ok  " } else { "FAIL" },
                c.label,
                c.measured,
                c.tolerance
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub criteria: Vec<Criterion>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(Criterion::passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.criteria {
            write!(f, "{c}")?;
        }
        let failed = self.criteria.iter().filter(|c| !c.passed()).count();
        writeln!(
            f,
            "{} criteria, {} passed, {} failed",
            self.criteria.len(),
            self.criteria.len() - failed,
            failed
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceConfig {
    pub samples: usize,
    pub seed: u64,
    pub partitions: usize,
    pub tail_tol: f64,
    pub quad_tol: f64,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        AcceptanceConfig {
            samples: 1_000_000,
            seed: DEFAULT_SEED,
            partitions: DEFAULT_PARTITIONS,
            tail_tol: DEFAULT_TAIL_TOL,
            quad_tol: DEFAULT_QUAD_TOL,
        }
    }
}

/// Dense SINR grid for outage comparisons.
pub fn outage_grid() -> Vec<f64> {
    log_grid(1e-4, 1e4, 400)
}

/// `(λ_p, p_dB)` pairs of the outage figures.
pub const OUTAGE_CASES: [(f64, f64); 5] = [
    (2.0, -10.0),
    (2.0, 0.0),
    (2.0, 10.0),
    (3.0, 10.0),
    (4.0, 10.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum RegimeKey {
    General,
    HighPower,
}

type EcdfKey = (u64, u64, RegimeKey);

/// Runs criteria with a shared simulation cache.
pub struct Runner {
    cfg: AcceptanceConfig,
    ecdf_cache: Mutex<BTreeMap<EcdfKey, Arc<Vec<f64>>>>,
}

fn rel_err(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn db_label(v: f64) -> String {
    format!("{v} dB")
}

impl Runner {
    pub fn new(cfg: AcceptanceConfig) -> Self {
        Runner {
            cfg,
            ecdf_cache: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn config(&self) -> &AcceptanceConfig {
        &self.cfg
    }

    fn sim_config(&self, regime: SimRegime) -> SimConfig {
        SimConfig {
            n_samples: self.cfg.samples,
            seed: self.cfg.seed,
            n_partitions: self.cfg.partitions,
            regime,
        }
    }

    fn series(&self, scn: &Scenario) -> Result<crate::TruncatedSeries> {
        build_series(scn, self.cfg.tail_tol)
    }

    /// Empirical `γ_s` CDF on [`outage_grid`].
    fn ecdf(&self, lambda_p: f64, p_db: f64, regime: RegimeKey) -> Result<Arc<Vec<f64>>> {
        let key = (lambda_p.to_bits(), p_db.to_bits(), regime);
        if let Some(v) = self.ecdf_cache.lock().unwrap().get(&key) {
            return Ok(Arc::clone(v));
        }
        let sim_regime = match regime {
            RegimeKey::General => SimRegime::General,
            RegimeKey::HighPower => SimRegime::HighPower,
        };
        let out = simulate(
            &Scenario::reference(lambda_p, p_db),
            &self.sim_config(sim_regime),
        )?;
        let v: Arc<Vec<f64>> =
            Arc::new(outage_grid().iter().map(|&x| out.gamma_s.ecdf(x)).collect());
        self.ecdf_cache.lock().unwrap().insert(key, Arc::clone(&v));
        Ok(v)
    }

    fn sup_against<F: Fn(f64) -> Result<f64>>(&self, ecdf: &[f64], f: F) -> Result<f64> {
        let mut sup = 0.0f64;
        for (&x, &e) in outage_grid().iter().zip(ecdf) {
            sup = sup.max((f(x)? - e).abs());
        }
        Ok(sup)
    }

    fn analytic_curve(&self, lambda_p: f64, p_db: f64) -> Result<Vec<f64>> {
        let scn = Scenario::reference(lambda_p, p_db);
        let series = self.series(&scn)?;
        outage_grid()
            .iter()
            .map(|&x| outage_general(x, &series, &scn))
            .collect()
    }

    pub fn criterion_1(&self) -> Criterion {
        use limits::*;
        let mut checks = Vec::new();
        match zt_poisson_pmf(2, 2.0) {
            Ok(v) => checks.push(Check::at_most(
                "analytic |PMF(2; 2) - 0.313|",
                (v - ZT_PMF_2_2).abs(),
                ZT_PMF_ANALYTIC_TOL,
            )),
            Err(e) => checks.push(Check::error("analytic PMF", &e)),
        }
        match sample_demand_counts(2.0, &self.sim_config(SimRegime::General)) {
            Ok(counts) => {
                let f = counts.get(2).copied().unwrap_or(0) as f64 / self.cfg.samples as f64;
                checks.push(Check::at_most(
                    format!("empirical |P(k=2) - 0.313| at {} draws", self.cfg.samples),
                    (f - ZT_PMF_2_2).abs(),
                    ZT_PMF_EMPIRICAL_TOL,
                ));
                checks.push(Check::holds(
                    "no zero draws",
                    format!("{} zeros", counts.first().copied().unwrap_or(0)),
                    counts.first().copied().unwrap_or(0) == 0,
                ));
            }
            Err(e) => checks.push(Check::error("sampling", &e)),
        }
        Criterion {
            id: 1,
            title: "zero-truncated Poisson point value",
            checks,
        }
    }

    pub fn criterion_2(&self) -> Criterion {
        let mut checks = Vec::new();
        for lambda_p in [2.0, 4.0, 6.0] {
            let scn = Scenario::reference(lambda_p, 10.0);
            let label = format!("|integral of psi pdf - 1|, lambda_p = {lambda_p}");
            let r = self.series(&scn).and_then(|s| {
                let mix = MixtureExp::from_series(&s, &scn);
                integrate_semi_infinite(
                    |x| psi_pdf(x, &mix).unwrap_or(0.0),
                    0.0,
                    Tolerance {
                        abs: 1e-13,
                        rel: 1e-13,
                    },
                    DEFAULT_MAX_SUBDIVISIONS,
                )
            });
            match r {
                Ok(q) => checks.push(Check::at_most(
                    label,
                    (q.value - 1.0).abs(),
                    limits::PSI_NORMALISATION_TOL,
                )),
                Err(e) => checks.push(Check::error(label, &e)),
            }
        }
        Criterion {
            id: 2,
            title: "threshold density integrates to one",
            checks,
        }
    }

    pub fn criterion_3(&self) -> Criterion {
        let scn = Scenario::reference(2.0, 10.0);
        let mut checks = Vec::new();
        let run = || -> Result<Vec<Check>> {
            let series = self.series(&scn)?;
            let lo = outage_general(1e-9, &series, &scn)?;
            let hi = outage_general(1e6, &series, &scn)?;
            let grid = log_grid(1e-9, 1e6, 200);
            let curve = grid
                .iter()
                .map(|&x| outage_general(x, &series, &scn))
                .collect::<Result<Vec<_>>>()?;
            let worst_drop = curve.windows(2).map(|w| w[0] - w[1]).fold(0.0f64, f64::max);
            Ok(vec![
                Check::at_most("F(1e-9)", lo, limits::OUTAGE_AT_ZERO_MAX),
                Check::at_least("F(1e6)", hi, limits::OUTAGE_AT_INF_MIN),
                Check::holds(
                    "nondecreasing on 200-point log grid",
                    format!("largest decrease {worst_drop:.3e}"),
                    worst_drop <= 0.0,
                ),
            ])
        };
        match run() {
            Ok(c) => checks.extend(c),
            Err(e) => checks.push(Check::error("outage evaluation", &e)),
        }
        Criterion {
            id: 3,
            title: "outage CDF limits and monotonicity",
            checks,
        }
    }

    pub fn criterion_4(&self) -> Criterion {
        let lambda_p = 6.0;
        let run = || -> Result<f64> {
            let counts = sample_demand_counts(lambda_p, &self.sim_config(SimRegime::General))?;
            let series = build_series(&Scenario::reference(lambda_p, 10.0), self.cfg.tail_tol)?;
            let n = self.cfg.samples as f64;
            let k_max = series.k_max().max(counts.len());
            let (mut analytic, mut empirical, mut sup) = (0.0, 0.0, 0.0f64);
            for k in 1..=k_max {
                analytic += zt_poisson_pmf(k as u64, lambda_p)?;
                empirical += counts.get(k).copied().unwrap_or(0) as f64 / n;
                sup = sup.max((analytic - empirical).abs());
            }
            Ok(sup)
        };
        let checks = vec![match run() {
            Ok(sup) => Check::below(
                "sup |SINR CDF - ECDF|, lambda_p = 6",
                sup,
                limits::SINR_CDF_SUP,
            ),
            Err(e) => Check::error("SINR CDF", &e),
        }];
        Criterion {
            id: 4,
            title: "primary SINR law vs simulation",
            checks,
        }
    }

    pub fn criterion_5(&self) -> Criterion {
        let edges = psi_bin_edges();
        let mut checks = Vec::new();
        for lambda_p in [2.0, 4.0, 6.0] {
            let scn = Scenario::reference(lambda_p, 10.0);
            let label = format!("binned L-inf psi density, lambda_p = {lambda_p}");
            let run = || -> Result<f64> {
                let mix = MixtureExp::from_series(&self.series(&scn)?, &scn);
                let sim = simulate(&scn, &self.sim_config(SimRegime::General))?;
                let hist = sim.psi.histogram_density(&edges);
                Ok(edges
                    .windows(2)
                    .zip(&hist)
                    .map(|(e, h)| ((mix.cdf(e[1]) - mix.cdf(e[0])) / (e[1] - e[0]) - h).abs())
                    .fold(0.0, f64::max))
            };
            checks.push(match run() {
                Ok(d) => Check::below(label, d, limits::PSI_HISTOGRAM_LINF),
                Err(e) => Check::error(label, &e),
            });
        }
        Criterion {
            id: 5,
            title: "threshold density vs histogram",
            checks,
        }
    }

    pub fn criterion_6(&self) -> Criterion {
        let mut checks = Vec::new();
        let mut curves = BTreeMap::new();
        for (l, p) in OUTAGE_CASES {
            let label = format!("sup |F - ECDF|, lambda_p = {l}, p = {}", db_label(p));
            let run = || -> Result<(f64, Vec<f64>)> {
                let curve = self.analytic_curve(l, p)?;
                let ecdf = self.ecdf(l, p, RegimeKey::General)?;
                let sup = curve
                    .iter()
                    .zip(ecdf.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                Ok((sup, curve))
            };
            match run() {
                Ok((sup, curve)) => {
                    checks.push(Check::below(label, sup, limits::OUTAGE_SUP));
                    curves.insert((l.to_bits(), p.to_bits()), curve);
                }
                Err(e) => checks.push(Check::error(label, &e)),
            }
        }
        let get = |l: f64, p: f64| curves.get(&(f64::to_bits(l), f64::to_bits(p)));
        let ordered = |lower: &[f64], upper: &[f64]| {
            lower
                .iter()
                .zip(upper)
                .map(|(a, b)| a - b)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        if let (Some(m10), Some(z), Some(p10)) = (get(2.0, -10.0), get(2.0, 0.0), get(2.0, 10.0)) {
            let v = ordered(p10, z).max(ordered(z, m10));
            checks.push(Check::holds(
                "F(p=10 dB) <= F(0 dB) <= F(-10 dB) at every grid point",
                format!("worst violation {v:.3e}"),
                v <= 0.0,
            ));
        }
        if let (Some(l2), Some(l3), Some(l4)) = (get(2.0, 10.0), get(3.0, 10.0), get(4.0, 10.0)) {
            let v = ordered(l2, l3).max(ordered(l3, l4));
            checks.push(Check::holds(
                "F(lambda_p=2) <= F(3) <= F(4) at every grid point",
                format!("worst violation {v:.3e}"),
                v <= 0.0,
            ));
        }
        Criterion {
            id: 6,
            title: "general outage vs simulation and orderings",
            checks,
        }
    }

    fn capacity_match(
        &self,
        scn: &Scenario,
        regime: Regime,
        label: String,
    ) -> (Check, Option<f64>) {
        let run = || -> Result<(f64, f64)> {
            let an =
                mean_capacity(regime, &self.series(scn)?, scn, self.cfg.quad_tol)?.mean_capacity;
            let sim_regime = match regime {
                Regime::General => SimRegime::General,
                Regime::HighPower => SimRegime::HighPower,
            };
            let em = simulate(scn, &self.sim_config(sim_regime))?.capacity.mean();
            Ok((an, em))
        };
        match run() {
            Ok((an, em)) => (
                Check::at_most(
                    format!("{label} (analytic {an:.5}, simulated {em:.5})"),
                    rel_err(an, em),
                    limits::CAPACITY_REL,
                ),
                Some(an),
            ),
            Err(e) => (Check::error(label, &e), None),
        }
    }

    /// Capacity vs simulation over a `(λ_p, p)` grid plus monotonicity in both axes.
    fn capacity_grid(
        &self,
        regime: Regime,
        lambdas: &[f64],
        p_dbs: &[f64],
        checks: &mut Vec<Check>,
    ) {
        let mut values = BTreeMap::new();
        for &l in lambdas {
            for &p in p_dbs {
                let label = format!("capacity rel. error, lambda_p = {l}, p = {}", db_label(p));
                let (c, v) = self.capacity_match(&Scenario::reference(l, p), regime, label);
                checks.push(c);
                if let Some(v) = v {
                    values.insert((l.to_bits(), p.to_bits()), v);
                }
            }
        }
        let get = |l: f64, p: f64| values.get(&(l.to_bits(), p.to_bits())).copied();
        let mut worst_l = f64::NEG_INFINITY;
        for &p in p_dbs {
            for w in lambdas.windows(2) {
                if let (Some(a), Some(b)) = (get(w[0], p), get(w[1], p)) {
                    worst_l = worst_l.max(b - a);
                }
            }
        }
        let mut worst_p = f64::NEG_INFINITY;
        for &l in lambdas {
            for w in p_dbs.windows(2) {
                if let (Some(a), Some(b)) = (get(l, w[0]), get(l, w[1])) {
                    worst_p = worst_p.max(a - b);
                }
            }
        }
        if lambdas.len() > 1 {
            checks.push(Check::holds(
                "capacity strictly decreasing in lambda_p",
                format!("largest step {worst_l:.3e}"),
                worst_l < 0.0,
            ));
        }
        if p_dbs.len() > 1 {
            checks.push(Check::holds(
                "capacity strictly increasing in p",
                format!("smallest step {:.3e}", -worst_p),
                worst_p < 0.0,
            ));
        }
    }

    pub fn criterion_7(&self) -> Criterion {
        let mut checks = Vec::new();
        let lambdas: Vec<f64> = (1..=5).map(f64::from).collect();
        self.capacity_grid(Regime::General, &lambdas, &[5.0, 10.0, 15.0], &mut checks);
        let p_dbs: Vec<f64> = (5..=10).map(f64::from).collect();
        self.capacity_grid(Regime::General, &[2.0, 3.0, 4.0], &p_dbs, &mut checks);
        Criterion {
            id: 7,
            title: "mean capacity vs simulation and monotonicity",
            checks,
        }
    }

    pub fn criterion_8(&self) -> Criterion {
        let mut checks = Vec::new();
        for (l, p) in OUTAGE_CASES {
            let label = format!(
                "high-power sup |F - ECDF|, lambda_p = {l}, p = {}",
                db_label(p)
            );
            let run = || -> Result<f64> {
                let scn = Scenario::reference(l, p);
                let series = self.series(&scn)?;
                let ecdf = self.ecdf(l, p, RegimeKey::HighPower)?;
                self.sup_against(&ecdf, |x| outage_high_power(x, &series, &scn))
            };
            checks.push(match run() {
                Ok(sup) => Check::below(label, sup, limits::OUTAGE_SUP),
                Err(e) => Check::error(label, &e),
            });
        }
        let p_dbs: Vec<f64> = (-10..=10).step_by(2).map(f64::from).collect();
        self.capacity_grid(Regime::HighPower, &[2.0, 3.0, 4.0], &p_dbs, &mut checks);
        let lambdas: Vec<f64> = (1..=5).map(f64::from).collect();
        self.capacity_grid(Regime::HighPower, &lambdas, &[5.0, 10.0, 15.0], &mut checks);

        let label = "sup |general - high-power| at p = 40 dB, lambda_p = 2";
        let run = || -> Result<f64> {
            let scn = Scenario::reference(2.0, 40.0);
            let series = self.series(&scn)?;
            let mut sup = 0.0f64;
            for &x in &outage_grid() {
                sup = sup.max(
                    (outage_general(x, &series, &scn)? - outage_high_power(x, &series, &scn)?)
                        .abs(),
                );
            }
            Ok(sup)
        };
        checks.push(match run() {
            Ok(sup) => Check::below(label, sup, limits::REGIME_GAP_SUP),
            Err(e) => Check::error(label, &e),
        });
        Criterion {
            id: 8,
            title: "high-power regime",
            checks,
        }
    }

    pub fn criterion_9(&self) -> Criterion {
        let mut checks = Vec::new();
        let fixed_db = [-5.0, -10.0];
        for l in 1..=6 {
            let l = f64::from(l);
            let scn = Scenario::reference(l, 10.0);
            let run = || -> Result<(f64, Vec<f64>)> {
                let dynamic = mean_capacity(
                    Regime::General,
                    &self.series(&scn)?,
                    &scn,
                    self.cfg.quad_tol,
                )?
                .mean_capacity;
                let fixed = fixed_db
                    .iter()
                    .map(|&d| {
                        capacity_fixed_it(db_to_linear(d), &scn, self.cfg.quad_tol)
                            .map(|c| c.mean_capacity)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((dynamic, fixed))
            };
            match run() {
                Ok((dynamic, fixed)) => {
                    for (d, f) in fixed_db.iter().zip(fixed) {
                        checks.push(Check::holds(
                            format!("capacity dynamic > fixed {d} dB, lambda_p = {l}"),
                            format!("{dynamic:.5} vs {f:.5}"),
                            dynamic > f,
                        ));
                    }
                }
                Err(e) => checks.push(Check::error(format!("capacities, lambda_p = {l}"), &e)),
            }
        }

        let scn = Scenario::reference(1.0, 10.0);
        let run = || -> Result<f64> {
            let series = self.series(&scn)?;
            let mut worst = f64::NEG_INFINITY;
            for &x in &outage_grid() {
                let d = outage_general(x, &series, &scn)?;
                let f5 = outage_fixed_it(x, db_to_linear(-5.0), &scn)?;
                let f10 = outage_fixed_it(x, db_to_linear(-10.0), &scn)?;
                worst = worst.max(d - f5).max(f5 - f10);
            }
            Ok(worst)
        };
        checks.push(match run() {
            Ok(w) => Check::holds(
                "outage dynamic <= fixed -5 dB <= fixed -10 dB, lambda_p = 1",
                format!("worst violation {w:.3e}"),
                w <= 0.0,
            ),
            Err(e) => Check::error("outage ordering", &e),
        });

        let run = || -> Result<Vec<(f64, f64)>> {
            let t = instantaneous_trace(
                &scn,
                &self.sim_config(SimRegime::General),
                30,
                &[-5.0, -10.0],
            )?;
            let dynamic = t
                .column("capacity_dynamic")
                .expect("trace has a dynamic column");
            let mut out = Vec::new();
            for (db, name) in [
                (-5.0, "capacity_fixed_psim5db"),
                (-10.0, "capacity_fixed_psim10db"),
            ] {
                let fixed = t.column(name).expect("trace has the requested baselines");
                let wins = dynamic.iter().zip(fixed).filter(|(d, f)| d >= f).count();
                out.push((db, wins as f64 / dynamic.len() as f64));
            }
            Ok(out)
        };
        match run() {
            Ok(fracs) => {
                for (db, frac) in fracs {
                    checks.push(Check::at_least(
                        format!("30-slot trace: fraction of slots dynamic >= fixed {db} dB"),
                        frac,
                        limits::TRACE_WIN_FRACTION,
                    ));
                }
            }
            Err(e) => checks.push(Check::error("trace", &e)),
        }
        Criterion {
            id: 9,
            title: "dynamic vs fixed threshold",
            checks,
        }
    }

    pub fn criterion_10(&self) -> Criterion {
        let mut checks = Vec::new();
        let tol = self.cfg.quad_tol;
        for (l, p) in [
            (1.0, 10.0),
            (2.0, 10.0),
            (4.0, 0.0),
            (2.0, -10.0),
            (6.0, 15.0),
        ] {
            let scn = Scenario::reference(l, p);
            let label = format!("|split - definition|, lambda_p = {l}, p = {}", db_label(p));
            let run = || -> Result<f64> {
                let series = self.series(&scn)?;
                let split = mean_capacity(Regime::General, &series, &scn, tol)?;
                let direct = capacity_by_definition(&series, &scn, tol)?;
                Ok((split.mean_capacity - direct.mean_capacity).abs())
            };
            checks.push(match run() {
                Ok(d) => Check::at_most(label, d, 2.0 * tol),
                Err(e) => Check::error(label, &e),
            });
        }
        Criterion {
            id: 10,
            title: "capacity decomposition vs definition",
            checks,
        }
    }

    pub fn criterion_11(&self) -> Criterion {
        let mut checks = Vec::new();
        let families: [(&str, Vec<FormulaVariant>, RegimeKey); 2] = [
            (
                "general",
                FormulaVariant::general_candidates(),
                RegimeKey::General,
            ),
            (
                "high-power",
                FormulaVariant::high_power_candidates(),
                RegimeKey::HighPower,
            ),
        ];
        for (name, candidates, regime) in families {
            let mut passing = Vec::new();
            let mut lines = Vec::new();
            for v in &candidates {
                let mut worst = 0.0f64;
                let mut failed = false;
                for (l, p) in OUTAGE_CASES {
                    let scn = Scenario::reference(l, p);
                    let r = self.series(&scn).and_then(|series| {
                        let ecdf = self.ecdf(l, p, regime)?;
                        self.sup_against(&ecdf, |x| match regime {
                            RegimeKey::General => outage_general_variant(x, &series, &scn, *v),
                            RegimeKey::HighPower => outage_high_power_variant(x, &series, &scn, *v),
                        })
                    });
                    match r {
                        Ok(s) => worst = worst.max(s),
                        Err(_) => failed = true,
                    }
                }
                let ok = !failed && worst < limits::OUTAGE_SUP;
                if ok {
                    passing.push(*v);
                }
                lines.push(format!(
                    "{} -> {}",
                    v.label(),
                    if failed {
                        "invalid CDF".to_string()
                    } else {
                        format!("{worst:.3e}")
                    }
                ));
            }
            let chosen = match passing.as_slice() {
                [one] => one.label(),
                [] => "none".into(),
                _ => format!("{} candidates", passing.len()),
            };
            checks.push(Check::holds(
                format!("{name}: exactly one reading within {}", limits::OUTAGE_SUP),
                format!("accepted [{chosen}]; sup distances: {}", lines.join("; ")),
                passing.len() == 1,
            ));
        }
        Criterion {
            id: 11,
            title: "formula-reading resolution",
            checks,
        }
    }

    /// Runs `specs` twice (first into `first_dir` if given) and compares every CSV
    /// byte for byte with the timestamp line removed.
    pub fn criterion_12(&self, specs: &[ExperimentSpec], first_dir: Option<&Path>) -> Criterion {
        let run = || -> Result<Vec<Check>> {
            let scratch_a = tempfile::tempdir().map_err(|e| Error::io("creating temp dir", e))?;
            let scratch_b = tempfile::tempdir().map_err(|e| Error::io("creating temp dir", e))?;
            let dir_a = first_dir.unwrap_or(scratch_a.path());
            let first = write_all(specs, dir_a, false)?;
            let second = write_all(specs, scratch_b.path(), false)?;
            let mut checks = Vec::new();
            for (spec, (a, b)) in specs.iter().zip(first.iter().zip(&second)) {
                let read = |p: &Path| {
                    std::fs::read_to_string(p)
                        .map_err(|e| Error::io(format!("reading {}", p.display()), e))
                };
                let (ta, tb) = (read(a)?, read(b)?);
                let same = strip_timestamp(&ta) == strip_timestamp(&tb);
                checks.push(Check::holds(
                    format!("{} byte-identical across runs", spec.figure),
                    format!("{} bytes", ta.len()),
                    same,
                ));
            }
            Ok(checks)
        };
        let checks = match run() {
            Ok(c) if c.is_empty() => {
                vec![Check::holds("no experiments to compare", "0 files", true)]
            }
            Ok(c) => c,
            Err(e) => vec![Check::error("experiment runs", &e)],
        };
        Criterion {
            id: 12,
            title: "deterministic CSV output",
            checks,
        }
    }
}

/// Which figures each criterion validates.
pub fn criterion_figures(id: u8) -> &'static [FigureId] {
    use FigureId::*;
    match id {
        1 => &[Fig2],
        2 => &[Fig4Psi],
        3 => &[Fig4Outage],
        4 => &[Fig3],
        5 => &[Fig4Psi],
        6 => &[Fig4Outage, Fig5],
        7 => &[Fig6, Fig7],
        8 => &[Fig8, Fig9],
        9 => &[Fig10, Fig11, Fig12],
        10 => &[Fig6, Fig7],
        11 => &[Fig5, Fig8],
        12 => &FigureId::ALL,
        _ => &[],
    }
}

/// Runs every criterion that validates at least one figure in `specs`. Criterion 12
/// writes the spec outputs into `out_dir` (when given) as its first run.
pub fn acceptance_report(
    specs: &[ExperimentSpec],
    cfg: AcceptanceConfig,
    out_dir: Option<&Path>,
) -> Report {
    let runner = Runner::new(cfg);
    let wanted = |id: u8| {
        criterion_figures(id)
            .iter()
            .any(|f| specs.iter().any(|s| s.figure == *f))
    };
    let mut criteria = Vec::new();
    for id in 1..=12u8 {
        if !wanted(id) {
            continue;
        }
        criteria.push(match id {
            1 => runner.criterion_1(),
            2 => runner.criterion_2(),
            3 => runner.criterion_3(),
            4 => runner.criterion_4(),
            5 => runner.criterion_5(),
            6 => runner.criterion_6(),
            7 => runner.criterion_7(),
            8 => runner.criterion_8(),
            9 => runner.criterion_9(),
            10 => runner.criterion_10(),
            11 => runner.criterion_11(),
            _ => runner.criterion_12(specs, out_dir),
        });
    }
    Report { criteria }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_spec_list_gives_passing_empty_report() {
        let r = acceptance_report(&[], AcceptanceConfig::default(), None);
        assert!(r.criteria.is_empty());
        assert!(r.passed());
        assert!(r.to_string().contains("0 criteria"));
    }

    #[test]
    fn criterion_without_checks_fails() {
        let c = Criterion {
            id: 0,
            title: "t",
            checks: vec![],
        };
        assert!(!c.passed());
        assert!(c.summary_line().starts_with("[FAIL]"));
    }

    #[test]
    fn cheap_criteria_pass_at_small_sample_size() {
        let runner = Runner::new(AcceptanceConfig {
            samples: 20_000,
            ..AcceptanceConfig::default()
        });
        for c in [
            runner.criterion_2(),
            runner.criterion_3(),
            runner.criterion_10(),
        ] {
            assert!(c.passed(), "{c}");
        }
    }
}
