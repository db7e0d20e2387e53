//! Figure reproduction: experiment spec files in, [`CurveTable`] CSVs out.
//!
//! A spec file is TOML with one `[[experiment]]` table per figure:
//!
//! ```toml
//! [defaults.sim]
//! samples = 1000000
//! seed = 7
//!
//! [[experiment]]
//! figure = "fig5"
//! output = "fig5.csv"
//! sweep = { lambda_p = [2, 3, 4], p_db = [10] }
//! scenario = { lambda_ss = 0.2, sigma2_db = 0 }
//! ```
//!
//! Keys ending in `_db` are converted to linear units on load. Anything omitted falls
//! back to the reference channel set and the figure's default sweep.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{
    capacity_fixed_it, log_grid, mean_capacity, outage_fixed_it, outage_general, Regime,
    DEFAULT_QUAD_TOL, MAX_QUAD_TOL,
};
use crate::distributions::{
    build_series, db_to_linear, poisson_pmf, zt_poisson_pmf, MixtureExp, Scenario,
    DEFAULT_TAIL_TOL, MAX_TAIL_TOL,
};
use crate::error::{Error, Result};
use crate::montecarlo::{
    instantaneous_trace, num_tag, sample_demand_counts, simulate, SimConfig, SimRegime,
    DEFAULT_PARTITIONS, DEFAULT_SEED,
};
use crate::table::CurveTable;

pub const PROVENANCE: &str = concat!("dynit ", env!("CARGO_PKG_VERSION"));
pub const DEFAULT_SAMPLES: usize = 1_000_000;

/// SINR grid shared by every outage figure.
pub fn sinr_grid() -> Vec<f64> {
    log_grid(1e-3, 1e3, 50)
}

/// Bin edges for the `ψ` density figure.
pub fn psi_bin_edges() -> Vec<f64> {
    (0..=200).map(|i| 0.5 * i as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig4Psi,
    Fig4Outage,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
    Fig11,
    Fig12,
}

impl FigureId {
    pub const ALL: [FigureId; 12] = [
        FigureId::Fig2,
        FigureId::Fig3,
        FigureId::Fig4Psi,
        FigureId::Fig4Outage,
        FigureId::Fig5,
        FigureId::Fig6,
        FigureId::Fig7,
        FigureId::Fig8,
        FigureId::Fig9,
        FigureId::Fig10,
        FigureId::Fig11,
        FigureId::Fig12,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4Psi => "fig4_psi",
            FigureId::Fig4Outage => "fig4_outage",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig7 => "fig7",
            FigureId::Fig8 => "fig8",
            FigureId::Fig9 => "fig9",
            FigureId::Fig10 => "fig10",
            FigureId::Fig11 => "fig11",
            FigureId::Fig12 => "fig12",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            FigureId::Fig2 => "Poisson vs zero-truncated Poisson demand PMF",
            FigureId::Fig3 => "primary SINR PMF and CDF",
            FigureId::Fig4Psi => "interference-plus-noise threshold density",
            FigureId::Fig4Outage => "SU outage vs SINR for several peak powers",
            FigureId::Fig5 => "SU outage vs SINR for several demand rates",
            FigureId::Fig6 => "mean capacity vs demand rate",
            FigureId::Fig7 => "mean capacity vs peak power",
            FigureId::Fig8 => "high-power mean capacity vs peak power",
            FigureId::Fig9 => "high-power mean capacity vs demand rate",
            FigureId::Fig10 => "mean capacity, dynamic vs fixed threshold",
            FigureId::Fig11 => "per-slot capacity trace, dynamic vs fixed threshold",
            FigureId::Fig12 => "outage, dynamic vs fixed threshold",
        }
    }

    fn uses_p(self) -> bool {
        !matches!(self, FigureId::Fig2 | FigureId::Fig3)
    }

    fn uses_psi_fixed(self) -> bool {
        matches!(self, FigureId::Fig10 | FigureId::Fig11 | FigureId::Fig12)
    }

    pub fn default_sweeps(self) -> Sweeps {
        let range = |lo: i32, hi: i32, step: usize| -> Vec<f64> {
            (lo..=hi).step_by(step).map(f64::from).collect()
        };
        let fixed = vec![-10.0, -5.0];
        let (lambda_p, p_db, psi_fixed_db) = match self {
            FigureId::Fig2 => (vec![0.5, 1.0, 2.0], vec![], vec![]),
            FigureId::Fig3 => (vec![6.0], vec![], vec![]),
            FigureId::Fig4Psi => (vec![2.0, 4.0, 6.0], vec![10.0], vec![]),
            FigureId::Fig4Outage => (vec![2.0], vec![-10.0, 0.0, 10.0], vec![]),
            FigureId::Fig5 => (vec![2.0, 3.0, 4.0], vec![10.0], vec![]),
            FigureId::Fig6 | FigureId::Fig9 => (range(1, 5, 1), vec![5.0, 10.0, 15.0], vec![]),
            FigureId::Fig7 => (vec![2.0, 3.0, 4.0], range(5, 10, 1), vec![]),
            FigureId::Fig8 => (vec![2.0, 3.0, 4.0], range(-10, 10, 2), vec![]),
            FigureId::Fig10 => (range(1, 6, 1), vec![10.0], fixed),
            FigureId::Fig11 | FigureId::Fig12 => (vec![1.0], vec![10.0], fixed),
        };
        Sweeps {
            lambda_p,
            p_db,
            psi_fixed_db,
            slots: if self == FigureId::Fig11 { 30 } else { 0 },
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure id {s:?}")))
    }
}

/// Swept parameter lists. `p_db` and `psi_fixed_db` are in dB.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweeps {
    pub lambda_p: Vec<f64>,
    pub p_db: Vec<f64>,
    pub psi_fixed_db: Vec<f64>,
    /// Trace length for the per-slot figure, 0 elsewhere.
    pub slots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub figure: FigureId,
    /// Base channel set; swept fields are overwritten per curve.
    pub scenario: Scenario,
    pub sweeps: Sweeps,
    pub sim: SimConfig,
    pub tail_tol: f64,
    pub quad_tol: f64,
    /// Relative paths are resolved against the output directory.
    pub output: PathBuf,
}

impl ExperimentSpec {
    pub fn default_for(figure: FigureId) -> Self {
        ExperimentSpec {
            figure,
            scenario: Scenario::reference(2.0, 10.0),
            sweeps: figure.default_sweeps(),
            sim: SimConfig {
                n_samples: DEFAULT_SAMPLES,
                seed: DEFAULT_SEED,
                n_partitions: DEFAULT_PARTITIONS,
                regime: SimRegime::General,
            },
            tail_tol: DEFAULT_TAIL_TOL,
            quad_tol: DEFAULT_QUAD_TOL,
            output: PathBuf::from(format!("{figure}.csv")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fig = self.figure;
        let err = |msg: String| Err(Error::Config(format!("{fig}: {msg}")));
        self.scenario.validate()?;
        self.sim.validate()?;
        let s = &self.sweeps;
        if s.lambda_p.is_empty() {
            return err("sweep lambda_p is empty".into());
        }
        if let Some(l) = s.lambda_p.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return err(format!("lambda_p values must be > 0, got {l}"));
        }
        match (fig.uses_p(), s.p_db.is_empty()) {
            (true, true) => return err("sweep p_db is empty".into()),
            (false, false) => return err("does not sweep p_db".into()),
            _ => {}
        }
        match (fig.uses_psi_fixed(), s.psi_fixed_db.is_empty()) {
            (true, true) => return err("sweep psi_fixed_db is empty".into()),
            (false, false) => return err("does not sweep psi_fixed_db".into()),
            _ => {}
        }
        if s.p_db.iter().chain(&s.psi_fixed_db).any(|v| !v.is_finite()) {
            return err("dB values must be finite".into());
        }
        if fig == FigureId::Fig11 {
            if s.slots == 0 {
                return err("slots must be >= 1".into());
            }
            if s.lambda_p.len() != 1 || s.p_db.len() != 1 {
                return err("takes exactly one lambda_p and one p_db".into());
            }
        } else if s.slots != 0 {
            return err("does not take slots".into());
        }
        if !(self.tail_tol > 0.0 && self.tail_tol <= MAX_TAIL_TOL) {
            return err(format!("tail_tol must be in (0, {MAX_TAIL_TOL}]"));
        }
        if !(self.quad_tol > 0.0 && self.quad_tol <= MAX_QUAD_TOL) {
            return err(format!("quad_tol must be in (0, {MAX_QUAD_TOL}]"));
        }
        Ok(())
    }

    /// SHA-256 over every input that influences the table, hex encoded.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            figure: &'a str,
            scenario: &'a Scenario,
            sweeps: &'a Sweeps,
            samples: usize,
            seed: u64,
            partitions: usize,
            tail_tol: f64,
            quad_tol: f64,
        }
        let c = Canonical {
            figure: self.figure.as_str(),
            scenario: &self.scenario,
            sweeps: &self.sweeps,
            samples: self.sim.n_samples,
            seed: self.sim.seed,
            partitions: self.sim.n_partitions,
            tail_tol: self.tail_tol,
            quad_tol: self.quad_tol,
        };
        let text = toml::to_string(&c).expect("plain data always serialises");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Every figure with its default sweep.
pub fn default_specs() -> Vec<ExperimentSpec> {
    FigureId::ALL
        .into_iter()
        .map(ExperimentSpec::default_for)
        .collect()
}

// ---------------------------------------------------------------------------
// spec files

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    defaults: RawDefaults,
    #[serde(default)]
    experiment: Vec<RawExperiment>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDefaults {
    scenario: Option<RawScenario>,
    sim: Option<RawSim>,
    tail_tol: Option<f64>,
    quad_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    figure: String,
    output: Option<PathBuf>,
    scenario: Option<RawScenario>,
    sweep: Option<RawSweep>,
    sim: Option<RawSim>,
    tail_tol: Option<f64>,
    quad_tol: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    lambda_p: Option<f64>,
    lambda_pp: Option<f64>,
    lambda_sp: Option<f64>,
    lambda_ss: Option<f64>,
    lambda_ps: Option<f64>,
    sigma2: Option<f64>,
    sigma2_db: Option<f64>,
    p: Option<f64>,
    p_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    lambda_p: Option<Vec<f64>>,
    p_db: Option<Vec<f64>>,
    psi_fixed_db: Option<Vec<f64>>,
    slots: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    samples: Option<usize>,
    seed: Option<u64>,
    partitions: Option<usize>,
}

fn linear_or_db(name: &str, linear: Option<f64>, db: Option<f64>) -> Result<Option<f64>> {
    match (linear, db) {
        (Some(_), Some(_)) => Err(Error::Config(format!("both {name} and {name}_db given"))),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(d)) => Ok(Some(db_to_linear(d))),
        (None, None) => Ok(None),
    }
}

fn apply_scenario(base: &mut Scenario, raw: &RawScenario) -> Result<()> {
    let fields = [
        (&mut base.lambda_p, raw.lambda_p),
        (&mut base.lambda_pp, raw.lambda_pp),
        (&mut base.lambda_sp, raw.lambda_sp),
        (&mut base.lambda_ss, raw.lambda_ss),
        (&mut base.lambda_ps, raw.lambda_ps),
    ];
    for (slot, v) in fields {
        if let Some(v) = v {
            *slot = v;
        }
    }
    if let Some(v) = linear_or_db("sigma2", raw.sigma2, raw.sigma2_db)? {
        base.sigma2 = v;
    }
    if let Some(v) = linear_or_db("p", raw.p, raw.p_db)? {
        base.p_peak = v;
    }
    Ok(())
}

fn apply_sim(base: &mut SimConfig, raw: &RawSim) {
    if let Some(n) = raw.samples {
        base.n_samples = n;
    }
    if let Some(s) = raw.seed {
        base.seed = s;
    }
    if let Some(p) = raw.partitions {
        base.n_partitions = p;
    }
}

/// Parses a spec file. An empty file yields an empty list.
pub fn parse_specs(text: &str) -> Result<Vec<ExperimentSpec>> {
    let raw: RawFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    raw.experiment
        .iter()
        .enumerate()
        .map(|(i, ex)| {
            let figure: FigureId = ex.figure.parse()?;
            let mut spec = ExperimentSpec::default_for(figure);
            let ctx = |e: Error| e.context(format!("experiment #{} ({figure})", i + 1));
            for raw_scn in [&raw.defaults.scenario, &ex.scenario].into_iter().flatten() {
                apply_scenario(&mut spec.scenario, raw_scn).map_err(ctx)?;
            }
            for raw_sim in [&raw.defaults.sim, &ex.sim].into_iter().flatten() {
                apply_sim(&mut spec.sim, raw_sim);
            }
            if let Some(t) = ex.tail_tol.or(raw.defaults.tail_tol) {
                spec.tail_tol = t;
            }
            if let Some(t) = ex.quad_tol.or(raw.defaults.quad_tol) {
                spec.quad_tol = t;
            }
            if let Some(sw) = &ex.sweep {
                if let Some(v) = &sw.lambda_p {
                    spec.sweeps.lambda_p = v.clone();
                }
                if let Some(v) = &sw.p_db {
                    spec.sweeps.p_db = v.clone();
                }
                if let Some(v) = &sw.psi_fixed_db {
                    spec.sweeps.psi_fixed_db = v.clone();
                }
                if let Some(v) = sw.slots {
                    spec.sweeps.slots = v;
                }
            }
            if let Some(out) = &ex.output {
                spec.output = out.clone();
            }
            spec.validate().map_err(ctx)?;
            Ok(spec)
        })
        .collect()
}

pub fn load_specs(path: &Path) -> Result<Vec<ExperimentSpec>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_specs(&text).map_err(|e| e.context(path.display().to_string()))
}

/// Command-line overrides applied on top of spec files.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tail_tol: Option<f64>,
    pub quad_tol: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, spec: &mut ExperimentSpec) -> Result<()> {
        if let Some(s) = self.seed {
            spec.sim.seed = s;
        }
        if let Some(n) = self.samples {
            spec.sim.n_samples = n;
        }
        if let Some(t) = self.tail_tol {
            spec.tail_tol = t;
        }
        if let Some(t) = self.quad_tol {
            spec.quad_tol = t;
        }
        spec.validate()
    }
}

// ---------------------------------------------------------------------------
// running

fn lp_tag(l: f64) -> String {
    format!("lp{}", num_tag(l))
}

fn p_tag(p_db: f64) -> String {
    format!("p{}db", num_tag(p_db))
}

fn psi_tag(psi_db: f64) -> String {
    format!("psi{}db", num_tag(psi_db))
}

struct Ctx<'a> {
    spec: &'a ExperimentSpec,
}

impl Ctx<'_> {
    fn scenario(&self, lambda_p: f64, p_db: f64) -> Scenario {
        self.spec.scenario.with_lambda_p(lambda_p).with_p_db(p_db)
    }

    fn sim(&self, regime: SimRegime) -> SimConfig {
        self.spec.sim.with_regime(regime)
    }

    fn at(&self, what: String) -> impl Fn(Error) -> Error + '_ {
        move |e| e.context(format!("{} {what}", self.spec.figure))
    }

    fn sim_count_frequencies(&self, lambda_p: f64, ks: &[u64]) -> Result<Vec<f64>> {
        let counts = sample_demand_counts(lambda_p, &self.spec.sim)?;
        let n = self.spec.sim.n_samples as f64;
        Ok(ks
            .iter()
            .map(|&k| counts.get(k as usize).copied().unwrap_or(0) as f64 / n)
            .collect())
    }

    fn fig2(&self, t: &mut CurveTable) -> Result<()> {
        let ks: Vec<u64> = (0..=10).collect();
        t.push_column("k", ks.iter().map(|&k| k as f64).collect())?;
        for &l in &self.spec.sweeps.lambda_p {
            let tag = lp_tag(l);
            t.push_column(
                format!("poisson_pmf_{tag}"),
                ks.iter().map(|&k| poisson_pmf(k, l)).collect(),
            )?;
            let zt = ks
                .iter()
                .map(|&k| {
                    if k == 0 {
                        Ok(0.0)
                    } else {
                        zt_poisson_pmf(k, l)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            t.push_column(format!("zt_pmf_analytic_{tag}"), zt)?;
            t.push_column(
                format!("zt_pmf_empirical_{tag}"),
                self.sim_count_frequencies(l, &ks)?,
            )?;
        }
        Ok(())
    }

    fn fig3(&self, t: &mut CurveTable) -> Result<()> {
        let k_max = self
            .spec
            .sweeps
            .lambda_p
            .iter()
            .map(|&l| build_series(&self.spec.scenario.with_lambda_p(l), 1e-9).map(|s| s.k_max()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or(1) as u64;
        let ks: Vec<u64> = (1..=k_max).collect();
        t.push_column("k", ks.iter().map(|&k| k as f64).collect())?;
        t.push_column("sinr", ks.iter().map(|&k| (k as f64).exp_m1()).collect())?;
        let cumsum = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .scan(0.0, |acc, x| {
                    *acc += x;
                    Some(*acc)
                })
                .collect()
        };
        for &l in &self.spec.sweeps.lambda_p {
            let tag = lp_tag(l);
            let pmf = ks
                .iter()
                .map(|&k| zt_poisson_pmf(k, l))
                .collect::<Result<Vec<_>>>()?;
            let emp = self.sim_count_frequencies(l, &ks)?;
            t.push_column(format!("sinr_cdf_analytic_{tag}"), cumsum(&pmf))?;
            t.push_column(format!("sinr_cdf_empirical_{tag}"), cumsum(&emp))?;
            t.push_column(format!("sinr_pmf_analytic_{tag}"), pmf)?;
            t.push_column(format!("sinr_pmf_empirical_{tag}"), emp)?;
        }
        Ok(())
    }

    fn fig4_psi(&self, t: &mut CurveTable) -> Result<()> {
        let edges = psi_bin_edges();
        t.push_column(
            "psi",
            edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect(),
        )?;
        for &p_db in &self.spec.sweeps.p_db {
            for &l in &self.spec.sweeps.lambda_p {
                let scn = self.scenario(l, p_db);
                let tag = format!("{}_{}", lp_tag(l), p_tag(p_db));
                let mix = MixtureExp::from_series(&build_series(&scn, self.spec.tail_tol)?, &scn);
                t.push_column(
                    format!("psi_pdf_analytic_{tag}"),
                    edges
                        .windows(2)
                        .map(|e| (mix.cdf(e[1]) - mix.cdf(e[0])) / (e[1] - e[0]))
                        .collect(),
                )?;
                let sim = simulate(&scn, &self.sim(SimRegime::General))?;
                t.push_column(
                    format!("psi_pdf_empirical_{tag}"),
                    sim.psi.histogram_density(&edges),
                )?;
            }
        }
        Ok(())
    }

    fn outage_curves(&self, t: &mut CurveTable) -> Result<()> {
        let grid = sinr_grid();
        t.push_column("sinr", grid.clone())?;
        for &p_db in &self.spec.sweeps.p_db {
            for &l in &self.spec.sweeps.lambda_p {
                let scn = self.scenario(l, p_db);
                let tag = format!("{}_{}", lp_tag(l), p_tag(p_db));
                let series = build_series(&scn, self.spec.tail_tol)?;
                let analytic = grid
                    .iter()
                    .map(|&x| {
                        outage_general(x, &series, &scn)
                            .map_err(self.at(format!("at x = {x}, {tag}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let sim = simulate(&scn, &self.sim(SimRegime::General))?;
                t.push_column(format!("outage_analytic_{tag}"), analytic)?;
                t.push_column(
                    format!("outage_empirical_{tag}"),
                    grid.iter().map(|&x| sim.gamma_s.ecdf(x)).collect(),
                )?;
            }
        }
        Ok(())
    }

    fn capacity_pair(&self, scn: &Scenario, regime: Regime, tag: &str) -> Result<(f64, f64)> {
        let series = build_series(scn, self.spec.tail_tol)?;
        let analytic = mean_capacity(regime, &series, scn, self.spec.quad_tol)
            .map_err(self.at(tag.to_string()))?
            .mean_capacity;
        let sim_regime = match regime {
            Regime::General => SimRegime::General,
            Regime::HighPower => SimRegime::HighPower,
        };
        let empirical = simulate(scn, &self.sim(sim_regime))?.capacity.mean();
        Ok((analytic, empirical))
    }

    /// Capacity against one sweep axis, one curve per value of the other.
    fn capacity_curves(
        &self,
        t: &mut CurveTable,
        regime: Regime,
        axis_is_lambda: bool,
    ) -> Result<()> {
        let sw = &self.spec.sweeps;
        let (axis, curves) = if axis_is_lambda {
            (&sw.lambda_p, &sw.p_db)
        } else {
            (&sw.p_db, &sw.lambda_p)
        };
        t.push_column(
            if axis_is_lambda { "lambda_p" } else { "p_db" },
            axis.clone(),
        )?;
        let prefix = match regime {
            Regime::General => "capacity",
            Regime::HighPower => "capacity_hp",
        };
        for &c in curves {
            let tag = if axis_is_lambda { p_tag(c) } else { lp_tag(c) };
            let mut analytic = Vec::with_capacity(axis.len());
            let mut empirical = Vec::with_capacity(axis.len());
            for &a in axis {
                let (l, p) = if axis_is_lambda { (a, c) } else { (c, a) };
                let point = format!("{}_{}", lp_tag(l), p_tag(p));
                let (an, em) = self.capacity_pair(&self.scenario(l, p), regime, &point)?;
                analytic.push(an);
                empirical.push(em);
            }
            t.push_column(format!("{prefix}_analytic_{tag}"), analytic)?;
            t.push_column(format!("{prefix}_empirical_{tag}"), empirical)?;
        }
        Ok(())
    }

    fn fig10(&self, t: &mut CurveTable) -> Result<()> {
        let sw = &self.spec.sweeps;
        t.push_column("lambda_p", sw.lambda_p.clone())?;
        for &p_db in &sw.p_db {
            let ptag = p_tag(p_db);
            let mut an = Vec::new();
            let mut em = Vec::new();
            for &l in &sw.lambda_p {
                let point = format!("{}_{ptag}", lp_tag(l));
                let (a, e) =
                    self.capacity_pair(&self.scenario(l, p_db), Regime::General, &point)?;
                an.push(a);
                em.push(e);
            }
            t.push_column(format!("capacity_dynamic_analytic_{ptag}"), an)?;
            t.push_column(format!("capacity_dynamic_empirical_{ptag}"), em)?;
            for &psi_db in &sw.psi_fixed_db {
                let psi = db_to_linear(psi_db);
                let tag = format!("{}_{ptag}", psi_tag(psi_db));
                let mut an = Vec::new();
                let mut em = Vec::new();
                for &l in &sw.lambda_p {
                    let scn = self.scenario(l, p_db);
                    an.push(
                        capacity_fixed_it(psi, &scn, self.spec.quad_tol)
                            .map_err(self.at(tag.clone()))?
                            .mean_capacity,
                    );
                    em.push(
                        simulate(&scn, &self.sim(SimRegime::FixedIt(psi)))?
                            .capacity
                            .mean(),
                    );
                }
                t.push_column(format!("capacity_fixed_analytic_{tag}"), an)?;
                t.push_column(format!("capacity_fixed_empirical_{tag}"), em)?;
            }
        }
        Ok(())
    }

    fn fig11(&self) -> Result<CurveTable> {
        let sw = &self.spec.sweeps;
        let scn = self.scenario(sw.lambda_p[0], sw.p_db[0]);
        instantaneous_trace(&scn, &self.spec.sim, sw.slots, &sw.psi_fixed_db)
    }

    fn fig12(&self, t: &mut CurveTable) -> Result<()> {
        let grid = sinr_grid();
        t.push_column("sinr", grid.clone())?;
        let sw = &self.spec.sweeps;
        for &p_db in &sw.p_db {
            for &l in &sw.lambda_p {
                let scn = self.scenario(l, p_db);
                let tag = format!("{}_{}", lp_tag(l), p_tag(p_db));
                let series = build_series(&scn, self.spec.tail_tol)?;
                let dynamic = grid
                    .iter()
                    .map(|&x| {
                        outage_general(x, &series, &scn).map_err(self.at(format!("at x = {x}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let sim = simulate(&scn, &self.sim(SimRegime::General))?;
                t.push_column(format!("outage_dynamic_analytic_{tag}"), dynamic)?;
                t.push_column(
                    format!("outage_dynamic_empirical_{tag}"),
                    grid.iter().map(|&x| sim.gamma_s.ecdf(x)).collect(),
                )?;
                for &psi_db in &sw.psi_fixed_db {
                    let psi = db_to_linear(psi_db);
                    let ftag = format!("{}_{tag}", psi_tag(psi_db));
                    let fixed = grid
                        .iter()
                        .map(|&x| {
                            outage_fixed_it(x, psi, &scn).map_err(self.at(format!("at x = {x}")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let sim = simulate(&scn, &self.sim(SimRegime::FixedIt(psi)))?;
                    t.push_column(format!("outage_fixed_analytic_{ftag}"), fixed)?;
                    t.push_column(
                        format!("outage_fixed_empirical_{ftag}"),
                        grid.iter().map(|&x| sim.gamma_s.ecdf(x)).collect(),
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Runs one experiment. The returned table carries no timestamp.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<CurveTable> {
    spec.validate()?;
    let ctx = Ctx { spec };
    let mut t = CurveTable::new();
    match spec.figure {
        FigureId::Fig2 => ctx.fig2(&mut t)?,
        FigureId::Fig3 => ctx.fig3(&mut t)?,
        FigureId::Fig4Psi => ctx.fig4_psi(&mut t)?,
        FigureId::Fig4Outage | FigureId::Fig5 => ctx.outage_curves(&mut t)?,
        FigureId::Fig6 => ctx.capacity_curves(&mut t, Regime::General, true)?,
        FigureId::Fig7 => ctx.capacity_curves(&mut t, Regime::General, false)?,
        FigureId::Fig8 => ctx.capacity_curves(&mut t, Regime::HighPower, false)?,
        FigureId::Fig9 => ctx.capacity_curves(&mut t, Regime::HighPower, true)?,
        FigureId::Fig10 => ctx.fig10(&mut t)?,
        FigureId::Fig11 => t = ctx.fig11()?,
        FigureId::Fig12 => ctx.fig12(&mut t)?,
    }
    let mut meta = BTreeMap::new();
    let s = &spec.scenario;
    meta.insert("figure", spec.figure.to_string());
    meta.insert("provenance", PROVENANCE.to_string());
    meta.insert("scenario_sha256", spec.fingerprint());
    meta.insert("seed", spec.sim.seed.to_string());
    meta.insert("samples", spec.sim.n_samples.to_string());
    meta.insert("partitions", spec.sim.n_partitions.to_string());
    meta.insert("tail_tol", spec.tail_tol.to_string());
    meta.insert("quad_tol", spec.quad_tol.to_string());
    meta.insert(
        "scenario",
        format!(
            "lambda_pp={} lambda_sp={} lambda_ss={} lambda_ps={} sigma2={}",
            s.lambda_pp, s.lambda_sp, s.lambda_ss, s.lambda_ps, s.sigma2
        ),
    );
    let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
    meta.insert("sweep_lambda_p", list(&spec.sweeps.lambda_p));
    if !spec.sweeps.p_db.is_empty() {
        meta.insert("sweep_p_db", list(&spec.sweeps.p_db));
    }
    if !spec.sweeps.psi_fixed_db.is_empty() {
        meta.insert("sweep_psi_fixed_db", list(&spec.sweeps.psi_fixed_db));
    }
    for (k, v) in meta {
        t.set_meta(k, v);
    }
    Ok(t)
}

/// Runs `spec`, stamps the table and writes it (plus an optional gnuplot stub) under
/// `out_dir`. Returns the CSV path.
pub fn write_experiment(spec: &ExperimentSpec, out_dir: &Path, gnuplot: bool) -> Result<PathBuf> {
    let mut table = run_experiment(spec)?;
    table.stamp_now();
    let path = out_dir.join(&spec.output);
    table.write_csv(&path)?;
    if gnuplot {
        let gp = path.with_extension("gp");
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        std::fs::write(&gp, table.gnuplot_stub(&name))
            .map_err(|e| Error::io(format!("writing {}", gp.display()), e))?;
    }
    Ok(path)
}

/// Runs every spec, concurrently; each writes only its own file.
pub fn write_all(specs: &[ExperimentSpec], out_dir: &Path, gnuplot: bool) -> Result<Vec<PathBuf>> {
    let mut seen = std::collections::HashSet::new();
    for s in specs {
        if !seen.insert(&s.output) {
            return Err(Error::Config(format!(
                "two experiments write {}",
                s.output.display()
            )));
        }
    }
    specs
        .par_iter()
        .map(|s| write_experiment(s, out_dir, gnuplot))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(figure: FigureId) -> ExperimentSpec {
        let mut s = ExperimentSpec::default_for(figure);
        s.sim.n_samples = 2000;
        s
    }

    #[test]
    fn figure_ids_round_trip() {
        for f in FigureId::ALL {
            assert_eq!(f.as_str().parse::<FigureId>().unwrap(), f);
            ExperimentSpec::default_for(f).validate().unwrap();
        }
        assert!("fig13".parse::<FigureId>().is_err());
    }

    #[test]
    fn parses_spec_file_with_db_keys() {
        let text = r#"
            [defaults.sim]
            samples = 5000
            seed = 11

            [[experiment]]
            figure = "fig5"
            output = "out/f5.csv"
            sweep = { lambda_p = [2, 3], p_db = [10] }
            scenario = { lambda_ss = 0.25, sigma2_db = 3 }

            [[experiment]]
            figure = "fig2"
            sim = { seed = 3 }
        "#;
        let specs = parse_specs(text).unwrap();
        assert_eq!(specs.len(), 2);
        let f5 = &specs[0];
        assert_eq!(f5.sweeps.lambda_p, vec![2.0, 3.0]);
        assert_eq!(f5.scenario.lambda_ss, 0.25);
        assert!((f5.scenario.sigma2 - db_to_linear(3.0)).abs() < 1e-15);
        assert_eq!(f5.sim.n_samples, 5000);
        assert_eq!(f5.sim.seed, 11);
        assert_eq!(f5.output, PathBuf::from("out/f5.csv"));
        assert_eq!(specs[1].sim.seed, 3);
        assert_eq!(specs[1].sim.n_samples, 5000);
        assert_eq!(specs[1].output, PathBuf::from("fig2.csv"));
        assert!(parse_specs("").unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = [
            r#"[[experiment]]
               figure = "fig99""#,
            r#"[[experiment]]
               figure = "fig5"
               sweep = { lambda_p = [] }"#,
            r#"[[experiment]]
               figure = "fig2"
               sweep = { p_db = [10] }"#,
            r#"[[experiment]]
               figure = "fig5"
               scenario = { p = 10, p_db = 10 }"#,
            r#"[[experiment]]
               figure = "fig5"
               scenario = { lambda_zz = 1 }"#,
            r#"[[experiment]]
               figure = "fig5"
               scenario = { lambda_ss = -1 }"#,
            r#"[[experiment]]
               figure = "fig11"
               sweep = { lambda_p = [1, 2] }"#,
        ];
        for text in bad {
            assert!(parse_specs(text).is_err(), "{text}");
        }
    }

    #[test]
    fn fig5_columns_and_lambda_ordering() {
        let t = run_experiment(&small(FigureId::Fig5)).unwrap();
        let names: Vec<&str> = t.column_names().collect();
        assert_eq!(names[0], "sinr");
        assert!(names.contains(&"outage_analytic_lp2_p10db"));
        assert!(names.contains(&"outage_empirical_lp4_p10db"));
        let a2 = t.column("outage_analytic_lp2_p10db").unwrap();
        let a3 = t.column("outage_analytic_lp3_p10db").unwrap();
        let a4 = t.column("outage_analytic_lp4_p10db").unwrap();
        for i in 0..a2.len() {
            assert!(a2[i] <= a3[i] + 1e-12 && a3[i] <= a4[i] + 1e-12);
        }
        assert_eq!(t.meta("figure"), Some("fig5"));
        assert_eq!(t.meta("scenario_sha256").unwrap().len(), 64);
    }

    #[test]
    fn negative_db_tags() {
        let t = run_experiment(&small(FigureId::Fig4Outage)).unwrap();
        assert!(t.column("outage_analytic_lp2_pm10db").is_some());
        let t = run_experiment(&small(FigureId::Fig11)).unwrap();
        assert_eq!(t.n_rows(), 30);
        assert!(t.column("capacity_fixed_psim5db").is_some());
    }

    #[test]
    fn output_is_deterministic_and_fingerprinted() {
        let spec = small(FigureId::Fig12);
        let a = run_experiment(&spec).unwrap().to_csv_string().unwrap();
        let b = run_experiment(&spec).unwrap().to_csv_string().unwrap();
        assert_eq!(a, b);
        let mut other = spec.clone();
        other.sim.seed += 1;
        assert_ne!(spec.fingerprint(), other.fingerprint());
    }

    #[test]
    fn overrides_apply_and_validate() {
        let mut s = small(FigureId::Fig6);
        Overrides {
            seed: Some(5),
            samples: Some(10),
            ..Overrides::default()
        }
        .apply(&mut s)
        .unwrap();
        assert_eq!((s.sim.seed, s.sim.n_samples), (5, 10));
        let bad = Overrides {
            quad_tol: Some(1.0),
            ..Overrides::default()
        };
        assert!(bad.apply(&mut s).is_err());
    }
}
