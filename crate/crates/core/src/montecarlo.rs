//! Direct simulation of the channel / demand / threshold chain.
//!
//! Each draw samples the four exponential gains and one zero-truncated Poisson demand
//! in a fixed order, so regimes evaluated on the same draw share random numbers.
//! Work is split into `n_partitions` ChaCha8 streams (same key, stream id = partition
//! index) and merged in partition order, which makes results independent of how many
//! threads execute the partitions.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distributions::{build_series, db_to_linear, Scenario, MIN_DEMAND_RATE};
use crate::error::{Error, Result};
use crate::table::CurveTable;

pub const DEFAULT_SEED: u64 = 20_240_611;
pub const DEFAULT_PARTITIONS: usize = 16;

/// Transmit-power rule applied to each draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimRegime {
    /// `P_tx = min(ψ/g_sp, p)`.
    General,
    /// `P_tx = ψ/g_sp`, no peak clipping.
    HighPower,
    /// `ψ` replaced by the given constant (linear units), then clipped at `p`.
    FixedIt(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub n_partitions: usize,
    pub regime: SimRegime,
}

impl SimConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        SimConfig {
            n_samples,
            seed,
            n_partitions: DEFAULT_PARTITIONS,
            regime: SimRegime::General,
        }
    }

    pub fn with_regime(mut self, regime: SimRegime) -> Self {
        self.regime = regime;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be >= 1".into()));
        }
        if self.n_partitions == 0 {
            return Err(Error::Config("n_partitions must be >= 1".into()));
        }
        if let SimRegime::FixedIt(psi) = self.regime {
            if !(psi > 0.0) {
                return Err(Error::Config(format!(
                    "fixed threshold must be > 0, got {psi}"
                )));
            }
        }
        Ok(())
    }

    /// Sample count handled by partition `i`.
    fn partition_len(&self, i: usize) -> usize {
        let base = self.n_samples / self.n_partitions;
        base + usize::from(i < self.n_samples % self.n_partitions)
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig::new(1_000_000, DEFAULT_SEED)
    }
}

/// RNG for partition `index` of a run keyed by `seed`.
pub fn partition_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform on the open interval (0, 1). 52 bits so that `k + 0.5` stays exact.
#[inline]
pub fn open_uniform<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

#[inline]
pub fn sample_exponential<R: RngCore>(rng: &mut R, rate: f64) -> f64 {
    -open_uniform(rng).ln() / rate
}

/// Inverse-CDF sampler for the zero-truncated Poisson law with a cached cumulative table.
#[derive(Debug, Clone)]
pub struct ZtPoissonSampler {
    lambda: f64,
    cumulative: Vec<f64>,
}

impl ZtPoissonSampler {
    pub fn new(lambda_p: f64) -> Result<Self> {
        if !(lambda_p.is_finite() && lambda_p > 0.0) {
            return Err(Error::domain(
                "ZtPoissonSampler::new",
                lambda_p,
                "lambda_p > 0",
            ));
        }
        let lambda = lambda_p.max(MIN_DEMAND_RATE);
        let series = build_series(&Scenario::reference(lambda, 0.0), 1e-15)?;
        let mut acc = 0.0;
        let cumulative = series
            .weights()
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(ZtPoissonSampler { lambda, cumulative })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sample<R: RngCore>(&self, rng: &mut R) -> u64 {
        self.invert(open_uniform(rng))
    }

    fn invert(&self, u: f64) -> u64 {
        let idx = self.cumulative.partition_point(|&c| c < u);
        if idx < self.cumulative.len() {
            return idx as u64 + 1;
        }
        // Beyond the table (probability < 1e-15): walk the PMF recursion.
        let mut k = self.cumulative.len() as u64;
        let mut acc = *self.cumulative.last().unwrap_or(&0.0);
        let mut pmf = crate::distributions::zt_poisson_pmf(k.max(1), self.lambda).unwrap_or(0.0);
        while acc < u && pmf > 0.0 {
            pmf *= self.lambda / (k + 1) as f64;
            acc += pmf;
            k += 1;
        }
        k.max(1)
    }
}

/// One draw from the zero-truncated Poisson law. Builds a table per call, so prefer
/// [`ZtPoissonSampler`] in loops.
pub fn sample_zt_poisson<R: RngCore>(rng: &mut R, lambda_p: f64) -> Result<u64> {
    Ok(ZtPoissonSampler::new(lambda_p)?.sample(rng))
}

/// All random inputs and derived quantities of one channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDraw {
    pub g_pp: f64,
    pub g_sp: f64,
    pub g_ss: f64,
    pub g_ps: f64,
    pub c_demand: u64,
    pub gamma_p: f64,
    pub psi: f64,
    pub p_tx: f64,
    pub gamma_s: f64,
}

impl ChannelDraw {
    /// Draws gains in the order `g_pp, g_sp, g_ss, g_ps`, then the demand.
    pub fn sample<R: RngCore>(
        rng: &mut R,
        scn: &Scenario,
        demand: &ZtPoissonSampler,
        regime: SimRegime,
    ) -> Self {
        let g_pp = sample_exponential(rng, scn.lambda_pp);
        let g_sp = sample_exponential(rng, scn.lambda_sp);
        let g_ss = sample_exponential(rng, scn.lambda_ss);
        let g_ps = sample_exponential(rng, scn.lambda_ps);
        let c_demand = demand.sample(rng);
        Self::from_inputs(scn, g_pp, g_sp, g_ss, g_ps, c_demand, regime)
    }

    pub fn from_inputs(
        scn: &Scenario,
        g_pp: f64,
        g_sp: f64,
        g_ss: f64,
        g_ps: f64,
        c_demand: u64,
        regime: SimRegime,
    ) -> Self {
        let p = scn.p_peak;
        let gamma_p = (c_demand as f64).exp_m1();
        let dynamic_psi = g_pp * p / gamma_p;
        let (psi, p_tx) = match regime {
            SimRegime::General => (dynamic_psi, (dynamic_psi / g_sp).min(p)),
            SimRegime::HighPower => (dynamic_psi, dynamic_psi / g_sp),
            SimRegime::FixedIt(psi) => (psi, (psi / g_sp).min(p)),
        };
        let gamma_s = p_tx * g_ss / (p * g_ps + scn.sigma2);
        ChannelDraw {
            g_pp,
            g_sp,
            g_ss,
            g_ps,
            c_demand,
            gamma_p,
            psi,
            p_tx,
            gamma_s,
        }
    }

    /// Same channel, different power rule.
    pub fn under(&self, scn: &Scenario, regime: SimRegime) -> Self {
        Self::from_inputs(
            scn,
            self.g_pp,
            self.g_sp,
            self.g_ss,
            self.g_ps,
            self.c_demand,
            regime,
        )
    }

    /// Interference delivered to the primary receiver stays within `ψ`.
    pub fn it_constraint_holds(&self) -> bool {
        self.p_tx * self.g_sp <= self.psi * (1.0 + 4.0 * f64::EPSILON)
    }

    pub fn capacity(&self) -> f64 {
        self.gamma_s.ln_1p()
    }
}

/// Sorted sample with empirical-distribution queries.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDist {
    samples: Vec<f64>,
}

impl EmpiricalDist {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config(
                "empirical distribution needs >= 1 sample".into(),
            ));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::Config("NaN in sample".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalDist { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Fraction of samples `≤ x`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.len() as f64
    }

    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.len();
        let idx = ((q.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.samples[idx]
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    /// `max |ecdf(x) − cdf(x)|` over `grid`.
    pub fn sup_distance<F: Fn(f64) -> f64>(&self, cdf: F, grid: &[f64]) -> f64 {
        grid.iter()
            .map(|&x| (self.ecdf(x) - cdf(x)).abs())
            .fold(0.0, f64::max)
    }

    /// Kolmogorov–Smirnov distance to a continuous `cdf`, checked at every sample.
    pub fn ks_distance<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let n = self.len() as f64;
        self.samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Two-sample sup distance between the ecdfs.
    pub fn two_sample_distance(&self, other: &EmpiricalDist) -> f64 {
        let (a, b) = (&self.samples, &other.samples);
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / na - j as f64 / nb).abs());
        }
        d
    }

    /// Histogram densities over `edges` (normalised by the full sample count).
    pub fn histogram_density(&self, edges: &[f64]) -> Vec<f64> {
        let n = self.len() as f64;
        edges
            .windows(2)
            .map(|e| {
                let lo = self.samples.partition_point(|&s| s < e[0]);
                let hi = self.samples.partition_point(|&s| s < e[1]);
                (hi - lo) as f64 / (n * (e[1] - e[0]))
            })
            .collect()
    }
}

/// Dvoretzky–Kiefer–Wolfowitz half-width: `P(sup|ecdf − F| > ε) ≤ alpha`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub gamma_s: EmpiricalDist,
    pub psi: EmpiricalDist,
    pub capacity: EmpiricalDist,
    pub p_tx: EmpiricalDist,
    /// `demand_counts[k]` = number of draws with demand `k`; index 0 is always 0.
    pub demand_counts: Vec<u64>,
    /// Draws where the peak power was the binding constraint.
    pub atom_count: usize,
    pub constraint_violations: usize,
}

impl SimOutput {
    pub fn demand_frequency(&self, k: u64) -> f64 {
        let n: u64 = self.demand_counts.iter().sum();
        self.demand_counts.get(k as usize).copied().unwrap_or(0) as f64 / n as f64
    }
}

#[derive(Default)]
struct Partial {
    gamma_s: Vec<f64>,
    psi: Vec<f64>,
    capacity: Vec<f64>,
    p_tx: Vec<f64>,
    demand_counts: Vec<u64>,
    atom_count: usize,
    violations: usize,
}

fn run_partition(
    scn: &Scenario,
    cfg: &SimConfig,
    demand: &ZtPoissonSampler,
    index: usize,
) -> Partial {
    let n = cfg.partition_len(index);
    let mut rng = partition_rng(cfg.seed, index as u64);
    let mut out = Partial {
        gamma_s: Vec::with_capacity(n),
        psi: Vec::with_capacity(n),
        capacity: Vec::with_capacity(n),
        p_tx: Vec::with_capacity(n),
        ..Partial::default()
    };
    for _ in 0..n {
        let d = ChannelDraw::sample(&mut rng, scn, demand, cfg.regime);
        let k = d.c_demand as usize;
        if out.demand_counts.len() <= k {
            out.demand_counts.resize(k + 1, 0);
        }
        out.demand_counts[k] += 1;
        if d.p_tx == scn.p_peak {
            out.atom_count += 1;
        }
        if cfg.regime != SimRegime::HighPower && !d.it_constraint_holds() {
            out.violations += 1;
        }
        out.gamma_s.push(d.gamma_s);
        out.psi.push(d.psi);
        out.capacity.push(d.capacity());
        out.p_tx.push(d.p_tx);
    }
    out
}

/// Simulates `cfg.n_samples` independent channel uses.
pub fn simulate(scn: &Scenario, cfg: &SimConfig) -> Result<SimOutput> {
    scn.validate()?;
    cfg.validate()?;
    let demand = ZtPoissonSampler::new(scn.lambda_p)?;
    let parts: Vec<Partial> = (0..cfg.n_partitions)
        .into_par_iter()
        .map(|i| run_partition(scn, cfg, &demand, i))
        .collect();

    let mut merged = Partial::default();
    for p in parts {
        merged.gamma_s.extend(p.gamma_s);
        merged.psi.extend(p.psi);
        merged.capacity.extend(p.capacity);
        merged.p_tx.extend(p.p_tx);
        if merged.demand_counts.len() < p.demand_counts.len() {
            merged.demand_counts.resize(p.demand_counts.len(), 0);
        }
        for (m, c) in merged.demand_counts.iter_mut().zip(p.demand_counts) {
            *m += c;
        }
        merged.atom_count += p.atom_count;
        merged.violations += p.violations;
    }
    Ok(SimOutput {
        gamma_s: EmpiricalDist::new(merged.gamma_s)?,
        psi: EmpiricalDist::new(merged.psi)?,
        capacity: EmpiricalDist::new(merged.capacity)?,
        p_tx: EmpiricalDist::new(merged.p_tx)?,
        demand_counts: merged.demand_counts,
        atom_count: merged.atom_count,
        constraint_violations: merged.violations,
    })
}

/// Demand histogram from `cfg.n_samples` zero-truncated Poisson draws, partitioned
/// like [`simulate`]. `counts[k]` is the number of draws equal to `k`.
pub fn sample_demand_counts(lambda_p: f64, cfg: &SimConfig) -> Result<Vec<u64>> {
    cfg.validate()?;
    let sampler = ZtPoissonSampler::new(lambda_p)?;
    let parts: Vec<Vec<u64>> = (0..cfg.n_partitions)
        .into_par_iter()
        .map(|i| {
            let mut rng = partition_rng(cfg.seed, i as u64);
            let mut counts = Vec::new();
            for _ in 0..cfg.partition_len(i) {
                let k = sampler.sample(&mut rng) as usize;
                if counts.len() <= k {
                    counts.resize(k + 1, 0);
                }
                counts[k] += 1;
            }
            counts
        })
        .collect();
    let len = parts.iter().map(Vec::len).max().unwrap_or(0);
    let mut total = vec![0u64; len];
    for p in parts {
        for (t, c) in total.iter_mut().zip(p) {
            *t += c;
        }
    }
    Ok(total)
}

/// Short tag for a number inside a column name: `-10 → m10`, `2.5 → 2p5`.
pub fn num_tag(v: f64) -> String {
    let s = format!("{}", v.abs());
    let s = s.replace('.', "p");
    if v < 0.0 {
        format!("m{s}")
    } else {
        s
    }
}

/// Per-slot capacity for the dynamic threshold and each fixed threshold (given in dB),
/// all evaluated on the same channel draws.
pub fn instantaneous_trace(
    scn: &Scenario,
    cfg: &SimConfig,
    n_slots: usize,
    fixed_psi_db: &[f64],
) -> Result<CurveTable> {
    if n_slots == 0 {
        return Err(Error::Config("n_slots must be >= 1".into()));
    }
    scn.validate()?;
    let demand = ZtPoissonSampler::new(scn.lambda_p)?;
    let mut rng = partition_rng(cfg.seed, 0);
    let draws: Vec<ChannelDraw> = (0..n_slots)
        .map(|_| ChannelDraw::sample(&mut rng, scn, &demand, SimRegime::General))
        .collect();

    let mut table = CurveTable::new();
    table.push_column("slot", (1..=n_slots).map(|s| s as f64).collect())?;
    table.push_column(
        "capacity_dynamic",
        draws.iter().map(ChannelDraw::capacity).collect(),
    )?;
    for &db in fixed_psi_db {
        let regime = SimRegime::FixedIt(db_to_linear(db));
        table.push_column(
            format!("capacity_fixed_psi{}db", num_tag(db)),
            draws
                .iter()
                .map(|d| d.under(scn, regime).capacity())
                .collect(),
        )?;
    }
    table.set_meta("seed", cfg.seed);
    table.set_meta("slots", n_slots);
    Ok(table)
}
