//! Demand → SINR → threshold distribution chain.
//!
//! Capacity demand `c` is zero-truncated Poisson with rate `λ_p`. The primary receiver
//! needs `γ_p = e^c − 1`, so the SINR law is discrete on `α_k = eᵏ − 1`, `k ≥ 1`, with
//! exactly the truncated Poisson weights. The interference-plus-noise threshold
//! `ψ = g_pp·p/γ_p` is then a finite mixture of exponentials with rates
//! `λ_pp·α_k/p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::log_factorial;

pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
pub const MAX_TAIL_TOL: f64 = 1e-3;
pub const MAX_SERIES_TERMS: usize = 400;
/// `λ_p` is clamped from below to this value before building weights.
pub const MIN_DEMAND_RATE: f64 = 1e-9;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// All model parameters. Rates are reciprocals of mean channel power gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Poisson capacity-demand rate.
    pub lambda_p: f64,
    /// PU-Tx → PU-Rx channel rate.
    pub lambda_pp: f64,
    /// SU-Tx → PU-Rx channel rate.
    pub lambda_sp: f64,
    /// SU-Tx → SU-Rx channel rate.
    pub lambda_ss: f64,
    /// PU-Tx → SU-Rx channel rate.
    pub lambda_ps: f64,
    /// AWGN variance.
    pub sigma2: f64,
    /// Peak transmit power (linear), shared by PU and SU.
    pub p_peak: f64,
    /// Bandwidth in Hz; the capacity expressions assume 1.
    pub bandwidth: f64,
}

impl Scenario {
    pub const REFERENCE_MEAN_G_SP: f64 = 2.0;
    pub const REFERENCE_MEAN_G_PS: f64 = 3.3;
    pub const REFERENCE_MEAN_G_SS: f64 = 5.0;
    pub const REFERENCE_MEAN_G_PP: f64 = 4.0;
    pub const REFERENCE_SIGMA2: f64 = 1.0;

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        lambda_p: f64,
        lambda_pp: f64,
        lambda_sp: f64,
        lambda_ss: f64,
        lambda_ps: f64,
        sigma2: f64,
        p_peak: f64,
    ) -> Result<Self> {
        let scn = Scenario {
            lambda_p,
            lambda_pp,
            lambda_sp,
            lambda_ss,
            lambda_ps,
            sigma2,
            p_peak,
            bandwidth: 1.0,
        };
        scn.validate()?;
        Ok(scn.clamped())
    }

    /// The reference channel set (mean gains 2 / 3.3 / 5 / 4, `σ² = 1`) with the
    /// given demand rate and peak power in dB.
    pub fn reference(lambda_p: f64, p_db: f64) -> Self {
        Scenario {
            lambda_p: lambda_p.max(MIN_DEMAND_RATE),
            lambda_pp: 1.0 / Self::REFERENCE_MEAN_G_PP,
            lambda_sp: 1.0 / Self::REFERENCE_MEAN_G_SP,
            lambda_ss: 1.0 / Self::REFERENCE_MEAN_G_SS,
            lambda_ps: 1.0 / Self::REFERENCE_MEAN_G_PS,
            sigma2: Self::REFERENCE_SIGMA2,
            p_peak: db_to_linear(p_db),
            bandwidth: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("lambda_p", self.lambda_p),
            ("lambda_pp", self.lambda_pp),
            ("lambda_sp", self.lambda_sp),
            ("lambda_ss", self.lambda_ss),
            ("lambda_ps", self.lambda_ps),
            ("sigma2", self.sigma2),
            ("p_peak", self.p_peak),
            ("bandwidth", self.bandwidth),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        let eta = self.eta();
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "eta = lambda_pp / lambda_sp is not finite and positive ({eta})"
            )));
        }
        Ok(())
    }

    fn clamped(mut self) -> Self {
        self.lambda_p = self.lambda_p.max(MIN_DEMAND_RATE);
        self
    }

    /// `η = λ_pp / λ_sp`.
    pub fn eta(&self) -> f64 {
        self.lambda_pp / self.lambda_sp
    }

    pub fn p_db(&self) -> f64 {
        linear_to_db(self.p_peak)
    }

    pub fn with_lambda_p(mut self, lambda_p: f64) -> Self {
        self.lambda_p = lambda_p.max(MIN_DEMAND_RATE);
        self
    }

    pub fn with_p_db(mut self, p_db: f64) -> Self {
        self.p_peak = db_to_linear(p_db);
        self
    }
}

/// `ln(e^λ − 1)`, the log normaliser of the zero-truncated Poisson law.
fn ln_truncation_norm(lambda: f64) -> f64 {
    if lambda > 1.0 {
        lambda + (-(-lambda).exp()).ln_1p()
    } else {
        lambda.exp_m1().ln()
    }
}

fn ln_zt_poisson(k: u64, lambda: f64) -> f64 {
    k as f64 * lambda.ln() - log_factorial(k) - ln_truncation_norm(lambda)
}

/// Zero-truncated Poisson PMF `λᵏ e^{-λ} / (k! (1 − e^{-λ}))` for `k ≥ 1`.
pub fn zt_poisson_pmf(k: u64, lambda_p: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain(
            "zt_poisson_pmf",
            0.0,
            "k >= 1 (zero is truncated away)",
        ));
    }
    if !(lambda_p.is_finite() && lambda_p > 0.0) {
        return Err(Error::domain("zt_poisson_pmf", lambda_p, "lambda_p > 0"));
    }
    Ok(ln_zt_poisson(k, lambda_p.max(MIN_DEMAND_RATE)).exp())
}

/// Ordinary Poisson PMF, kept for comparison with the truncated law.
pub fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    (k as f64 * lambda.ln() - lambda - log_factorial(k)).exp()
}

/// Probability that the primary SINR equals `α_k = eᵏ − 1`.
///
/// This is the truncated demand PMF under `k = ln(1 + α_k)`; the same code path is
/// used so the two agree bit for bit.
pub fn sinr_pmf(k: u64, scn: &Scenario) -> Result<f64> {
    zt_poisson_pmf(k, scn.lambda_p)
}

/// `α_k = eᵏ − 1`.
pub fn sinr_support(k: u64) -> f64 {
    (k as f64).exp_m1()
}

/// Finite realisation of the sums over the SINR support.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    lambda_p: f64,
    tail_tol: f64,
    weights: Vec<f64>,
    alphas: Vec<f64>,
    tail_mass: f64,
}

impl TruncatedSeries {
    /// Cutoff index `K`.
    pub fn k_max(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn lambda_p(&self) -> f64 {
        self.lambda_p
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// Zero-truncated Poisson mass beyond `K`.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `(k, w_k, α_k)` triples.
    pub fn terms(&self) -> impl Iterator<Item = (u64, f64, f64)> + '_ {
        self.weights
            .iter()
            .zip(&self.alphas)
            .enumerate()
            .map(|(i, (&w, &a))| (i as u64 + 1, w, a))
    }
}

/// Smallest `K` whose truncated-Poisson tail is below `tail_tol`.
pub fn build_series(scn: &Scenario, tail_tol: f64) -> Result<TruncatedSeries> {
    build_series_capped(scn, tail_tol, MAX_SERIES_TERMS)
}

pub fn build_series_capped(scn: &Scenario, tail_tol: f64, cap: usize) -> Result<TruncatedSeries> {
    if !(tail_tol > 0.0 && tail_tol <= MAX_TAIL_TOL) {
        return Err(Error::domain(
            "build_series",
            tail_tol,
            "tail_tol in (0, 1e-3]",
        ));
    }
    scn.validate()?;
    let lambda = scn.lambda_p.max(MIN_DEMAND_RATE);

    // Evaluate terms well past the cap (or until they are negligible beyond the mode),
    // then take suffix sums for the exact tail after each K.
    let horizon = cap + 64;
    let mut terms = Vec::with_capacity(64);
    for k in 1..=horizon as u64 {
        let w = ln_zt_poisson(k, lambda).exp();
        terms.push(w);
        if k as f64 > lambda && w < 1e-300 {
            break;
        }
    }
    let mut tails = vec![0.0; terms.len() + 1];
    for i in (0..terms.len()).rev() {
        tails[i] = tails[i + 1] + terms[i];
    }
    // tails[k] = Σ_{j > k} w_j, with terms indexed from k = 1.
    let k_max = (1..=terms.len().min(cap))
        .find(|&k| tails[k] < tail_tol)
        .ok_or(Error::TruncationCap {
            cap,
            lambda_p: scn.lambda_p,
        })?;

    let weights = terms[..k_max].to_vec();
    let alphas = (1..=k_max as u64).map(sinr_support).collect();
    Ok(TruncatedSeries {
        lambda_p: lambda,
        tail_tol,
        weights,
        alphas,
        tail_mass: tails[k_max],
    })
}

/// Exponential mixture law of the interference-plus-noise threshold `ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureExp {
    rates: Vec<f64>,
    weights: Vec<f64>,
}

impl MixtureExp {
    /// Rates `λ_pp·α_k/p` with the truncated SINR weights.
    pub fn from_series(series: &TruncatedSeries, scn: &Scenario) -> Self {
        let rates = series
            .alphas()
            .iter()
            .map(|&a| scn.lambda_pp * a / scn.p_peak)
            .collect();
        MixtureExp {
            rates,
            weights: series.weights().to_vec(),
        }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.rates)
            .map(|(&w, &r)| w * r * (-r * x).exp())
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.weights
            .iter()
            .zip(&self.rates)
            .map(|(&w, &r)| -w * (-r * x).exp_m1())
            .sum()
    }

    /// Smallest `x` with `cdf(x) ≥ q`, by bisection.
    pub fn quantile(&self, q: f64) -> f64 {
        let mut hi = 1.0 / self.rates[0];
        while self.cdf(hi) < q {
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Density of the threshold `ψ`, for `x > 0`.
pub fn psi_pdf(x: f64, mix: &MixtureExp) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("psi_pdf", x, "x > 0"));
    }
    Ok(mix.pdf(x))
}

/// CDF of the threshold `ψ`; zero for `x ≤ 0`.
pub fn psi_cdf(x: f64, mix: &MixtureExp) -> f64 {
    mix.cdf(x)
}

/// Law of `min(T, atom)` for a continuous `T`: the continuous CDF below the atom and a
/// single jump to 1 at it.
#[derive(Debug, Clone, Copy)]
pub struct AtomicMin<F> {
    pub continuous_cdf: F,
    pub atom_location: f64,
}

impl<F: Fn(f64) -> f64> AtomicMin<F> {
    pub fn cdf(&self, x: f64) -> f64 {
        if x >= self.atom_location {
            1.0
        } else {
            (self.continuous_cdf)(x)
        }
    }

    /// `1 − F_T(atom⁻)`.
    pub fn atom_mass(&self) -> f64 {
        1.0 - (self.continuous_cdf)(self.atom_location)
    }
}
