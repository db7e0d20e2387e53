//! Closed-form secondary-user performance under peak power adaptation.
//!
//! Chain of laws: `t = ψ/g_sp`, `P_tx = min(t, p)`, `P_rx = P_tx·g_ss`,
//! `γ_s = P_rx/(p·g_ps + σ²)`. Every per-term expectation over the shifted exponential
//! interference `v = σ² + p·g_ps` reduces to one dimensionless kernel
//!
//! ```text
//! G(Q, z) = e^{Q+z} ∫₁^∞ u·e^{-Qu}·E₁(zu) du
//!         = [(1+Q)·ẽ(z) − Q/(Q+z) − ẽ(Q+z)] / Q²,        ẽ(y) = e^y E₁(y)
//! ```
//!
//! with `z > 0` and `Q + z > 0`. The closed form has a removable singularity at
//! `Q = 0`; there the kernel is summed from its Taylor series in `Q`, whose
//! coefficients are the scaled moments `e^z ∫₁^∞ u^j E₁(zu) du`.

use crate::distributions::{build_series, AtomicMin, Scenario, TruncatedSeries};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_semi_infinite, Tolerance, DEFAULT_MAX_SUBDIVISIONS};
use crate::specfun::{exp_scaled_gamma0_unchecked as scaled_e1, x_exp_scaled_gamma0};

pub const DEFAULT_QUAD_TOL: f64 = 1e-8;
pub const MAX_QUAD_TOL: f64 = 1e-4;
/// Raw CDF values may stray this far outside `[0, 1]` before clamping.
pub const CDF_SLACK: f64 = 1e-9;
/// Series branch of the kernel is used while `|Q| < min(SERIES_RATIO·z, SERIES_MAX_Q)`.
const SERIES_RATIO: f64 = 0.5;
const SERIES_MAX_Q: f64 = 1.0;
const MAX_SERIES_TERMS: usize = 400;
/// `λ_ss` and `λ_ps` closer than this (relative) use the equal-rate limit.
const EQUAL_RATE_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `P_tx = min(ψ/g_sp, p)`.
    General,
    /// `p ≫ ψ/g_sp`, so `P_tx = ψ/g_sp`.
    HighPower,
}

/// The slope factor multiplying `Γ(0, (ηα_k+1)λ_ss σ² x/p)` in the general outage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlopeFactor {
    /// `1 + (λ_ps − ηα_k λ_ss x)σ²/p`.
    ThresholdScaled,
    /// `1 + (λ_ps − ηα_k λ_ss)σ²/p`, threshold dropped.
    Unscaled,
}

/// Sign of the rational cross term (`(λ_ps − ηα_kλ_ss x)·e^{-λ_ss σ² x/p}` in the
/// general outage, `λ_ps − ηα_kλ_ss x` in the high-power outage).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrossTermSign {
    Negative,
    Positive,
}

/// Whether the high-power mixture sum carries the zero-truncation normaliser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HighPowerWeights {
    Normalised,
    Unnormalised,
}

/// Selects between algebraically distinct readings of the outage expressions.
/// [`FormulaVariant::VALIDATED`] is the one that agrees with direct simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FormulaVariant {
    pub slope: SlopeFactor,
    pub cross_sign: CrossTermSign,
    pub high_power_weights: HighPowerWeights,
}

impl FormulaVariant {
    pub const VALIDATED: FormulaVariant = FormulaVariant {
        slope: SlopeFactor::ThresholdScaled,
        cross_sign: CrossTermSign::Negative,
        high_power_weights: HighPowerWeights::Normalised,
    };

    /// All general-regime candidates (the high-power flag is irrelevant there).
    pub fn general_candidates() -> Vec<FormulaVariant> {
        let mut out = Vec::new();
        for slope in [SlopeFactor::ThresholdScaled, SlopeFactor::Unscaled] {
            for cross_sign in [CrossTermSign::Negative, CrossTermSign::Positive] {
                out.push(FormulaVariant {
                    slope,
                    cross_sign,
                    ..Self::VALIDATED
                });
            }
        }
        out
    }

    /// All high-power candidates (the slope flag is irrelevant there).
    pub fn high_power_candidates() -> Vec<FormulaVariant> {
        let mut out = Vec::new();
        for high_power_weights in [HighPowerWeights::Normalised, HighPowerWeights::Unnormalised] {
            for cross_sign in [CrossTermSign::Negative, CrossTermSign::Positive] {
                out.push(FormulaVariant {
                    cross_sign,
                    high_power_weights,
                    ..Self::VALIDATED
                });
            }
        }
        out
    }

    pub fn label(&self) -> String {
        format!(
            "slope={} cross_sign={} high_power_weights={}",
            match self.slope {
                SlopeFactor::ThresholdScaled => "threshold-scaled",
                SlopeFactor::Unscaled => "unscaled",
            },
            match self.cross_sign {
                CrossTermSign::Negative => "negative",
                CrossTermSign::Positive => "positive",
            },
            match self.high_power_weights {
                HighPowerWeights::Normalised => "normalised",
                HighPowerWeights::Unnormalised => "unnormalised",
            }
        )
    }
}

impl Default for FormulaVariant {
    fn default() -> Self {
        Self::VALIDATED
    }
}

// ---------------------------------------------------------------------------
// kernel

/// Taylor series of `G(Q, z)` about `Q = 0`; requires `|Q| < z`.
///
/// Term `n` is `(-Q)ⁿ/n! · m_{n+1}` with `m_j = [j!·R_j/z^{j+1} − ẽ(z)]/(j+1)` and
/// `R_j = Σ_{i≤j} zⁱ/i!`, rearranged so no factor overflows for small `z`.
fn kernel_series(q: f64, z: f64) -> f64 {
    let ez = scaled_e1(z);
    let ratio = -q / z;
    let mut ratio_pow = 1.0; // (-Q/z)^n
    let mut q_term = 1.0; // (-Q)^n / n!
    let mut z_term = 1.0; // z^j / j!
    let mut partial_exp = 1.0; // R_j
    let mut sum = 0.0;
    for n in 0..MAX_SERIES_TERMS {
        let j = n + 1;
        z_term *= z / j as f64;
        partial_exp += z_term;
        let term = (ratio_pow * j as f64 * partial_exp / (z * z) - q_term * ez) / (j + 1) as f64;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        ratio_pow *= ratio;
        q_term *= -q / j as f64;
    }
    q.exp() * sum
}

/// Upper bound on `|Q|` for the series branch.
fn series_radius(z: f64) -> f64 {
    (SERIES_RATIO * z).min(SERIES_MAX_Q)
}

fn kernel_closed(q: f64, z: f64, q_plus_z: f64, slope_q: f64, sign: CrossTermSign) -> f64 {
    let cross = q / q_plus_z;
    let cross = match sign {
        CrossTermSign::Negative => -cross,
        CrossTermSign::Positive => cross,
    };
    ((1.0 + slope_q) * scaled_e1(z) + cross - scaled_e1(q_plus_z)) / (q * q)
}

/// `G(Q, z)` for the validated reading; `slope_q`/`sign` select the alternates.
///
/// `Q + z` is passed separately because callers know it exactly while `Q` and `z`
/// individually may be huge and nearly opposite.
fn kernel(q: f64, z: f64, q_plus_z: f64, slope_q: f64, sign: CrossTermSign) -> f64 {
    let exact = slope_q == q && sign == CrossTermSign::Negative;
    if exact && q.abs() < series_radius(z) {
        kernel_series(q, z)
    } else {
        kernel_closed(q, z, q_plus_z, slope_q, sign)
    }
}

/// Direct evaluation of the kernel, exposed for cross-checks.
pub fn outage_kernel(q: f64, z: f64) -> Result<f64> {
    if !(z > 0.0 && q + z > 0.0) {
        return Err(Error::domain("outage_kernel", q, "z > 0 and q + z > 0"));
    }
    Ok(kernel(q, z, q + z, q, CrossTermSign::Negative))
}

// ---------------------------------------------------------------------------
// transmit / received power

/// CDF of `t = ψ/g_sp`: `Σ w_k ηα_k x/(ηα_k x + p)`.
pub fn cdf_t(x: f64, series: &TruncatedSeries, scn: &Scenario) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let eta = scn.eta();
    series
        .terms()
        .map(|(_, w, a)| {
            let ax = eta * a * x;
            w * ax / (ax + scn.p_peak)
        })
        .sum()
}

/// Density of `t = ψ/g_sp`: `Σ w_k ηα_k p/(ηα_k x + p)²`.
pub fn pdf_t(x: f64, series: &TruncatedSeries, scn: &Scenario) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("pdf_t", x, "x > 0"));
    }
    let eta = scn.eta();
    let p = scn.p_peak;
    Ok(series
        .terms()
        .map(|(_, w, a)| {
            let den = eta * a * x + p;
            w * eta * a * p / (den * den)
        })
        .sum())
}

/// Law of `P_tx = min(t, p)`.
pub fn transmit_power_law<'a>(
    series: &'a TruncatedSeries,
    scn: &'a Scenario,
) -> AtomicMin<impl Fn(f64) -> f64 + 'a> {
    AtomicMin {
        continuous_cdf: move |x| cdf_t(x, series, scn),
        atom_location: scn.p_peak,
    }
}

/// CDF of `P_tx`: `F_T(x)` below `p`, exactly 1 from `p` on.
pub fn cdf_ptx(x: f64, series: &TruncatedSeries, scn: &Scenario) -> f64 {
    transmit_power_law(series, scn).cdf(x)
}

/// CDF of `P_rx = P_tx·g_ss`:
/// `1 − e^{-y}[1 − Σ w_k ηα_k y·ẽ((ηα_k+1)y)]`, `y = λ_ss x/p`.
pub fn cdf_prx(x: f64, series: &TruncatedSeries, scn: &Scenario) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let y = scn.lambda_ss * x / scn.p_peak;
    let eta = scn.eta();
    let mixed: f64 = series
        .terms()
        .map(|(_, w, a)| {
            let ay = eta * a * y;
            let arg = ay + y;
            // ay·ẽ(arg) = (ay/arg)·arg·ẽ(arg)
            w * (ay / arg) * x_exp_scaled_gamma0(arg)
        })
        .sum();
    let f = 1.0 - (-y).exp() * (1.0 - mixed);
    f.clamp(0.0, 1.0)
}

// ---------------------------------------------------------------------------
// outage

fn check_cdf(what: &'static str, x: f64, raw: f64) -> Result<f64> {
    if raw.is_finite() && (-CDF_SLACK..=1.0 + CDF_SLACK).contains(&raw) {
        Ok(raw.clamp(0.0, 1.0))
    } else {
        Err(Error::Conditioning {
            what,
            x,
            value: raw,
        })
    }
}

/// `1 − F_{γ_s}(x)` split as `(A, Σ w_k B_k)` for the general regime, so that
/// `F = 1 − A + Σ w_k B_k`.
fn general_parts(
    x: f64,
    series: &TruncatedSeries,
    scn: &Scenario,
    variant: FormulaVariant,
) -> (f64, f64) {
    let s0 = scn.sigma2;
    let p = scn.p_peak;
    let beta = scn.lambda_ss * x / p;
    let mu = scn.lambda_ps / p;
    let m = mu * s0;
    let bs = beta * s0;
    let decay = (-bs).exp();
    let a_term = mu / (mu + beta) * decay;
    let eta = scn.eta();

    let mixed: f64 = series
        .terms()
        .map(|(_, w, alpha)| {
            let a = eta * alpha;
            let c = a * bs;
            let q = m - c;
            let z = c + bs;
            let slope_q = match variant.slope {
                SlopeFactor::ThresholdScaled => q,
                SlopeFactor::Unscaled => m - a * scn.lambda_ss * s0 / p,
            };
            w * c * m * decay * kernel(q, z, m + bs, slope_q, variant.cross_sign)
        })
        .sum();
    (a_term, mixed)
}

/// Outage probability `F_{γ_s}(x)` in the general regime.
pub fn outage_general(x: f64, series: &TruncatedSeries, scn: &Scenario) -> Result<f64> {
    outage_general_variant(x, series, scn, FormulaVariant::VALIDATED)
}

pub fn outage_general_variant(
    x: f64,
    series: &TruncatedSeries,
    scn: &Scenario,
    variant: FormulaVariant,
) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("outage_general", x, "x > 0"));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let (a, mixed) = general_parts(x, series, scn, variant);
    check_cdf("outage_general", x, 1.0 - a + mixed)
}

fn high_power_raw(
    x: f64,
    series: &TruncatedSeries,
    scn: &Scenario,
    variant: FormulaVariant,
) -> f64 {
    let s0 = scn.sigma2;
    let p = scn.p_peak;
    let m = scn.lambda_ps * s0 / p;
    let bs = scn.lambda_ss * x * s0 / p;
    let eta = scn.eta();
    let scale = match variant.high_power_weights {
        HighPowerWeights::Normalised => 1.0,
        HighPowerWeights::Unnormalised => series.lambda_p().exp_m1(),
    };
    series
        .terms()
        .map(|(_, w, alpha)| {
            let c = eta * alpha * bs;
            let q = m - c;
            scale * w * c * m * kernel(q, c, m, q, variant.cross_sign)
        })
        .sum()
}

/// Outage probability in the high-power regime (`P_tx = ψ/g_sp`).
pub fn outage_high_power(x: f64, series: &TruncatedSeries, scn: &Scenario) -> Result<f64> {
    outage_high_power_variant(x, series, scn, FormulaVariant::VALIDATED)
}

pub fn outage_high_power_variant(
    x: f64,
    series: &TruncatedSeries,
    scn: &Scenario,
    variant: FormulaVariant,
) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("outage_high_power", x, "x > 0"));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    check_cdf(
        "outage_high_power",
        x,
        high_power_raw(x, series, scn, variant),
    )
}

/// `(A, B)` for a fixed threshold: `F = 1 − A + e^{-d}(A − B)`, `d = λ_sp ψ₀/p`.
fn fixed_it_survival(x: f64, psi_fixed: f64, scn: &Scenario) -> f64 {
    let s0 = scn.sigma2;
    let p = scn.p_peak;
    let beta = scn.lambda_ss * x / p;
    let mu = scn.lambda_ps / p;
    let d = scn.lambda_sp * psi_fixed / p;
    let decay = (-beta * s0).exp();
    let a_term = mu / (mu + beta) * decay;
    let shift = d / beta; // ψ₀λ_sp/(λ_ss x)
    let arg = (mu + beta) * (s0 + shift);
    let frac = 1.0 / (1.0 + s0 / shift);
    let b_term = a_term * frac * x_exp_scaled_gamma0(arg);
    a_term - (-d).exp() * (a_term - b_term)
}

/// Outage with a constant threshold `ψ₀` (linear power): `P_tx = min(ψ₀/g_sp, p)`.
pub fn outage_fixed_it(x: f64, psi_fixed: f64, scn: &Scenario) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("outage_fixed_it", x, "x > 0"));
    }
    if !(psi_fixed > 0.0) {
        return Err(Error::domain("outage_fixed_it", psi_fixed, "psi_fixed > 0"));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    check_cdf(
        "outage_fixed_it",
        x,
        1.0 - fixed_it_survival(x, psi_fixed, scn),
    )
}

// ---------------------------------------------------------------------------
// capacity

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityResult {
    /// Mean capacity in (nats/s)/Hz.
    pub mean_capacity: f64,
    /// Closed-form part (general regime) or zero.
    pub closed_term: f64,
    /// Numerically integrated part.
    pub i4_value: f64,
    pub quad_abs_err: f64,
    pub regime: Regime,
}

fn check_quad_tol(quad_tol: f64) -> Result<()> {
    if quad_tol > 0.0 && quad_tol <= MAX_QUAD_TOL {
        Ok(())
    } else {
        Err(Error::domain(
            "mean_capacity",
            quad_tol,
            "quad_tol in (0, 1e-4]",
        ))
    }
}

/// `∫₀^∞ λ_ps e^{-λ_ss σ² x/p} / ((λ_ps + λ_ss x)(1+x)) dx`, the capacity with `P_tx = p`.
pub fn full_power_capacity(scn: &Scenario) -> f64 {
    let k = scn.sigma2 / scn.p_peak;
    let (l_ps, l_ss) = (scn.lambda_ps, scn.lambda_ss);
    if (l_ss - l_ps).abs() < EQUAL_RATE_REL * l_ps {
        // L'Hôpital in λ_ss: −z·d/dz ẽ(z) = 1 − z·ẽ(z)
        let z = l_ps * k;
        1.0 - x_exp_scaled_gamma0(z)
    } else {
        l_ps / (l_ss - l_ps) * (scaled_e1(l_ps * k) - scaled_e1(l_ss * k))
    }
}

fn integrate_capacity<F: Fn(f64) -> f64>(f: F, quad_tol: f64) -> Result<(f64, f64)> {
    let r = integrate_semi_infinite(
        f,
        0.0,
        Tolerance::absolute(quad_tol),
        DEFAULT_MAX_SUBDIVISIONS,
    )?;
    Ok((r.value, r.abs_err))
}

/// Mean capacity `∫₀^∞ (1 − F_{γ_s}(x))/(1+x) dx`.
///
/// General regime: closed-form full-power term plus the numerically integrated
/// mixture correction. High-power regime: direct quadrature.
pub fn mean_capacity(
    regime: Regime,
    series: &TruncatedSeries,
    scn: &Scenario,
    quad_tol: f64,
) -> Result<CapacityResult> {
    check_quad_tol(quad_tol)?;
    match regime {
        Regime::General => {
            let closed = full_power_capacity(scn);
            let (i4, err) = integrate_capacity(
                |x| {
                    if x <= 0.0 {
                        return 0.0;
                    }
                    let (_, mixed) = general_parts(x, series, scn, FormulaVariant::VALIDATED);
                    -mixed / (1.0 + x)
                },
                quad_tol,
            )?;
            Ok(CapacityResult {
                mean_capacity: closed + i4,
                closed_term: closed,
                i4_value: i4,
                quad_abs_err: err,
                regime,
            })
        }
        Regime::HighPower => {
            let (value, err) = integrate_capacity(
                |x| {
                    if x <= 0.0 {
                        return 1.0;
                    }
                    let f = high_power_raw(x, series, scn, FormulaVariant::VALIDATED);
                    (1.0 - f) / (1.0 + x)
                },
                quad_tol,
            )?;
            Ok(CapacityResult {
                mean_capacity: value,
                closed_term: 0.0,
                i4_value: value,
                quad_abs_err: err,
                regime,
            })
        }
    }
}

/// Mean capacity by direct quadrature of the general outage, bypassing the
/// closed-form split.
pub fn capacity_by_definition(
    series: &TruncatedSeries,
    scn: &Scenario,
    quad_tol: f64,
) -> Result<CapacityResult> {
    check_quad_tol(quad_tol)?;
    let (value, err) = integrate_capacity(
        |x| {
            if x <= 0.0 {
                return 1.0;
            }
            let (a, mixed) = general_parts(x, series, scn, FormulaVariant::VALIDATED);
            (a - mixed) / (1.0 + x)
        },
        quad_tol,
    )?;
    Ok(CapacityResult {
        mean_capacity: value,
        closed_term: 0.0,
        i4_value: value,
        quad_abs_err: err,
        regime: Regime::General,
    })
}

/// Mean capacity with a constant threshold `ψ₀` (linear power).
pub fn capacity_fixed_it(psi_fixed: f64, scn: &Scenario, quad_tol: f64) -> Result<CapacityResult> {
    check_quad_tol(quad_tol)?;
    if !(psi_fixed > 0.0) {
        return Err(Error::domain(
            "capacity_fixed_it",
            psi_fixed,
            "psi_fixed > 0",
        ));
    }
    let (value, err) = integrate_capacity(
        |x| {
            if x <= 0.0 {
                return 1.0;
            }
            fixed_it_survival(x, psi_fixed, scn) / (1.0 + x)
        },
        quad_tol,
    )?;
    Ok(CapacityResult {
        mean_capacity: value,
        closed_term: 0.0,
        i4_value: value,
        quad_abs_err: err,
        regime: Regime::General,
    })
}

// ---------------------------------------------------------------------------
// convenience

/// Outage curve on a threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageCurve {
    pub x_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub regime: Regime,
    pub scenario: Scenario,
}

impl OutageCurve {
    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }
}

/// A scenario bundled with its truncated series.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub scenario: Scenario,
    pub series: TruncatedSeries,
}

impl Model {
    pub fn new(scenario: Scenario, tail_tol: f64) -> Result<Self> {
        scenario.validate()?;
        let series = build_series(&scenario, tail_tol)?;
        Ok(Model { scenario, series })
    }

    pub fn outage(&self, regime: Regime, x: f64) -> Result<f64> {
        match regime {
            Regime::General => outage_general(x, &self.series, &self.scenario),
            Regime::HighPower => outage_high_power(x, &self.series, &self.scenario),
        }
    }

    pub fn outage_curve(&self, regime: Regime, x_grid: &[f64]) -> Result<OutageCurve> {
        let values = x_grid
            .iter()
            .map(|&x| self.outage(regime, x))
            .collect::<Result<Vec<_>>>()?;
        Ok(OutageCurve {
            x_grid: x_grid.to_vec(),
            values,
            regime,
            scenario: self.scenario,
        })
    }

    pub fn mean_capacity(&self, regime: Regime, quad_tol: f64) -> Result<CapacityResult> {
        mean_capacity(regime, &self.series, &self.scenario, quad_tol)
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
