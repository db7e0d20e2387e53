//! Scalar special functions: the zero-order upper incomplete gamma function
//! `Γ(0,x) = E₁(x)`, its exponentially scaled form and `ln k!`.
//!
//! `Γ(0,x)` uses the convergent power series below `x = 1` and a modified Lentz
//! continued fraction at and above it. The continued fraction produces `eˣ·Γ(0,x)`
//! directly, which is what the outage expressions consume: products such as
//! `e^{a}·Γ(0,b)` are always rewritten as `e^{a-b}·[e^{b}Γ(0,b)]`.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// Series / continued-fraction switch point.
pub const SERIES_CUTOFF: f64 = 1.0;

/// Beyond this `e^{-x}` underflows and `Γ(0,x)` is reported as exactly zero.
const UNDERFLOW_X: f64 = 745.2;

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// `Σ (-1)^{n+1} xⁿ/(n·n!)`, so that `Γ(0,x) = -γ - ln x + series(x)`.
fn e1_series_tail(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut fact_term = 1.0; // (-1)^{n+1} xⁿ / n!
    for n in 1..MAX_ITER {
        fact_term *= if n == 1 { x } else { -x / n as f64 };
        let term = fact_term / n as f64;
        sum += term;
        if term.abs() < EPS * sum.abs() {
            break;
        }
    }
    sum
}

fn e1_by_series(x: f64) -> f64 {
    -EULER_GAMMA - x.ln() + e1_series_tail(x)
}

/// `eˣ·E₁(x)` via the modified Lentz algorithm, valid for `x ≥ 1`.
fn scaled_e1_by_fraction(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    let tiny = f64::MIN_POSITIVE / EPS;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

fn check_positive(func: &'static str, x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(func, x, "x > 0"))
    }
}

/// `Γ(0,x) = ∫ₓ^∞ e^{-t}/t dt` for `x > 0`.
pub fn upper_gamma0(x: f64) -> Result<f64> {
    check_positive("upper_gamma0", x)?;
    Ok(if x < SERIES_CUTOFF {
        e1_by_series(x)
    } else if x > UNDERFLOW_X {
        0.0
    } else {
        scaled_e1_by_fraction(x) * (-x).exp()
    })
}

/// `eˣ·Γ(0,x)` for `x > 0`, finite for arbitrarily large `x` (tends to `1/x`).
pub fn exp_scaled_gamma0(x: f64) -> Result<f64> {
    check_positive("exp_scaled_gamma0", x)?;
    Ok(exp_scaled_gamma0_unchecked(x))
}

/// Same as [`exp_scaled_gamma0`] without the domain check; callers guarantee `x > 0`.
#[inline]
pub(crate) fn exp_scaled_gamma0_unchecked(x: f64) -> f64 {
    debug_assert!(x > 0.0, "exp_scaled_gamma0 called with {x}");
    if x < SERIES_CUTOFF {
        x.exp() * e1_by_series(x)
    } else {
        scaled_e1_by_fraction(x)
    }
}

/// `x·eˣ·Γ(0,x)`, with the limit 1 at `x = ∞`.
#[inline]
pub(crate) fn x_exp_scaled_gamma0(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else {
        x * exp_scaled_gamma0_unchecked(x)
    }
}

/// `ln k!`. Exact log-summation up to 20, Stirling series beyond.
pub fn log_factorial(k: u64) -> f64 {
    if k <= 20 {
        return (2..=k).map(|i| (i as f64).ln()).sum();
    }
    let n = k as f64;
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    let correction =
        inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0))));
    n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln() + correction
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    // Reference values computed with mpmath at 30 significant digits.
    const E1_REF: &[(f64, f64, f64)] = &[
        (
            1e-12,
            27.0538054510280153476093851161,
            27.0538054510550691530604266584,
        ),
        (
            1e-6,
            13.2382958930624912435569921832,
            13.2383091313650034562011501862,
        ),
        (
            0.5,
            0.559773594776160811746795939315,
            0.922910632483730468832849375829,
        ),
        (
            1.0,
            0.21938393439552027367716377546,
            0.596347362323194074341078499369,
        ),
        (
            2.0,
            0.0489005107080611195672398352281,
            0.361328616888222584697161657679,
        ),
        (
            5.0,
            0.00114829559127532579733056196982,
            0.170422176284732201812486991173,
        ),
        (
            10.0,
            4.15696892968532427740285981028e-6,
            0.0915633339397880818760698157664,
        ),
        (
            50.0,
            3.78326402955045901869896785402e-24,
            0.0196151099301148703653076098,
        ),
        (
            100.0,
            3.68359776168203218023519262051e-46,
            0.00990194228673301840640593181981,
        ),
        (
            700.0,
            1.40651876623403292277441068511e-307,
            0.00142653641830088669178467469581,
        ),
    ];

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn matches_reference_table() {
        for &(x, e1, scaled) in E1_REF {
            let got = upper_gamma0(x).unwrap();
            assert!(rel(got, e1) < 1e-12, "Γ(0,{x}) = {got}, want {e1}");
            let got = exp_scaled_gamma0(x).unwrap();
            assert!(
                rel(got, scaled) < 1e-12,
                "eˣΓ(0,{x}) = {got}, want {scaled}"
            );
        }
    }

    #[test]
    fn documented_point_values() {
        assert!((upper_gamma0(1.0).unwrap() - 0.219383934).abs() < 1e-9);
        assert!((upper_gamma0(0.5).unwrap() - 0.559773595).abs() < 1e-9);
        assert!((exp_scaled_gamma0(1.0).unwrap() - 0.596347362).abs() < 1e-9);
        assert!((exp_scaled_gamma0(100.0).unwrap() - 0.009901942).abs() < 1e-9);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(upper_gamma0(0.0), Err(Error::Domain { .. })));
        assert!(matches!(upper_gamma0(-1.0), Err(Error::Domain { .. })));
        assert!(matches!(exp_scaled_gamma0(0.0), Err(Error::Domain { .. })));
        assert!(upper_gamma0(f64::NAN).is_err());
    }

    #[test]
    fn underflow_and_large_arguments() {
        assert_eq!(upper_gamma0(800.0).unwrap(), 0.0);
        assert_eq!(upper_gamma0(f64::INFINITY).unwrap(), 0.0);
        let big = 1e8;
        let v = exp_scaled_gamma0(big).unwrap();
        assert!(rel(v, 9.99999990000000199999994e-9) < 1e-12);
        assert!((x_exp_scaled_gamma0(f64::INFINITY) - 1.0).abs() < 1e-15);
        assert!((x_exp_scaled_gamma0(1e12) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn crossover_is_continuous() {
        let x = SERIES_CUTOFF;
        let series = e1_by_series(x);
        let fraction = scaled_e1_by_fraction(x) * (-x).exp();
        assert!(rel(series, fraction) < 1e-12, "{series} vs {fraction}");
        // just either side of the switch
        let below = upper_gamma0(x - 1e-12).unwrap();
        let above = upper_gamma0(x + 1e-12).unwrap();
        assert!(rel(below, above) < 1e-10);
    }

    #[test]
    fn small_argument_bound() {
        for &x in &[1e-10, 1e-6, 1e-3, 0.1] {
            let v = exp_scaled_gamma0(x).unwrap();
            assert!(v > 0.0 && v < -x.ln() * x.exp(), "x = {x}: {v}");
        }
    }

    #[test]
    fn log_factorial_values() {
        assert_eq!(log_factorial(0), 0.0);
        assert_eq!(log_factorial(1), 0.0);
        let direct: f64 = (1..=5u32).product::<u32>() as f64;
        assert!((log_factorial(5) - direct.ln()).abs() < 1e-15);
        assert!((log_factorial(5) - 4.78749174).abs() < 1e-8);
        // mpmath loggamma(31), loggamma(401)
        assert!(rel(log_factorial(30), 74.6582363488301643854876437342) < 1e-14);
        assert!(rel(log_factorial(400), 2000.5006979832413891164545668) < 1e-14);
        // Stirling branch agrees with exact summation just past the switch.
        let summed: f64 = (2..=21u64).map(|i| (i as f64).ln()).sum();
        assert!(rel(log_factorial(21), summed) < 1e-14);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn derivative_matches_integrand(log_x in -6.0f64..2.0) {
                let x = 10f64.powf(log_x);
                let h = 1e-4 * x.min(1.0);
                let fd = (upper_gamma0(x + h).unwrap() - upper_gamma0(x - h).unwrap()) / (2.0 * h);
                let exact = -(-x).exp() / x;
                prop_assert!(((fd - exact) / exact).abs() < 1e-6, "x={x} fd={fd} exact={exact}");
            }

            #[test]
            fn scaled_and_unscaled_agree(x in 1e-6f64..700.0) {
                let a = exp_scaled_gamma0(x).unwrap() * (-x).exp();
                let b = upper_gamma0(x).unwrap();
                prop_assert!(((a - b) / b).abs() < 1e-12);
            }

            #[test]
            fn strictly_decreasing(x in 1e-8f64..600.0, dx in 1e-3f64..1.0) {
                prop_assert!(upper_gamma0(x + dx).unwrap() < upper_gamma0(x).unwrap());
                prop_assert!(exp_scaled_gamma0(x + dx).unwrap() < exp_scaled_gamma0(x).unwrap());
            }
        }
    }
}
