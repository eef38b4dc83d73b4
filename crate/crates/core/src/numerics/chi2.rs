//! Chi-squared distribution functions via the regularized incomplete gamma
//! function.

use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// Lanczos approximation (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    #[allow(clippy::excessive_precision)]
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Lower series, valid for `x < a + 1`.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut sum = 1.0 / a;
    let mut term = sum;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

/// Upper continued fraction (modified Lentz), valid for `x >= a + 1`.
fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (h.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_fraction(a, x)
    }
}

fn check_df(df: usize) -> Result<f64> {
    if df == 0 {
        return Err(Error::domain("chi-squared degrees of freedom must be positive"));
    }
    Ok(df as f64)
}

pub fn chi2_cdf(df: usize, x: f64) -> Result<f64> {
    let k = check_df(df)?;
    if x.is_nan() {
        return Err(Error::domain("chi-squared argument is NaN"));
    }
    Ok(regularized_gamma_p(0.5 * k, 0.5 * x.max(0.0)))
}

/// Upper tail `P(X > x)`, computed without cancellation.
pub fn chi2_sf(df: usize, x: f64) -> Result<f64> {
    let k = check_df(df)?;
    if x.is_nan() {
        return Err(Error::domain("chi-squared argument is NaN"));
    }
    Ok(regularized_gamma_q(0.5 * k, 0.5 * x.max(0.0)))
}

pub fn chi2_pdf(df: usize, x: f64) -> f64 {
    let k = df as f64;
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return match df {
            1 => f64::INFINITY,
            2 => 0.5,
            _ => 0.0,
        };
    }
    let h = 0.5 * k;
    ((h - 1.0) * x.ln() - 0.5 * x - h * std::f64::consts::LN_2 - ln_gamma(h)).exp()
}

/// Rational approximation of the standard normal quantile (relative error
/// about 1e-9); used only to seed iterations.
fn normal_quantile_approx(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let p_low = 0.02425;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile_approx(1.0 - p)
    }
}

fn wilson_hilferty(k: f64, upper: f64) -> f64 {
    let z = normal_quantile_approx(1.0 - upper);
    let v = 2.0 / (9.0 * k);
    let x = k * (1.0 - v + z * v.sqrt()).powi(3);
    if x.is_finite() && x > 0.0 {
        x
    } else {
        k * 1e-3
    }
}

/// Quantile for a lower-tail probability `p`, i.e. `x` with
/// `chi2_cdf(df, x) = p`.
pub fn chi2_quantile(df: usize, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("probability {p} outside (0, 1)")));
    }
    solve_quantile(df, p, 1.0 - p)
}

/// Quantile for an upper-tail probability `q`, i.e. `x` with
/// `chi2_sf(df, x) = q`. `q = 0` yields `+inf` and `q = 1` yields 0.
pub fn chi2_quantile_upper(df: usize, q: f64) -> Result<f64> {
    check_df(df)?;
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("probability {q} outside [0, 1]")));
    }
    if q == 0.0 {
        return Ok(f64::INFINITY);
    }
    if q == 1.0 {
        return Ok(0.0);
    }
    solve_quantile(df, 1.0 - q, q)
}

fn solve_quantile(df: usize, lower: f64, upper: f64) -> Result<f64> {
    let k = check_df(df)?;
    // Work on whichever tail is smaller to keep relative precision.
    let use_upper = upper < lower;
    let residual = |x: f64| -> f64 {
        if use_upper {
            upper - regularized_gamma_q(0.5 * k, 0.5 * x)
        } else {
            regularized_gamma_p(0.5 * k, 0.5 * x) - lower
        }
    };

    let mut lo = 0.0;
    let mut hi = wilson_hilferty(k, upper).max(1e-8);
    while residual(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::domain("chi-squared quantile did not bracket"));
        }
    }
    let mut x = wilson_hilferty(k, upper).clamp(lo, hi);
    for _ in 0..200 {
        let f = residual(x);
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dens = chi2_pdf(df, x);
        let mut next = if dens > 0.0 && dens.is_finite() {
            x - f / dens
        } else {
            f64::NAN
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1e-300) || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    /// Composite Simpson integration of the chi-squared density, with the
    /// substitution x = u^2 to remove the df = 1 singularity at zero.
    fn cdf_by_quadrature(df: usize, x: f64) -> f64 {
        let n = 200_000;
        let upper = x.sqrt();
        let h = upper / n as f64;
        let g = |u: f64| {
            if u == 0.0 {
                if df == 1 {
                    2.0 / (2.0f64 * std::f64::consts::PI).sqrt()
                } else {
                    0.0
                }
            } else {
                chi2_pdf(df, u * u) * 2.0 * u
            }
        };
        let mut s = g(0.0) + g(upper);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * g(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn lower_support_endpoint() {
        assert_eq!(chi2_cdf(2, 0.0).unwrap(), 0.0);
        assert_eq!(chi2_sf(2, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn df1_95_percent_quantile() {
        // quadrature oracle fixes the reference value
        let oracle = cdf_by_quadrature(1, 3.841_459);
        assert!((oracle - 0.95).abs() < 1e-6, "oracle {oracle}");
        let q = chi2_quantile(1, 0.95).unwrap();
        assert!((q - 3.841_459).abs() < 1e-6, "q = {q}");
    }

    #[test]
    fn cdf_matches_quadrature() {
        for &(df, x) in &[(1, 0.3), (2, 1.7), (3, 7.81), (5, 2.0), (9, 16.9), (20, 31.4)] {
            let a = chi2_cdf(df, x).unwrap();
            let b = cdf_by_quadrature(df, x);
            assert!((a - b).abs() < 1e-10, "df={df} x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn cdf_matches_reference_library() {
        for df in 1..=40usize {
            let reference = ChiSquared::new(df as f64).unwrap();
            for i in 0..60 {
                let x = 0.05 + i as f64 * 1.3;
                let a = chi2_cdf(df, x).unwrap();
                let b = reference.cdf(x);
                assert!((a - b).abs() < 1e-10, "df={df} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn exact_df2_closed_form() {
        for &x in &[0.1, 1.0, 5.0, 30.0, 100.0] {
            let exact = 1.0 - (-x / 2.0f64).exp();
            assert!((chi2_cdf(2, x).unwrap() - exact).abs() < 1e-14);
            let sf = (-x / 2.0f64).exp();
            assert!(((chi2_sf(2, x).unwrap() - sf) / sf).abs() < 1e-12);
        }
    }

    #[test]
    fn quantile_domain() {
        assert!(chi2_quantile(1, 0.0).is_err());
        assert!(chi2_quantile(1, 1.0).is_err());
        assert!(chi2_quantile(0, 0.5).is_err());
        assert_eq!(chi2_quantile_upper(3, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(chi2_quantile_upper(3, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn extreme_upper_tail() {
        let x = chi2_quantile_upper(3, 1e-7).unwrap();
        let back = chi2_sf(3, x).unwrap();
        assert!((back / 1e-7 - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn quantile_round_trip(df in 1usize..60, x in 0.01f64..150.0) {
            // invert through the smaller tail, where the probability is well conditioned
            let p = chi2_cdf(df, x).unwrap();
            let q = chi2_sf(df, x).unwrap();
            prop_assume!(p > 1e-300 && q > 1e-300);
            let back = if p < 0.5 { chi2_quantile(df, p) } else { chi2_quantile_upper(df, q) }.unwrap();
            prop_assert!((back - x).abs() <= 1e-7 * x.max(1.0), "df={} x={} back={}", df, x, back);
        }

        #[test]
        fn cdf_monotone(df in 1usize..30, x in 0.0f64..80.0, dx in 0.0f64..5.0) {
            prop_assert!(chi2_cdf(df, x).unwrap() <= chi2_cdf(df, x + dx).unwrap());
        }

        #[test]
        fn quantile_monotone(df in 1usize..30, p in 0.001f64..0.998, dp in 0.0f64..0.001) {
            prop_assert!(chi2_quantile(df, p).unwrap() <= chi2_quantile(df, p + dp).unwrap());
        }
    }
}
