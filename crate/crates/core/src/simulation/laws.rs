use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ln_gamma, regularized_gamma_p};

/// Distribution of the latent event time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventLaw {
    Exponential { rate: f64 },
    Weibull { shape: f64, scale: f64 },
    /// Hazard `rates[j]` on `[breakpoints[j-1], breakpoints[j])`; the last
    /// rate applies after the last breakpoint.
    PiecewiseExponential { breakpoints: Vec<f64>, rates: Vec<f64> },
}

/// Distribution of the censoring time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum CensoringLaw {
    None,
    Exponential { rate: f64 },
    Uniform { lower: f64, upper: f64 },
    Weibull { shape: f64, scale: f64 },
}

fn positive(path: &str, name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("{path}.{name}"), format!("must be positive and finite, got {v}")))
    }
}

/// Uniform draw in `(0, 1]`.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

impl EventLaw {
    pub fn validate(&self, path: &str) -> Result<()> {
        match self {
            EventLaw::Exponential { rate } => positive(path, "rate", *rate),
            EventLaw::Weibull { shape, scale } => {
                positive(path, "shape", *shape)?;
                positive(path, "scale", *scale)
            }
            EventLaw::PiecewiseExponential { breakpoints, rates } => {
                if rates.len() != breakpoints.len() + 1 {
                    return Err(Error::config(
                        format!("{path}.rates"),
                        format!("expected {} rates for {} breakpoints", breakpoints.len() + 1, breakpoints.len()),
                    ));
                }
                if breakpoints.iter().any(|b| !(*b > 0.0 && b.is_finite())) || breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::config(
                        format!("{path}.breakpoints"),
                        "breakpoints must be positive and strictly increasing",
                    ));
                }
                if rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
                    return Err(Error::config(format!("{path}.rates"), "rates must be finite and nonnegative"));
                }
                if *rates.last().expect("nonempty") <= 0.0 {
                    return Err(Error::config(format!("{path}.rates"), "the last rate must be positive"));
                }
                Ok(())
            }
        }
    }

    fn cumulative_hazard(&self, t: f64) -> f64 {
        match self {
            EventLaw::Exponential { rate } => rate * t,
            EventLaw::Weibull { shape, scale } => (t / scale).powf(*shape),
            EventLaw::PiecewiseExponential { breakpoints, rates } => {
                let mut h = 0.0;
                let mut left = 0.0;
                for (j, &r) in rates.iter().enumerate() {
                    let right = breakpoints.get(j).copied().unwrap_or(f64::INFINITY);
                    if t <= right {
                        return h + r * (t - left);
                    }
                    h += r * (right - left);
                    left = right;
                }
                h
            }
        }
    }

    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            1.0
        } else {
            (-self.cumulative_hazard(t)).exp()
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e = -open_unit(rng).ln();
        match self {
            EventLaw::Exponential { rate } => e / rate,
            EventLaw::Weibull { shape, scale } => scale * e.powf(1.0 / shape),
            EventLaw::PiecewiseExponential { breakpoints, rates } => {
                let mut remaining = e;
                let mut left = 0.0;
                for (j, &r) in rates.iter().enumerate() {
                    let right = breakpoints.get(j).copied().unwrap_or(f64::INFINITY);
                    let piece = r * (right - left);
                    if remaining <= piece {
                        return left + remaining / r;
                    }
                    remaining -= piece;
                    left = right;
                }
                unreachable!("last rate is positive")
            }
        }
    }

    /// `int_0^tau S(t) dt` in closed form.
    pub fn rmst(&self, tau: f64) -> f64 {
        match self {
            EventLaw::Exponential { rate } => -(-rate * tau).exp_m1() / rate,
            EventLaw::Weibull { shape, scale } => {
                let a = 1.0 / shape;
                scale * a * ln_gamma(a).exp() * regularized_gamma_p(a, (tau / scale).powf(*shape))
            }
            EventLaw::PiecewiseExponential { breakpoints, rates } => {
                let mut total = 0.0;
                let mut h = 0.0_f64;
                let mut left = 0.0;
                for (j, &r) in rates.iter().enumerate() {
                    let right = breakpoints.get(j).copied().unwrap_or(f64::INFINITY).min(tau);
                    if right > left {
                        let width = right - left;
                        total += if r > 0.0 {
                            (-h).exp() * -(-r * width).exp_m1() / r
                        } else {
                            (-h).exp() * width
                        };
                        h += r * width;
                    }
                    left = right;
                    if left >= tau {
                        break;
                    }
                }
                total
            }
        }
    }

    /// Restricted mean of `ceil(T)`: its survival function is `S(floor t)`.
    pub fn rmst_rounded_up(&self, tau: f64) -> f64 {
        let last = tau.ceil() as usize;
        (0..last)
            .map(|j| {
                let j = j as f64;
                self.survival(j) * ((j + 1.0).min(tau) - j)
            })
            .sum()
    }

    pub fn restricted_mean(&self, tau: f64, rounded: bool) -> f64 {
        if rounded {
            self.rmst_rounded_up(tau)
        } else {
            self.rmst(tau)
        }
    }

    /// Law of `factor * T`.
    pub fn time_scaled(&self, factor: f64) -> EventLaw {
        match self {
            EventLaw::Exponential { rate } => EventLaw::Exponential { rate: rate / factor },
            EventLaw::Weibull { shape, scale } => EventLaw::Weibull {
                shape: *shape,
                scale: scale * factor,
            },
            EventLaw::PiecewiseExponential { breakpoints, rates } => EventLaw::PiecewiseExponential {
                breakpoints: breakpoints.iter().map(|b| b * factor).collect(),
                rates: rates.iter().map(|r| r / factor).collect(),
            },
        }
    }
}

impl CensoringLaw {
    pub fn validate(&self, path: &str) -> Result<()> {
        match self {
            CensoringLaw::None => Ok(()),
            CensoringLaw::Exponential { rate } => positive(path, "rate", *rate),
            CensoringLaw::Uniform { lower, upper } => {
                if *lower >= 0.0 && upper > lower && upper.is_finite() {
                    Ok(())
                } else {
                    Err(Error::config(path, format!("uniform censoring needs 0 <= lower < upper, got [{lower}, {upper}]")))
                }
            }
            CensoringLaw::Weibull { shape, scale } => {
                positive(path, "shape", *shape)?;
                positive(path, "scale", *scale)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            CensoringLaw::None => f64::INFINITY,
            CensoringLaw::Exponential { rate } => -open_unit(rng).ln() / rate,
            CensoringLaw::Uniform { lower, upper } => lower + (upper - lower) * rng.random::<f64>(),
            CensoringLaw::Weibull { shape, scale } => scale * (-open_unit(rng).ln()).powf(1.0 / shape),
        }
    }
}

/// Scale factor `c` such that the restricted mean of `base.time_scaled(c)`
/// equals `target`, found by bisection on `log c`.
pub fn calibrate_time_scale(base: &EventLaw, tau: f64, rounded: bool, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < tau) {
        return Err(Error::config(
            "delta",
            format!("shifted restricted mean {target} is not attainable inside (0, {tau})"),
        ));
    }
    let f = |log_c: f64| base.time_scaled(log_c.exp()).restricted_mean(tau, rounded) - target;
    let (mut lo, mut hi) = (-30.0f64, 30.0f64);
    if f(lo) > 0.0 || f(hi) < 0.0 {
        return Err(Error::config("delta", format!("cannot reach restricted mean {target} by rescaling time")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    /// Trapezoid rule on a fine grid.
    fn rmst_by_quadrature(law: &EventLaw, tau: f64) -> f64 {
        let n = 400_000;
        let h = tau / n as f64;
        let mut s = 0.5 * (law.survival(0.0) + law.survival(tau));
        for i in 1..n {
            s += law.survival(i as f64 * h);
        }
        s * h
    }

    fn laws() -> Vec<EventLaw> {
        vec![
            EventLaw::Exponential { rate: 0.2 },
            EventLaw::Weibull { shape: 1.5, scale: 8.0 },
            EventLaw::Weibull { shape: 0.7, scale: 12.0 },
            EventLaw::PiecewiseExponential {
                breakpoints: vec![2.0, 6.0],
                rates: vec![0.3, 0.0, 0.15],
            },
        ]
    }

    #[test]
    fn closed_form_rmst_matches_quadrature() {
        for law in laws() {
            let exact = law.rmst(10.0);
            let quad = rmst_by_quadrature(&law, 10.0);
            assert!((exact - quad).abs() < 1e-6, "{law:?}: {exact} vs {quad}");
        }
    }

    #[test]
    fn rounded_rmst_matches_monte_carlo() {
        let law = EventLaw::Exponential { rate: 0.2 };
        let mut rng = RngStream::new(9, 0).generator();
        let n = 400_000;
        let mean: f64 = (0..n).map(|_| law.sample(&mut rng).ceil().min(10.0)).sum::<f64>() / n as f64;
        let exact = law.rmst_rounded_up(10.0);
        assert!((mean - exact).abs() < 0.02, "{mean} vs {exact}");
        assert!(exact > law.rmst(10.0));
    }

    #[test]
    fn sampling_matches_survival() {
        for law in laws() {
            let mut rng = RngStream::new(3, 1).generator();
            let n = 200_000;
            let draws: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
            for &t in &[1.0, 4.0, 9.0] {
                let emp = draws.iter().filter(|&&x| x > t).count() as f64 / n as f64;
                assert!((emp - law.survival(t)).abs() < 0.005, "{law:?} at {t}");
            }
        }
    }

    #[test]
    fn calibration_hits_target() {
        for law in laws() {
            for rounded in [false, true] {
                let target = law.restricted_mean(10.0, rounded) - 1.5;
                let c = calibrate_time_scale(&law, 10.0, rounded, target).unwrap();
                let got = law.time_scaled(c).restricted_mean(10.0, rounded);
                assert!((got - target).abs() < 1e-10, "{law:?} rounded={rounded}");
            }
        }
        assert!(calibrate_time_scale(&laws()[0], 10.0, false, 11.0).is_err());
    }

    #[test]
    fn validation() {
        assert!(EventLaw::Exponential { rate: 0.0 }.validate("e").is_err());
        assert!(EventLaw::PiecewiseExponential { breakpoints: vec![1.0], rates: vec![1.0] }
            .validate("e")
            .is_err());
        assert!(EventLaw::PiecewiseExponential { breakpoints: vec![2.0, 1.0], rates: vec![1.0; 3] }
            .validate("e")
            .is_err());
        assert!(CensoringLaw::Uniform { lower: 5.0, upper: 1.0 }.validate("c").is_err());
        assert!(CensoringLaw::None.validate("c").is_ok());
    }
}
