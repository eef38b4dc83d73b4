use serde::Serialize;

use crate::error::{Error, Result};

/// Right-continuous piecewise-constant function on `[0, inf)`.
///
/// The value on `[0, t_1)` is `initial_value`; on `[t_j, t_{j+1})` it is
/// `values[j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFunction {
    initial_value: f64,
    jump_times: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn constant(value: f64) -> Self {
        StepFunction {
            initial_value: value,
            jump_times: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn new(initial_value: f64, jump_times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if jump_times.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} jump times but {} values",
                jump_times.len(),
                values.len()
            )));
        }
        if let Some(t) = jump_times.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
            return Err(Error::domain(format!("jump time {t} is not a finite nonnegative number")));
        }
        if jump_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("jump times must be strictly increasing"));
        }
        Ok(StepFunction {
            initial_value,
            jump_times,
            values,
        })
    }

    /// Builds the function from `(time, value)` pairs already known to be
    /// strictly increasing in time.
    pub(crate) fn from_sorted(initial_value: f64, points: Vec<(f64, f64)>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0].0 < w[1].0));
        let (jump_times, values) = points.into_iter().unzip();
        StepFunction {
            initial_value,
            jump_times,
            values,
        }
    }

    pub fn initial_value(&self) -> f64 {
        self.initial_value
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.jump_times.partition_point(|&x| x <= t) {
            0 => self.initial_value,
            j => self.values[j - 1],
        }
    }

    /// Left limit `f(t-)`.
    pub fn eval_left(&self, t: f64) -> f64 {
        match self.jump_times.partition_point(|&x| x < t) {
            0 => self.initial_value,
            j => self.values[j - 1],
        }
    }

    /// Exact integral over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        if !(a >= 0.0) || !(a <= b) {
            return Err(Error::domain(format!(
                "integration bounds must satisfy 0 <= a <= b, got a = {a}, b = {b}"
            )));
        }
        if a == b {
            return Ok(0.0);
        }
        let mut j = self.jump_times.partition_point(|&x| x <= a);
        let mut left = a;
        let mut current = if j == 0 {
            self.initial_value
        } else {
            self.values[j - 1]
        };
        let mut total = 0.0;
        while j < self.jump_times.len() && self.jump_times[j] < b {
            let t = self.jump_times[j];
            total += current * (t - left);
            left = t;
            current = self.values[j];
            j += 1;
        }
        total += current * (b - left);
        Ok(total)
    }
}

/// Free-function form of [`StepFunction::integrate`].
pub fn integrate_step(f: &StepFunction, a: f64, b: f64) -> Result<f64> {
    f.integrate(a, b)
}
