//! Right-continuous step functions on `[0, inf)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Piecewise-constant, right-continuous function. Holds `initial_value` on
/// `[0, jump_times[0])` and `values[k]` on `[jump_times[k], jump_times[k+1])`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepFunction {
    jump_times: Vec<f64>,
    values: Vec<f64>,
    initial_value: f64,
}

impl StepFunction {
    pub fn new(jump_times: Vec<f64>, values: Vec<f64>, initial_value: f64) -> Result<Self> {
        if jump_times.len() != values.len() {
            return Err(Error::MalformedStep("one value per jump time is required"));
        }
        if jump_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::MalformedStep("jump times must be finite and nonnegative"));
        }
        if jump_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedStep("jump times must be strictly increasing"));
        }
        Ok(Self {
            jump_times,
            values,
            initial_value,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            jump_times: Vec::new(),
            values: Vec::new(),
            initial_value: value,
        }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn initial_value(&self) -> f64 {
        self.initial_value
    }

    /// Size of the jump at index `k` (`values[k] - value before it`).
    pub fn jump_size(&self, k: usize) -> f64 {
        let before = if k == 0 { self.initial_value } else { self.values[k - 1] };
        self.values[k] - before
    }

    /// Right-continuous value at `t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        Ok(self.eval_unchecked(t))
    }

    /// Left limit `lim_{s -> t-}`.
    pub fn eval_left(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        Ok(self.eval_left_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        self.value_before(k)
    }

    pub(crate) fn eval_left_unchecked(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s < t);
        self.value_before(k)
    }

    #[inline]
    fn value_before(&self, k: usize) -> f64 {
        if k == 0 {
            self.initial_value
        } else {
            self.values[k - 1]
        }
    }
}
