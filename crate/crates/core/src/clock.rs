//! Logical time for the fixed-step scheduler.

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("rate {rate} Hz must be positive and no faster than the base rate {base} Hz")]
pub struct BadRate {
    pub rate: f64,
    pub base: f64,
}

/// Time of global tick `k` at `base` Hz.
pub fn tick_time(k: u64, base: f64) -> f64 {
    k as f64 / base
}

/// Decides on which base ticks a slower process runs.
///
/// Tick `k` is due when it is the first tick or when ⌊k·r/base⌋ advanced
/// since tick `k − 1`, so over `n` ticks the process runs ⌊(n−1)·r/base⌋ + 1
/// times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateGate {
    rate: f64,
    base: f64,
}

impl RateGate {
    pub fn new(rate: f64, base: f64) -> Result<Self, BadRate> {
        if !(rate > 0.0 && base > 0.0 && rate <= base && rate.is_finite() && base.is_finite()) {
            return Err(BadRate { rate, base });
        }
        Ok(Self { rate, base })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Nominal period, s.
    pub fn period(&self) -> f64 {
        1.0 / self.rate
    }

    fn slot(&self, k: u64) -> f64 {
        (k as f64 * self.rate / self.base).floor()
    }

    pub fn due(&self, k: u64) -> bool {
        k == 0 || self.slot(k) > self.slot(k - 1)
    }
}
