use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("E_NEGATIVE_COUNT: counts must be non-negative (broken = {broken}, asked = {asked})")]
    NegativeCount { broken: i64, asked: i64 },
    #[error("E_NEGATIVE_COUNT: {broken} breakdowns out of only {asked} questions")]
    BrokenExceedsAsked { broken: i64, asked: i64 },
    #[error("E_RANGE: {field} = {value} is outside [{min}, {max}]")]
    Range { field: String, value: i64, min: i64, max: i64 },
    #[error("E_EMPTY: nothing to aggregate")]
    Empty,
}

impl MetricsError {
    pub fn code(&self) -> &'static str {
        match self {
            MetricsError::NegativeCount { .. } | MetricsError::BrokenExceedsAsked { .. } => "E_NEGATIVE_COUNT",
            MetricsError::Range { .. } => "E_RANGE",
            MetricsError::Empty => "E_EMPTY",
        }
    }
}

/// Percentage of broken questions, 0 when nothing was asked.
pub fn breakdown_rate(broken: i64, asked: i64) -> Result<f64, MetricsError> {
    if broken < 0 || asked < 0 {
        return Err(MetricsError::NegativeCount { broken, asked });
    }
    if broken > asked {
        return Err(MetricsError::BrokenExceedsAsked { broken, asked });
    }
    if asked == 0 {
        return Ok(0.0);
    }
    Ok(100.0 * broken as f64 / asked as f64)
}

pub const VAS_MAX: i64 = 100;

pub fn vas_delta(pre: i64, post: i64) -> Result<i64, MetricsError> {
    for (field, value) in [("vas_pre", pre), ("vas_post", post)] {
        if !(0..=VAS_MAX).contains(&value) {
            return Err(MetricsError::Range {
                field: field.into(),
                value,
                min: 0,
                max: VAS_MAX,
            });
        }
    }
    Ok(post - pre)
}

/// Round half away from zero to two decimals.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mean {
    sum: f64,
    n: usize,
}

impl Mean {
    pub fn push(&mut self, x: f64) {
        self.sum += x;
        self.n += 1;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn value(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

impl FromIterator<f64> for Mean {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Mean::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}
