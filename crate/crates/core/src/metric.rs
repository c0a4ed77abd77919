//! Per-instance evaluation metrics `phi(y, g)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    SquaredError,
}

impl MetricKind {
    /// Closed range of attainable metric values.
    pub fn range(self) -> (f64, f64) {
        match self {
            MetricKind::Accuracy => (0.0, 1.0),
            MetricKind::SquaredError => (0.0, f64::INFINITY),
        }
    }

    pub fn clamp(self, value: f64) -> f64 {
        let (lo, hi) = self.range();
        value.clamp(lo, hi)
    }

    /// Scores a scalar output against a scalar ground truth.
    ///
    /// Accuracy on reals is exact equality.
    pub fn score(self, y: f64, g: f64) -> Result<f64> {
        match self {
            MetricKind::Accuracy => {
                if !y.is_finite() || !g.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "non-finite accuracy input ({y}, {g})"
                    )));
                }
                Ok(if y == g { 1.0 } else { 0.0 })
            }
            MetricKind::SquaredError => squared_error_metric(y, g),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::SquaredError => "squared_error",
        })
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(MetricKind::Accuracy),
            "squared_error" => Ok(MetricKind::SquaredError),
            other => Err(Error::InvalidInput(format!("unknown metric {other:?}"))),
        }
    }
}

/// Exact-match correctness after trimming surrounding whitespace.
pub fn accuracy_metric(y: &str, g: &str) -> u8 {
    u8::from(canonicalize(y) == canonicalize(g))
}

pub fn canonicalize(answer: &str) -> &str {
    answer.trim()
}

pub fn squared_error_metric(y: f64, g: f64) -> Result<f64> {
    if !y.is_finite() || !g.is_finite() {
        return Err(Error::InvalidInput(format!(
            "squared error needs finite inputs, got ({y}, {g})"
        )));
    }
    let d = y - g;
    Ok(d * d)
}
