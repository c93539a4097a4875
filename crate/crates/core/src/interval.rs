use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{check_domain, Result};

/// `Phi^-1((1 + gamma) / 2)`: the half-width multiplier of a two-sided
/// `gamma`-level normal interval.
pub fn two_sided_quantile(gamma: f64) -> Result<f64> {
    check_domain("gamma", gamma, gamma > 0.0 && gamma < 1.0, "0 < gamma < 1")?;
    let std = Normal::standard();
    Ok(std.inverse_cdf(0.5 * (1.0 + gamma)))
}

/// A confidence set for the activity index, always a (possibly empty)
/// sub-interval of the open interval `(0, 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub gamma: f64,
    /// `None` when the set is empty.
    pub bounds: Option<(f64, f64)>,
}

impl ConfidenceInterval {
    pub fn empty(gamma: f64) -> Self {
        Self {
            gamma,
            bounds: None,
        }
    }

    /// `[center - half_width, center + half_width]` intersected with `(0, 2)`.
    pub fn around(gamma: f64, center: f64, half_width: f64) -> Self {
        if half_width.is_nan() || half_width < 0.0 || !center.is_finite() {
            return Self::empty(gamma);
        }
        let lo = (center - half_width).max(0.0);
        let hi = (center + half_width).min(2.0);
        if lo > hi || hi <= 0.0 || lo >= 2.0 {
            return Self::empty(gamma);
        }
        Self {
            gamma,
            bounds: Some((lo, hi)),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_none()
    }

    pub fn lo(&self) -> Option<f64> {
        self.bounds.map(|b| b.0)
    }

    pub fn hi(&self) -> Option<f64> {
        self.bounds.map(|b| b.1)
    }

    pub fn contains(&self, beta: f64) -> bool {
        match self.bounds {
            Some((lo, hi)) => beta > 0.0 && beta < 2.0 && lo <= beta && beta <= hi,
            None => false,
        }
    }

    pub fn diameter(&self) -> f64 {
        self.bounds.map_or(0.0, |(lo, hi)| hi - lo)
    }
}
