//! Single-scale jump-counting comparator: raw increments, a hard threshold
//! and the clipped log-ratio of counts at `tau` and `rho tau`.

use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Error, Result};
use crate::estimator::log_ratio;
use crate::interval::{two_sided_quantile, ConfidenceInterval};
use crate::path::LogPricePath;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AjConfig {
    pub c: f64,
    pub rho: f64,
    pub alpha: f64,
}

impl Default for AjConfig {
    fn default() -> Self {
        Self {
            c: 0.05,
            rho: 2.0,
            alpha: 0.2,
        }
    }
}

impl AjConfig {
    pub fn validate(&self) -> Result<()> {
        check_domain("c", self.c, self.c > 0.0 && self.c.is_finite(), "c > 0")?;
        check_domain(
            "rho",
            self.rho,
            self.rho > 1.0 && self.rho.is_finite(),
            "rho > 1",
        )?;
        check_domain(
            "alpha",
            self.alpha,
            self.alpha > 0.0 && self.alpha < 0.5,
            "0 < alpha < 1/2",
        )
    }

    pub fn tau(&self, n: usize) -> f64 {
        self.c * (n as f64).powf(self.alpha)
    }
}

/// Number of increments with `tau |X_{j+1} - X_j| >= 1`.
pub fn aj_count(path: &LogPricePath, tau: f64) -> Result<u64> {
    check_domain("tau", tau, tau > 0.0 && tau.is_finite(), "tau > 0")?;
    let x = path.values();
    if x.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: x.len(),
        });
    }
    Ok(x.windows(2)
        .filter(|w| tau * (w[1] - w[0]).abs() >= 1.0)
        .count() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AjEstimate {
    /// Clipped to `[0, 2]`.
    pub beta_tilde: f64,
    pub raw_log_ratio: f64,
    pub count_tau: u64,
    pub count_rho_tau: u64,
    pub tau_n: f64,
    pub rho: f64,
    pub clipped: bool,
}

impl AjEstimate {
    pub fn from_counts(count_tau: u64, count_rho_tau: u64, tau_n: f64, rho: f64) -> Self {
        let raw = log_ratio(count_tau as f64, count_rho_tau as f64, rho);
        let beta_tilde = raw.clamp(0.0, 2.0);
        Self {
            beta_tilde,
            raw_log_ratio: raw,
            count_tau,
            count_rho_tau,
            tau_n,
            rho,
            clipped: beta_tilde != raw,
        }
    }

    /// `1 / A(tau) - 1 / A(rho tau)` when strictly positive. With
    /// `A(tau) = 0 < A(rho tau)` this is `+inf`.
    fn variance_proxy(&self) -> Option<f64> {
        if self.count_rho_tau == 0 {
            return None;
        }
        let v = 1.0 / self.count_tau as f64 - 1.0 / self.count_rho_tau as f64;
        (v > 0.0).then_some(v)
    }

    /// `ln(rho) (1/A(tau) - 1/A(rho tau))^{-1/2} (beta_tilde - beta)`, or `None`
    /// when the variance proxy is not positive. An infinite proxy gives `0`
    /// and an interval covering all of `(0, 2)`.
    pub fn standardized_error(&self, beta: f64) -> Option<f64> {
        let v = self.variance_proxy()?;
        Some(self.rho.ln() * (self.beta_tilde - beta) / v.sqrt())
    }

    pub fn confidence_interval(&self, gamma: f64) -> Result<ConfidenceInterval> {
        let z = two_sided_quantile(gamma)?;
        Ok(match self.variance_proxy() {
            Some(v) => {
                ConfidenceInterval::around(gamma, self.beta_tilde, z * v.sqrt() / self.rho.ln())
            }
            None => ConfidenceInterval::empty(gamma),
        })
    }
}

pub fn aj_estimate(path: &LogPricePath, config: &AjConfig) -> Result<AjEstimate> {
    config.validate()?;
    let tau_n = config.tau(path.len());
    let a = aj_count(path, tau_n)?;
    let b = aj_count(path, config.rho * tau_n)?;
    Ok(AjEstimate::from_counts(a, b, tau_n, config.rho))
}
