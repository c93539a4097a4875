//! The multi-scale jump activity estimator.
//!
//! Second differences of the path are summed over `k = 1..m` consecutive
//! non-overlapping pairs, pushed through the smoothed threshold `1 - K(tau x)`
//! and combined with weights `w_k` that cancel the leading bias terms across
//! time-scales. The activity index is read off the ratio of the combined
//! counts at thresholds `tau` and `rho tau`.

use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Error, Result};
use crate::interval::{two_sided_quantile, ConfidenceInterval};
use crate::kernel::{kernel_complement, make_constants};
use crate::path::LogPricePath;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Number of time-scales.
    pub m: usize,
    pub rho: f64,
    /// `tau_n = c * n^alpha`.
    pub c: f64,
    pub alpha: f64,
    /// Estimates below this are reported as zero.
    pub beta_zero_tol: f64,
    pub gamma_levels: Vec<f64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self::with_scales(3)
    }
}

impl EstimatorConfig {
    /// Defaults with `m` scales and the matching rate `alpha = m / (2 (m + 1))`.
    pub fn with_scales(m: usize) -> Self {
        Self {
            m,
            rho: 2.0,
            c: 0.05,
            alpha: default_alpha(m),
            beta_zero_tol: 1e-3,
            gamma_levels: vec![0.95],
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_domain("m", self.m as f64, self.m >= 1, "m >= 1")?;
        check_domain(
            "rho",
            self.rho,
            self.rho > 1.0 && self.rho.is_finite(),
            "rho > 1",
        )?;
        check_domain("c", self.c, self.c > 0.0 && self.c.is_finite(), "c > 0")?;
        check_domain(
            "alpha",
            self.alpha,
            self.alpha > 0.0 && self.alpha < 0.5,
            "0 < alpha < 1/2",
        )?;
        check_domain(
            "beta_zero_tol",
            self.beta_zero_tol,
            self.beta_zero_tol >= 0.0 && self.beta_zero_tol < 2.0,
            "0 <= beta_zero_tol < 2",
        )?;
        for &g in &self.gamma_levels {
            check_domain("gamma", g, g > 0.0 && g < 1.0, "0 < gamma < 1")?;
        }
        Ok(())
    }

    pub fn tau(&self, n: usize) -> f64 {
        self.c * (n as f64).powf(self.alpha)
    }

    pub fn min_len(&self) -> usize {
        2 * self.m + 2
    }
}

/// `m / (2 (m + 1))`
pub fn default_alpha(m: usize) -> f64 {
    m as f64 / (2.0 * (m as f64 + 1.0))
}

/// Second differences `X_{j+2} - 2 X_{j+1} + X_j`, taken as
/// `(X_{j+2} - X_{j+1}) - (X_{j+1} - X_j)`.
pub fn sym_increments(path: &LogPricePath) -> Result<Vec<f64>> {
    let x = path.values();
    if x.len() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: x.len(),
        });
    }
    Ok(x.windows(3)
        .map(|w| (w[2] - w[1]) - (w[1] - w[0]))
        .collect())
}

/// `sym[j] + sym[j + 2] + ... + sym[j + 2(k - 1)]`: the symmetrized increment
/// over `2k` grid steps starting at `j`.
pub fn multiscale_increment(sym: &[f64], j: usize, k: usize) -> Result<f64> {
    if k == 0 || j + 2 * (k - 1) >= sym.len() {
        return Err(Error::Index(format!(
            "(j, k) = ({j}, {k}) needs index {} but only {} symmetrized increments exist",
            j + 2 * k.saturating_sub(1),
            sym.len()
        )));
    }
    Ok((0..k).map(|l| sym[j + 2 * l]).sum())
}

fn binomial(m: usize, k: usize) -> f64 {
    (0..k).fold(1u128, |acc, i| acc * (m - i) as u128 / (i + 1) as u128) as f64
}

/// `w_k = (-1)^{k+1} C(m, k) / (2k)` for `k = 1..m`.
pub fn weights(m: usize) -> Result<Vec<f64>> {
    check_domain("m", m as f64, m >= 1, "m >= 1")?;
    Ok((1..=m)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * binomial(m, k) / (2 * k) as f64
        })
        .collect())
}

/// A combined jump count before and after clipping at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpCount {
    pub raw: f64,
    pub count: f64,
}

impl JumpCount {
    fn from_raw(raw: f64) -> Self {
        Self {
            raw,
            count: raw.max(0.0),
        }
    }
}

/// Weighted smoothed counts at each threshold in `taus`, in one pass.
fn weighted_counts<const T: usize>(sym: &[f64], w: &[f64], taus: [f64; T]) -> [f64; T] {
    let m = w.len();
    // j ranges over 0..=n-2m-1, and sym.len() = n - 2
    let windows = sym.len() + 2 - 2 * m;
    let mut totals = [0.0; T];
    for j in 0..windows {
        let mut acc = 0.0;
        let mut local = [0.0; T];
        for (k, wk) in w.iter().enumerate() {
            acc += sym[j + 2 * k];
            for (slot, tau) in local.iter_mut().zip(taus) {
                *slot += wk * kernel_complement(tau * acc);
            }
        }
        for (t, l) in totals.iter_mut().zip(local) {
            *t += l;
        }
    }
    totals
}

fn check_len(n: usize, m: usize) -> Result<()> {
    if n < 2 * m + 2 {
        return Err(Error::TooShort {
            needed: 2 * m + 2,
            got: n,
        });
    }
    Ok(())
}

/// `A_n(tau)`: the weighted smoothed jump count over `m` scales.
pub fn jump_count(path: &LogPricePath, tau: f64, m: usize) -> Result<JumpCount> {
    check_domain("tau", tau, tau > 0.0 && tau.is_finite(), "tau > 0")?;
    let w = weights(m)?;
    check_len(path.len(), m)?;
    let sym = sym_increments(path)?;
    let [raw] = weighted_counts(&sym, &w, [tau]);
    Ok(JumpCount::from_raw(raw))
}

/// `log_rho(a_rho / a_tau)` with `0/0 = 1`.
pub(crate) fn log_ratio(a_tau: f64, a_rho_tau: f64, rho: f64) -> f64 {
    match (a_tau == 0.0, a_rho_tau == 0.0) {
        (true, true) => 0.0,
        (true, false) => f64::INFINITY,
        (false, true) => f64::NEG_INFINITY,
        (false, false) => (a_rho_tau / a_tau).ln() / rho.ln(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityEstimate {
    /// In `[0, 2]`.
    pub beta_hat: f64,
    /// Unclipped `log_rho` of the count ratio.
    pub raw_log_ratio: f64,
    pub a_tau: f64,
    pub a_rho_tau: f64,
    pub a_tau_raw: f64,
    pub a_rho_tau_raw: f64,
    pub tau_n: f64,
    /// Undefined when `beta_hat` is zero or `a_tau` is zero.
    pub sigma_hat: Option<f64>,
    pub clipped_low: bool,
    pub clipped_high: bool,
    /// A raw count was negative and clipped to zero.
    pub counts_clipped: bool,
    /// Exactly one of the clipped counts is zero, so the log-ratio is infinite.
    pub degenerate_ratio: bool,
    pub n: usize,
    pub config: EstimatorConfig,
}

impl ActivityEstimate {
    /// Final stage of [`estimate`]: everything downstream of the two raw counts.
    pub fn from_counts(
        a_tau_raw: f64,
        a_rho_tau_raw: f64,
        tau_n: f64,
        n: usize,
        config: &EstimatorConfig,
    ) -> Result<Self> {
        config.validate()?;
        let a_tau = a_tau_raw.max(0.0);
        let a_rho_tau = a_rho_tau_raw.max(0.0);
        let raw_log_ratio = log_ratio(a_tau, a_rho_tau, config.rho);
        let mut beta_hat = raw_log_ratio.clamp(0.0, 2.0);
        if beta_hat < config.beta_zero_tol {
            beta_hat = 0.0;
        }
        let sigma_hat = if beta_hat > 0.0 && a_tau > 0.0 {
            let k = make_constants(beta_hat, config.rho)?;
            Some((k.c_beta_rho * k.k_beta * tau_n.powf(beta_hat) / a_tau).sqrt())
        } else {
            None
        };
        Ok(Self {
            beta_hat,
            raw_log_ratio,
            a_tau,
            a_rho_tau,
            a_tau_raw,
            a_rho_tau_raw,
            tau_n,
            sigma_hat,
            clipped_low: raw_log_ratio < 0.0,
            clipped_high: raw_log_ratio > 2.0,
            counts_clipped: a_tau_raw < 0.0 || a_rho_tau_raw < 0.0,
            degenerate_ratio: (a_tau == 0.0) != (a_rho_tau == 0.0),
            n,
            config: config.clone(),
        })
    }

    /// `tau^{beta_hat/2} (beta_hat - beta) / sigma_hat`; `-inf` when
    /// `beta_hat = 0`, `None` when `sigma_hat` is undefined otherwise.
    pub fn standardized_error(&self, beta: f64) -> Option<f64> {
        if self.beta_hat == 0.0 {
            return Some(f64::NEG_INFINITY);
        }
        let sigma = self.sigma_hat?;
        Some(self.tau_n.powf(0.5 * self.beta_hat) * (self.beta_hat - beta) / sigma)
    }

    /// `sigma_hat * tau^{-beta_hat/2}`, the standard error of `beta_hat`.
    pub fn standard_error(&self) -> Option<f64> {
        if self.beta_hat == 0.0 {
            return None;
        }
        Some(self.sigma_hat? * self.tau_n.powf(-0.5 * self.beta_hat))
    }

    /// `{beta in (0, 2) : |U(beta)| <= z}`, empty when `beta_hat = 0` or the
    /// scale is undefined.
    pub fn confidence_interval(&self, gamma: f64) -> Result<ConfidenceInterval> {
        let z = two_sided_quantile(gamma)?;
        Ok(match self.standard_error() {
            Some(se) => ConfidenceInterval::around(gamma, self.beta_hat, z * se),
            None => ConfidenceInterval::empty(gamma),
        })
    }

    /// Intervals at every level in the configuration.
    pub fn intervals(&self) -> Result<Vec<ConfidenceInterval>> {
        self.config
            .gamma_levels
            .iter()
            .map(|&g| self.confidence_interval(g))
            .collect()
    }
}

/// Estimate the jump activity index of `path`.
pub fn estimate(path: &LogPricePath, config: &EstimatorConfig) -> Result<ActivityEstimate> {
    config.validate()?;
    let n = path.len();
    check_len(n, config.m)?;
    let tau_n = config.tau(n);
    let w = weights(config.m)?;
    let sym = sym_increments(path)?;
    let [a_tau_raw, a_rho_tau_raw] = weighted_counts(&sym, &w, [tau_n, config.rho * tau_n]);
    ActivityEstimate::from_counts(a_tau_raw, a_rho_tau_raw, tau_n, n, config)
}
