//! The smoothing kernel used by the jump counts and the integral constants
//! that scale the estimator's asymptotic variance.
//!
//! `K` is the logistic bump: 1 on `[-1, 1]`, 0 outside `(-2, 2)` and a
//! `C^inf` transition in between. Every constant below is an integral
//! against `|x|^-(1+beta)`; because `K` is constant away from `1 < |x| < 2`,
//! each one splits into a compact piece (adaptive quadrature) and an exact
//! power-law tail.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{check_domain, Result};
use crate::quadrature::{integrate, integrate_pieces, Tolerance};

/// Relative tolerance for every constant computed here.
pub const QUAD_REL_TOL: f64 = 1e-9;

fn tol() -> Tolerance {
    Tolerance::relative(QUAD_REL_TOL)
}

/// Exponent of the transition region, `1/(2-|x|) - 1/(|x|-1)`, for `1 < |x| < 2`.
#[inline]
fn bump_exponent(a: f64) -> f64 {
    1.0 / (2.0 - a) - 1.0 / (a - 1.0)
}

/// The kernel `K(x)`.
#[inline]
pub fn kernel_k(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        1.0 / (1.0 + bump_exponent(a).exp())
    }
}

/// `1 - K(x)`, evaluated without cancellation near `|x| = 1`.
#[inline]
pub fn kernel_complement(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        0.0
    } else if a >= 2.0 {
        1.0
    } else {
        1.0 / (1.0 + (-bump_exponent(a)).exp())
    }
}

/// `K'(x)` for `x > 0`; zero off `(1, 2)`.
fn kernel_derivative(x: f64) -> f64 {
    if x <= 1.0 || x >= 2.0 {
        return 0.0;
    }
    let g = bump_exponent(x);
    let slope = 1.0 / ((2.0 - x) * (2.0 - x)) + 1.0 / ((x - 1.0) * (x - 1.0));
    // K(1-K) = 1 / (4 cosh^2(g/2))
    let c = (0.5 * g).cosh();
    -slope / (4.0 * c * c)
}

/// `C_beta = -2 Gamma(-beta) cos(beta pi / 2)`, with the removable singularity
/// at `beta = 1` filled by `pi`.
pub fn c_beta(beta: f64) -> Result<f64> {
    check_domain("beta", beta, beta > 0.0 && beta < 2.0, "0 < beta < 2")?;
    Ok(c_beta_unchecked(beta))
}

/// Reflection form `pi / (Gamma(1 + beta) sin(beta pi / 2))`, which has no
/// singularity at `beta = 1` and is infinite at `beta = 2`.
pub(crate) fn c_beta_unchecked(beta: f64) -> f64 {
    if beta == 1.0 {
        return PI;
    }
    if beta >= 2.0 {
        return f64::INFINITY;
    }
    PI / (gamma(1.0 + beta) * (0.5 * beta * PI).sin())
}

fn check_beta(beta: f64) -> Result<()> {
    check_domain("beta", beta, beta > 0.0 && beta < 2.0, "0 < beta < 2")
}

fn check_beta_closed(beta: f64) -> Result<()> {
    check_domain("beta", beta, beta > 0.0 && beta <= 2.0, "0 < beta <= 2")
}

/// `int_{|x|>=2} |x|^-(1+beta) dx / 2`
#[inline]
fn tail_from_two(beta: f64) -> f64 {
    2f64.powf(-beta) / beta
}

/// `K_beta = int (1 - K(x)) |x|^-(1+beta) dx`.
pub fn compute_k_beta(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    k_beta_unchecked(beta)
}

fn k_beta_unchecked(beta: f64) -> Result<f64> {
    let p = -(1.0 + beta);
    let bump = integrate(|x| kernel_complement(x) * x.powf(p), 1.0, 2.0, tol())?;
    Ok(2.0 * (bump.value + tail_from_two(beta)))
}

/// Sorted breakpoints of `K(x)` and `K(rho x)` restricted to `[lo, hi]`.
fn breakpoints(rho: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    for p in [1.0 / rho, 2.0 / rho, 1.0, 2.0] {
        if p > lo && p < hi {
            pts.push(p);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `K_{beta,rho} = int (K(x) - K(rho x))^2 |x|^-(1+beta) dx`, supported on
/// `1/rho <= |x| <= 2`.
pub fn compute_k_beta_rho(beta: f64, rho: f64) -> Result<f64> {
    check_beta(beta)?;
    check_domain("rho", rho, rho > 1.0, "rho > 1")?;
    k_beta_rho_unchecked(beta, rho)
}

fn k_beta_rho_unchecked(beta: f64, rho: f64) -> Result<f64> {
    let p = -(1.0 + beta);
    let f = |x: f64| {
        let d = kernel_k(x) - kernel_k(rho * x);
        d * d * x.powf(p)
    };
    let half = integrate_pieces(f, &breakpoints(rho, 1.0 / rho, 2.0), tol())?;
    Ok(2.0 * half.value)
}

/// `Kbar_{beta,rho} = rho^-(beta/2) int (1 - K(x)) (1 - K(rho x)) |x|^-(1+beta) dx`
/// for `rho >= 1`.
pub fn compute_kbar_beta_rho(beta: f64, rho: f64) -> Result<f64> {
    check_beta(beta)?;
    check_domain("rho", rho, rho >= 1.0, "rho >= 1")?;
    kbar_beta_rho_unchecked(beta, rho)
}

fn kbar_beta_rho_unchecked(beta: f64, rho: f64) -> Result<f64> {
    let p = -(1.0 + beta);
    let f = |x: f64| kernel_complement(x) * kernel_complement(rho * x) * x.powf(p);
    let bump = integrate_pieces(f, &breakpoints(rho, 1.0, 2.0), tol())?;
    Ok(rho.powf(-0.5 * beta) * 2.0 * (bump.value + tail_from_two(beta)))
}

/// Composite Gauss–Kronrod nodes on `[1, 2]` with `K'` pre-evaluated.
struct BumpRule {
    nodes: Vec<f64>,
    weighted_derivative: Vec<f64>,
}

const BUMP_PANELS: usize = 128;

fn bump_rule() -> &'static BumpRule {
    static RULE: OnceLock<BumpRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut nodes = Vec::with_capacity(BUMP_PANELS * 21);
        let mut weighted_derivative = Vec::with_capacity(BUMP_PANELS * 21);
        for (x, w) in crate::quadrature::composite_nodes(1.0, 2.0, BUMP_PANELS) {
            nodes.push(x);
            weighted_derivative.push(w * kernel_derivative(x));
        }
        BumpRule {
            nodes,
            weighted_derivative,
        }
    })
}

/// Fourier transform `F[K](u) = int K(x) e^{iux} dx = 2 int_0^2 K(x) cos(ux) dx`.
///
/// For `u != 0` this is evaluated after one integration by parts,
/// `-(2/u) int_1^2 K'(x) sin(ux) dx`, which avoids the cancellation between
/// the flat part and the bump once `F[K]` has decayed. `K'` vanishes to all
/// orders at both ends, so a fixed composite rule is accurate well past the
/// point where `F[K]` drops below `1e-15`.
pub fn fourier_k(u: f64) -> Result<f64> {
    let u = u.abs();
    if u == 0.0 {
        let bump = integrate(kernel_k, 1.0, 2.0, tol())?;
        return Ok(2.0 * (1.0 + bump.value));
    }
    let rule = bump_rule();
    let inner: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weighted_derivative)
        .map(|(&x, &wd)| wd * (u * x).sin())
        .sum();
    Ok(-2.0 * inner / u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub beta: f64,
    pub rho: f64,
    pub k_beta: f64,
    pub k_beta_rho: f64,
    pub kbar_beta_rho: f64,
    pub kbar_beta_1: f64,
    pub c_beta_rho: f64,
    /// Infinite at `beta = 2`.
    pub c_beta: f64,
    pub quad_rel_tol: f64,
}

type Cache = Mutex<HashMap<(u64, u64), KernelConstants>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// All constants for `(beta, rho)`, `beta` in `(0, 2]`, `rho > 1`. Memoized on
/// the exact bit patterns of the arguments.
pub fn make_constants(beta: f64, rho: f64) -> Result<KernelConstants> {
    check_beta_closed(beta)?;
    check_domain("rho", rho, rho > 1.0 && rho.is_finite(), "rho > 1")?;
    let key = (beta.to_bits(), rho.to_bits());
    if let Some(c) = cache().lock().unwrap().get(&key) {
        return Ok(*c);
    }
    let k_beta = k_beta_unchecked(beta)?;
    let k_beta_rho = k_beta_rho_unchecked(beta, rho)?;
    let kbar_beta_rho = kbar_beta_rho_unchecked(beta, rho)?;
    let kbar_beta_1 = kbar_beta_rho_unchecked(beta, 1.0)?;
    let ln_rho = rho.ln();
    let c_beta_rho = k_beta_rho / (rho.powf(beta) * ln_rho * ln_rho * k_beta * k_beta);
    let out = KernelConstants {
        beta,
        rho,
        k_beta,
        k_beta_rho,
        kbar_beta_rho,
        kbar_beta_1,
        c_beta_rho,
        c_beta: c_beta_unchecked(beta),
        quad_rel_tol: QUAD_REL_TOL,
    };
    cache().lock().unwrap().insert(key, out);
    Ok(out)
}

/// Numerical checks of the integral identities tying the constants together.
pub mod identities {
    use super::*;

    /// `int_0^inf (1 - cos(ux)) x^-(1+beta) dx`, which should equal
    /// `C_beta |u|^beta / 2`.
    ///
    /// Near zero the integrand is summed from its power series, the middle is
    /// integrated period by period, and beyond `x = 2 pi N / |u|` the
    /// `x^-(1+beta)` part is exact while the cosine part uses its asymptotic
    /// expansion.
    pub fn levy_symbol_integral(beta: f64, u: f64) -> Result<f64> {
        check_beta(beta)?;
        let u = u.abs();
        if u == 0.0 {
            return Ok(0.0);
        }
        let p = -(1.0 + beta);
        let period = 2.0 * PI / u;

        // [0, a] with ua = pi/2
        let a = 0.25 * period;
        let mut head = 0.0;
        let mut sign = 1.0;
        let mut fact = 1.0;
        for k in 1..40 {
            let two_k = 2.0 * k as f64;
            fact *= (two_k - 1.0) * two_k;
            let term = sign * u.powf(two_k) * a.powf(two_k - beta) / (fact * (two_k - beta));
            head += term;
            if term.abs() < 1e-18 * head.abs() {
                break;
            }
            sign = -sign;
        }

        const PERIODS: usize = 400;
        let mut pts = vec![a];
        pts.extend((1..=PERIODS).map(|i| i as f64 * period));
        let t = Tolerance {
            rel: 1e-12,
            abs: 1e-18,
            max_subdivisions: 200,
        };
        let body = integrate_pieces(|x| (1.0 - (u * x).cos()) * x.powf(p), &pts, t)?.value;

        // cos(uL) = 1, sin(uL) = 0 at L = PERIODS * period
        let l = *pts.last().unwrap();
        let s = 1.0 + beta;
        let cos_tail = s * l.powf(-s - 1.0) / (u * u)
            - s * (s + 1.0) * (s + 2.0) * l.powf(-s - 3.0) / u.powi(4);
        let tail = l.powf(-beta) / beta - cos_tail;
        Ok(head + body + tail)
    }

    /// `C_beta int F[K](u) |u|^beta du`, which should equal `2 pi K_beta`.
    ///
    /// The outer integral runs over panels of width `pi` until `|F[K]|` stays
    /// below `cutoff` across a whole panel.
    pub fn fourier_moment(beta: f64, cutoff: f64) -> Result<f64> {
        check_beta(beta)?;
        let t = Tolerance {
            rel: 1e-10,
            abs: 1e-13,
            max_subdivisions: 200,
        };
        let mut total = 0.0;
        let mut lo = 0.0;
        let mut quiet_panels = 0;
        // never integrate past where F[K] is numerically zero anyway
        while lo < 1e5 {
            let hi = lo + PI;
            let peak = std::cell::Cell::new(0.0f64);
            let panel = integrate(
                |u| {
                    let f = fourier_k(u).unwrap_or(f64::NAN);
                    peak.set(peak.get().max(f.abs()));
                    f * u.powf(beta)
                },
                lo,
                hi,
                t,
            );
            total += panel?.value;
            lo = hi;
            if peak.get() < cutoff {
                quiet_panels += 1;
                if quiet_panels >= 3 {
                    break;
                }
            } else {
                quiet_panels = 0;
            }
        }
        Ok(2.0 * c_beta_unchecked(beta) * total)
    }
}
