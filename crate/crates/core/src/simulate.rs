//! Grid simulation of a Brownian motion plus the jump process
//! `R = theta1 S^beta + theta2 S^{beta-0.2}` switched on by the activity
//! profile `g(t) = max(2t - 1, 0)`, observed through additive Gaussian noise.
//!
//! By default `g` modulates the jump intensity, `X_t = B_t + int_0^t g dR`;
//! [`Scaling::Level`] instead multiplies the level, `X_t = B_t + g(t) R_t`.
//!
//! `S^a` is the symmetric `a`-stable Lévy process with `E exp(iu S_1) = exp(-|u|^a)`.
//! Its Lévy density is `|x|^-(1+a) / C_a`, which is what ties the scale
//! `theta` to the probability of a jump above a threshold.

use std::f64::consts::PI;

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Result};
use crate::kernel::c_beta;
use crate::path::LogPricePath;

/// Offset of the nuisance component's index below `beta`.
pub const NUISANCE_OFFSET: f64 = 0.2;
/// Share of `p` used to calibrate the nuisance component.
pub const NUISANCE_SHARE: f64 = 0.05;
pub const DEFAULT_N: usize = 23_400;
pub const DEFAULT_NOISE_SD: f64 = 0.01;
pub const JUMP_THRESHOLD: f64 = 0.2;

/// Independent random streams of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Brownian = 0,
    Activity = 1,
    Nuisance = 2,
    Noise = 3,
}

/// A ChaCha generator keyed by `(seed, replication, tag)` on `stream`.
///
/// The 256-bit key packs the three inputs verbatim, so distinct inputs never
/// share a stream and each replication is reproducible on its own.
pub fn derive_rng(seed: u64, replication: u64, tag: [u64; 2], stream: Stream) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replication.to_le_bytes());
    key[16..24].copy_from_slice(&tag[0].to_le_bytes());
    key[24..].copy_from_slice(&tag[1].to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream as u64);
    rng
}

/// Standard symmetric stable law, sampled by the Chambers–Mallows–Stuck
/// transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricStable {
    alpha: f64,
    inv_alpha: f64,
    tail_exponent: f64,
}

impl SymmetricStable {
    pub fn new(alpha: f64) -> Result<Self> {
        check_domain("alpha", alpha, alpha > 0.0 && alpha < 2.0, "0 < alpha < 2")?;
        Ok(Self {
            alpha,
            inv_alpha: 1.0 / alpha,
            tail_exponent: (1.0 - alpha) / alpha,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Distribution<f64> for SymmetricStable {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v: f64 = Open01.sample(rng);
        let u = PI * (v - 0.5);
        if self.alpha == 1.0 {
            return u.tan();
        }
        let w: f64 = Exp1.sample(rng);
        let t = self.alpha * u;
        t.sin() / u.cos().powf(self.inv_alpha) * ((u - t).cos() / w).powf(self.tail_exponent)
    }
}

pub fn sample_standard_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    Ok(SymmetricStable::new(alpha)?.sample(rng))
}

/// Scale `theta` such that an increment of `theta S^a` over `1/n` contains a
/// jump larger than `jump_threshold` in magnitude with probability `p`.
///
/// Jumps above the threshold arrive as a Poisson process with mean
/// `2 (threshold / theta)^-a / (a C_a n)` per step; setting that to
/// `-ln(1 - p)` and solving gives the closed form below.
pub fn calibrate_theta(index: f64, p: f64, n: usize, jump_threshold: f64) -> Result<f64> {
    check_domain("p", p, p > 0.0 && p < 1.0, "0 < p < 1")?;
    check_domain("n", n as f64, n >= 1, "n >= 1")?;
    check_domain(
        "jump_threshold",
        jump_threshold,
        jump_threshold > 0.0 && jump_threshold.is_finite(),
        "threshold > 0",
    )?;
    let c = c_beta(index)?;
    let lambda = -(-p).ln_1p();
    Ok(jump_threshold * (n as f64 * index * c * lambda / 2.0).powf(1.0 / index))
}

/// `max(2t - 1, 0)`
#[inline]
pub fn activity_scaling(t: f64) -> f64 {
    (2.0 * t - 1.0).max(0.0)
}

/// `int_0^t g(s)^a ds`
fn scaling_power_integral(t: f64, a: f64) -> f64 {
    activity_scaling(t).powf(a + 1.0) / (2.0 * (a + 1.0))
}

/// Scale of `int g dS^a` over each grid step `[(j-1)/n, j/n]`, `j = 1..n-1`:
/// a deterministic integrand against a stable process is again stable, with
/// scale `(int g^a ds)^{1/a}`.
fn integral_step_scales(n: usize, a: f64) -> Vec<f64> {
    let dt = 1.0 / n as f64;
    let mut prev = 0.0;
    (1..n)
        .map(|j| {
            let g = scaling_power_integral(j as f64 * dt, a);
            let step = (g - prev).max(0.0).powf(1.0 / a);
            prev = g;
            step
        })
        .collect()
}

/// How the deterministic activity profile `g(t)` enters the jump part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    /// `int_0^t g(s) dR_s`: the jump sizes are modulated by `g`.
    #[default]
    Integral,
    /// `g(t) R_t`: the level is multiplied, which also adds the drift `R_t dg`.
    Level,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationModel {
    pub beta: f64,
    pub p: f64,
    pub n: usize,
    pub noise_sd: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub seed: u64,
    pub scaling: Scaling,
}

impl SimulationModel {
    /// Calibrates `theta1` at probability `p` and `theta2` at `0.05 p` with
    /// index `beta - 0.2`.
    pub fn new(beta: f64, p: f64, n: usize, noise_sd: f64, seed: u64) -> Result<Self> {
        check_domain(
            "beta",
            beta,
            beta > NUISANCE_OFFSET && beta < 2.0,
            "0.2 < beta < 2",
        )?;
        let theta1 = calibrate_theta(beta, p, n, JUMP_THRESHOLD)?;
        let theta2 = calibrate_theta(
            beta - NUISANCE_OFFSET,
            NUISANCE_SHARE * p,
            n,
            JUMP_THRESHOLD,
        )?;
        let model = Self {
            beta,
            p,
            n,
            noise_sd,
            theta1,
            theta2,
            seed,
            scaling: Scaling::default(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        check_domain(
            "beta",
            self.beta,
            self.beta > NUISANCE_OFFSET && self.beta < 2.0,
            "0.2 < beta < 2",
        )?;
        check_domain("p", self.p, self.p > 0.0 && self.p < 1.0, "0 < p < 1")?;
        check_domain("n", self.n as f64, self.n >= 2, "n >= 2")?;
        check_domain(
            "noise_sd",
            self.noise_sd,
            self.noise_sd >= 0.0 && self.noise_sd.is_finite(),
            "noise_sd >= 0",
        )?;
        check_domain(
            "theta1",
            self.theta1,
            self.theta1 > 0.0 && self.theta1.is_finite(),
            "theta1 > 0",
        )?;
        check_domain(
            "theta2",
            self.theta2,
            self.theta2 >= 0.0 && self.theta2.is_finite(),
            "theta2 >= 0",
        )
    }

    fn tag(&self) -> [u64; 2] {
        [self.beta.to_bits(), self.p.to_bits()]
    }

    pub fn rng(&self, replication: u64, stream: Stream) -> ChaCha8Rng {
        derive_rng(self.seed, replication, self.tag(), stream)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    pub clean: LogPricePath,
    pub observed: LogPricePath,
}

/// Simulate replication `replication` of `model` on the grid `j / n`.
///
/// Every component is exact at the grid points. Under [`Scaling::Integral`]
/// each step of `int g dS^a` is drawn directly from its stable law; under
/// [`Scaling::Level`] the stable processes are cumulated from
/// `(1/n)^{1/a}`-scaled standard draws and `g(t)` multiplies their level.
pub fn simulate_path(model: &SimulationModel, replication: u64) -> Result<SimulatedPath> {
    model.validate()?;
    let n = model.n;
    let dt = 1.0 / n as f64;
    let nuisance_index = model.beta - NUISANCE_OFFSET;
    let activity = SymmetricStable::new(model.beta)?;
    let nuisance = SymmetricStable::new(nuisance_index)?;
    let brownian_sd = dt.sqrt();

    let mut rng_b = model.rng(replication, Stream::Brownian);
    let mut rng_a = model.rng(replication, Stream::Activity);
    let mut rng_c = model.rng(replication, Stream::Nuisance);

    let mut clean = Vec::with_capacity(n);
    clean.push(0.0);
    let (mut b, mut r) = (0.0f64, 0.0f64);
    match model.scaling {
        Scaling::Integral => {
            let a_steps = integral_step_scales(n, model.beta);
            let c_steps = integral_step_scales(n, nuisance_index);
            for (sa, sc) in a_steps.iter().zip(&c_steps) {
                let z: f64 = StandardNormal.sample(&mut rng_b);
                b += brownian_sd * z;
                // draws are consumed on every step so streams stay aligned across scalings
                let da = activity.sample(&mut rng_a);
                let dc = nuisance.sample(&mut rng_c);
                r += model.theta1 * sa * da + model.theta2 * sc * dc;
                clean.push(b + r);
            }
        }
        Scaling::Level => {
            let activity_scale = model.theta1 * dt.powf(1.0 / model.beta);
            let nuisance_scale = model.theta2 * dt.powf(1.0 / nuisance_index);
            for j in 1..n {
                let z: f64 = StandardNormal.sample(&mut rng_b);
                b += brownian_sd * z;
                r += activity_scale * activity.sample(&mut rng_a)
                    + nuisance_scale * nuisance.sample(&mut rng_c);
                clean.push(b + activity_scaling(j as f64 * dt) * r);
            }
        }
    }

    let observed = if model.noise_sd == 0.0 {
        clean.clone()
    } else {
        let mut rng_e = model.rng(replication, Stream::Noise);
        clean
            .iter()
            .map(|x| {
                let e: f64 = StandardNormal.sample(&mut rng_e);
                x + model.noise_sd * e
            })
            .collect()
    };
    Ok(SimulatedPath {
        clean: LogPricePath::new(clean)?,
        observed: LogPricePath::new(observed)?,
    })
}
