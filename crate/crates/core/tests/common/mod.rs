#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use jumpact::kernel::c_beta;

/// Kolmogorov–Smirnov distance between a sample and a continuous cdf.
pub fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

pub fn ks_to_standard_normal(xs: Vec<f64>) -> f64 {
    let nd = Normal::standard();
    ks_distance(xs, |x| nd.cdf(x))
}

/// One increment of `theta S^a` over a step of length `dt`, built from its
/// jumps: a Poisson number of Pareto jumps above `cutoff` plus a Gaussian
/// stand-in for the remaining small jumps. The Lévy density of `S^a` is
/// `|x|^-(1+a) / C_a`.
pub struct JumpExplicitIncrement {
    pub a: f64,
    pub theta: f64,
    pub dt: f64,
    pub cutoff: f64,
}

pub struct IncrementDraw {
    pub value: f64,
    pub largest_jump: f64,
}

impl JumpExplicitIncrement {
    fn density_scale(&self) -> f64 {
        self.theta.powf(self.a) * self.dt / c_beta(self.a).unwrap()
    }

    /// Mean number of jumps with magnitude above `x >= cutoff`.
    pub fn rate_above(&self, x: f64) -> f64 {
        2.0 * self.density_scale() * x.powf(-self.a) / self.a
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> IncrementDraw {
        let k = self.density_scale();
        let small_var = 2.0 * k * self.cutoff.powf(2.0 - self.a) / (2.0 - self.a);
        let z: f64 = StandardNormal.sample(rng);
        let mut value = small_var.sqrt() * z;
        let count = Poisson::new(self.rate_above(self.cutoff))
            .unwrap()
            .sample(rng) as u64;
        let mut largest_jump: f64 = 0.0;
        for _ in 0..count {
            let u: f64 = rng.random();
            let size = self.cutoff * (1.0 - u).powf(-1.0 / self.a);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            value += sign * size;
            largest_jump = largest_jump.max(size);
        }
        IncrementDraw {
            value,
            largest_jump,
        }
    }
}
