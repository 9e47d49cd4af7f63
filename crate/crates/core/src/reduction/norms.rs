//! Sampled weighted sup-norms `‖·‖_∗` and `‖·‖_∗∗`.
//!
//! Both are suprema over a fixed sample set, hence lower bounds of the true norms.
//! The default design ([`WeightedNormSpec::stratified`]) puts the centers themselves,
//! three quarters of the points at log-uniform distances `10^{-3}/λ … 10^2/λ` around
//! the centers (cycling through them), and the rest on far-field shells with radius
//! log-uniform in `[r̄, 10³ r̄]`. Directions come from a shifted Halton sequence
//! seeded by `seed`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Placement;
use crate::params::ProblemParams;
use crate::quadrature::qmc::{primes, shifted_point, unit_direction};
use crate::scalar::dist;

pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormSpec {
    pub tau: f64,
    pub sample_points: Vec<Vec<f64>>,
    pub placement: Placement<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    /// Sample point attaining the supremum.
    pub witness: Vec<f64>,
    pub samples: usize,
}

impl WeightedNormSpec {
    pub fn new(p: &ProblemParams<f64>, placement: Placement<f64>, lambda: f64, sample_points: Vec<Vec<f64>>) -> Self {
        Self {
            tau: p.tau(),
            sample_points,
            placement,
            lambda,
        }
    }

    /// Stratified design described in the module docs.
    pub fn stratified(p: &ProblemParams<f64>, placement: Placement<f64>, lambda: f64, count: usize, seed: u64) -> Self {
        let n = placement.dim();
        let m = placement.m();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..n + 1).map(|_| rng.gen::<f64>()).collect();
        let bases = primes(n + 1);
        let mut pts: Vec<Vec<f64>> = placement.centers.iter().take(count).cloned().collect();
        let rest = count.saturating_sub(pts.len());
        let near = 3 * rest / 4;
        let mut u = vec![0.0; n + 1];
        let mut dir = vec![0.0; n];
        for i in 0..rest {
            shifted_point(i as u64 + 1, &bases, &shift, &mut u);
            unit_direction(&u[1..], &mut dir);
            let (center, radius) = if i < near {
                (placement.centers[i % m].clone(), 10f64.powf(-3.0 + 5.0 * u[0]) / lambda)
            } else {
                (vec![0.0; n], placement.r_bar * 10f64.powf(3.0 * u[0]))
            };
            pts.push(center.iter().zip(&dir).map(|(c, d)| c + radius * d).collect());
        }
        Self::new(p, placement, lambda, pts)
    }

    fn weight(&self, x: &[f64], exponent: f64) -> f64 {
        self.placement
            .centers
            .iter()
            .map(|z| (1.0 + self.lambda * dist(x, z)).powf(-exponent))
            .sum()
    }

    fn sup<F>(&self, u: F, exponent: f64, scale_power: f64) -> Result<NormValue>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        if self.sample_points.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        let scale = self.lambda.powf(-scale_power);
        let ratios: Vec<f64> = self
            .sample_points
            .par_iter()
            .map(|x| scale * u(x).abs() / self.weight(x, exponent))
            .collect();
        let (best, value) = ratios
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        Ok(NormValue {
            value,
            witness: self.sample_points[best].clone(),
            samples: ratios.len(),
        })
    }

    fn half_n_minus_2(&self) -> f64 {
        (self.placement.dim() as f64 - 2.0) / 2.0
    }
}

/// `sup λ^{-(N-2)/2}|u| / Σ_j (1+λ|x-z_j|)^{-((N-2)/2+τ)}` over the samples.
pub fn weighted_norm_star<F>(u: F, spec: &WeightedNormSpec) -> Result<NormValue>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let b = spec.half_n_minus_2();
    spec.sup(u, b + spec.tau, b)
}

/// `sup λ^{-(N+2)/2}|f| / Σ_j (1+λ|x-z_j|)^{-((N+2)/2+τ)}` over the samples.
pub fn weighted_norm_starstar<F>(f: F, spec: &WeightedNormSpec) -> Result<NormValue>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let b = spec.half_n_minus_2() + 2.0;
    spec.sup(f, b + spec.tau, b)
}

/// Supremum of the `∗`-ratio of a single bubble, `c·max_s (1+s)^{b+τ}/(1+s²)^b`
/// with `b = (N-2)/2`, attained at `s = λ|x - z| = (√(2b² - τ²) - b)/(b - τ)`.
pub fn single_bubble_star_sup(p: &ProblemParams<f64>, c: f64) -> (f64, f64) {
    let b = p.half_n_minus_2();
    let t = p.tau();
    let s = ((2.0 * b * b - t * t).sqrt() - b) / (b - t);
    (c * (1.0 + s).powf(b + t) / (1.0 + s * s).powf(b), s)
}
