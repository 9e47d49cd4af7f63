//! Randomized quasi-Monte Carlo: Halton points with Cranley–Patterson shifts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::erf::erf_inv;

use super::{IntegralResult, QuadratureSpec, Scheme};
use crate::error::{Error, Result};
use crate::special::ball_volume;

pub const SHIFTS: usize = 8;
const CHUNK: usize = 2048;

/// First `k` primes.
pub fn primes(k: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(k);
    let mut c = 2u64;
    while out.len() < k {
        if out.iter().take_while(|&&p| p * p <= c).all(|&p| !c.is_multiple_of(p)) {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// `count` random shift vectors of length `dim`, reproducible from `seed`.
pub fn shifts(seed: u64, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect()
}

/// Shifted Halton point `i` (1-based) in `[0,1)^dim`.
pub fn shifted_point(i: u64, bases: &[u64], shift: &[f64], out: &mut [f64]) {
    for (k, o) in out.iter_mut().enumerate() {
        let v = radical_inverse(i, bases[k]) + shift[k];
        *o = v - v.floor();
    }
}

fn normal_quantile(u: f64) -> f64 {
    let u = u.clamp(1e-300, 1.0 - 1e-16);
    std::f64::consts::SQRT_2 * erf_inv(2.0 * u - 1.0)
}

/// Maps `u ∈ [0,1)^d` to a point on `S^{d-1}` by normalizing Gaussian quantiles.
pub fn unit_direction(u: &[f64], out: &mut [f64]) {
    let mut s = 0.0;
    for (o, &x) in out.iter_mut().zip(u) {
        *o = normal_quantile(x);
        s += *o * *o;
    }
    let s = s.sqrt();
    if s == 0.0 {
        out.iter_mut().for_each(|o| *o = 0.0);
        out[0] = 1.0;
    } else {
        out.iter_mut().for_each(|o| *o /= s);
    }
}

/// Fixed point sets on the unit sphere `S^{d-1}`, one per shift.
pub fn sphere_designs(d: usize, count: usize, seed: u64) -> Vec<Vec<Vec<f64>>> {
    let bases = primes(d);
    shifts(seed, SHIFTS, d)
        .iter()
        .map(|sh| {
            let mut u = vec![0.0; d];
            (1..=count as u64)
                .map(|i| {
                    shifted_point(i, &bases, sh, &mut u);
                    let mut x = vec![0.0; d];
                    unit_direction(&u, &mut x);
                    x
                })
                .collect()
        })
        .collect()
}

/// Mean and standard error over the shift replicates.
pub fn replicate_stats(means: &[f64]) -> (f64, f64) {
    let k = means.len() as f64;
    let mean = means.iter().sum::<f64>() / k;
    if means.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// `∫_{B(center, radius)} F(x) dx` by uniform QMC in the ball.
///
/// `spec.nodes` is the total point count, split evenly over the shift replicates.
/// The reported error is the standard error of the replicate means; `converged`
/// records whether it meets the spec tolerance but does not cause an error.
pub fn qmc_integral<F>(f: F, center: &[f64], radius: f64, spec: &QuadratureSpec) -> Result<IntegralResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    spec.validate()?;
    let n = center.len();
    if n == 0 || !(radius > 0.0) {
        return Err(Error::InvalidInput("qmc_integral needs a non-empty center and radius > 0".into()));
    }
    let per = (spec.nodes / SHIFTS).max(1);
    let bases = primes(n + 1);
    let vol = ball_volume(n, radius);
    let shift_set = shifts(spec.seed, SHIFTS, n + 1);
    let mut means = Vec::with_capacity(SHIFTS);
    for sh in &shift_set {
        let chunks: Vec<f64> = (0..per.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut u = vec![0.0; n + 1];
                let mut dir = vec![0.0; n];
                let mut x = vec![0.0; n];
                let lo = c * CHUNK;
                let hi = ((c + 1) * CHUNK).min(per);
                let mut acc = 0.0;
                for i in lo..hi {
                    shifted_point(i as u64 + 1, &bases, sh, &mut u);
                    unit_direction(&u[1..], &mut dir);
                    let rad = radius * u[0].powf(1.0 / n as f64);
                    for k in 0..n {
                        x[k] = center[k] + rad * dir[k];
                    }
                    acc += f(&x);
                }
                acc
            })
            .collect();
        means.push(vol * chunks.iter().sum::<f64>() / per as f64);
    }
    let (value, est_error) = replicate_stats(&means);
    if !value.is_finite() {
        return Err(Error::QuadratureFailure(format!("qmc integral is not finite: {value}")));
    }
    Ok(IntegralResult {
        value,
        est_error,
        nodes_used: per * SHIFTS,
        scheme: Scheme::QmcNd,
        converged: est_error <= spec.abs_tol.max(spec.rel_tol * value.abs()),
    })
}
