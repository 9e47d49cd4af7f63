//! Sampled checks of the decay estimates.
//!
//! Each check evaluates `LHS / RHS` (with the lemma's constant dropped) on a nested
//! sample sequence, so the sampled supremum over `2·budget` points is at least the
//! one over the first `budget`. The estimate is taken to hold when the supremum is
//! finite and grows by at most 10% under the doubling.
//!
//! - B1: `g_{k,j}(x) = (1+|x-z_j|)^{-a}(1+|x-z_k|)^{-b}` against
//!   `|z_k-z_j|^{-δ}((1+|x-z_j|)^{-(a+b-δ)} + (1+|x-z_k|)^{-(a+b-δ)})`.
//! - B3: `∫|x-y|^{-(N-2)}(1+|y|)^{-(2+δ)} dy` against `(1+|x|)^{-δ}`.
//! - B4: `|x|^{-α} * λ^{N-α/2}(1+λ|x-z|)^{-((3N+2)/2-α+η)}` against
//!   `λ^{α/2}(1+λ|x-z|)^{-min(α, (N+2)/2)}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::quadrature::qmc::{primes, radical_inverse, shifted_point, unit_direction};
use crate::quadrature::{IntegralResult, QuadratureSpec};
use crate::riesz::riesz_radial;
use crate::scalar::dist;

/// Allowed growth of the sampled supremum when the budget doubles.
pub const STABILITY: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "lemma", deny_unknown_fields)]
pub enum LemmaCase {
    B1 { n: usize, a: f64, b: f64, delta: f64, separation: f64 },
    B3 { n: usize, delta: f64 },
    B4 { n: usize, alpha: f64, eta: f64, lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub case: LemmaCase,
    pub budget: usize,
    pub holds: bool,
    /// Supremum over `2·budget` samples.
    pub worst_ratio: f64,
    /// Supremum over the first `budget` samples.
    pub ratio_at_budget: f64,
    pub witness: Vec<f64>,
}

impl LemmaCase {
    pub fn name(&self) -> &'static str {
        match self {
            LemmaCase::B1 { .. } => "B1",
            LemmaCase::B3 { .. } => "B3",
            LemmaCase::B4 { .. } => "B4",
        }
    }

    /// Parameters as `key=value` pairs separated by `;`.
    pub fn describe(&self) -> String {
        match self {
            LemmaCase::B1 { n, a, b, delta, separation } => {
                format!("N={n};a={a};b={b};delta={delta};separation={separation}")
            }
            LemmaCase::B3 { n, delta } => format!("N={n};delta={delta}"),
            LemmaCase::B4 { n, alpha, eta, lambda } => format!("N={n};alpha={alpha};eta={eta};lambda={lambda}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::ExponentOutOfRange(s));
        match *self {
            LemmaCase::B1 { n, a, b, delta, separation } => {
                if n < 1 || !(separation > 0.0) {
                    return Err(Error::InvalidInput("B1 needs N >= 1 and a positive separation".into()));
                }
                if !(a >= 1.0 && b >= 1.0) {
                    return bad(format!("B1 needs a, b >= 1 (a = {a}, b = {b})"));
                }
                if !(delta > 0.0 && delta <= a.min(b)) {
                    return bad(format!("B1 needs 0 < delta <= min(a, b) (delta = {delta})"));
                }
            }
            LemmaCase::B3 { n, delta } => {
                if n < 5 {
                    return bad(format!("B3 needs N >= 5 (N = {n})"));
                }
                if !(delta > 0.0 && delta < n as f64 - 2.0) {
                    return bad(format!("B3 needs 0 < delta < N-2 (delta = {delta})"));
                }
            }
            LemmaCase::B4 { n, alpha, eta, lambda } => {
                if n <= 5 {
                    return bad(format!("B4 needs N > 5 (N = {n})"));
                }
                if !(eta > 0.0) {
                    return bad(format!("B4 needs eta > 0 (eta = {eta})"));
                }
                if !(alpha > 0.0 && alpha < n as f64) || !(lambda > 0.0) {
                    return Err(Error::InvalidInput("B4 needs 0 < alpha < N and lambda > 0".into()));
                }
            }
        }
        Ok(())
    }
}

/// Default parameter grid for `(N, α)`; B4 is included only for `N > 5`.
pub fn default_lemma_grid(p: &ProblemParams<f64>) -> Vec<LemmaCase> {
    let n = p.n();
    let nf = n as f64;
    let mut out = vec![
        LemmaCase::B1 { n, a: 1.0, b: 1.0, delta: 1.0, separation: 4.0 },
        LemmaCase::B1 { n, a: 2.0, b: 3.0, delta: 1.5, separation: 8.0 },
        LemmaCase::B1 { n, a: (nf + 2.0) / 2.0, b: (nf - 2.0) / 2.0, delta: 1.0, separation: 16.0 },
        LemmaCase::B3 { n, delta: 0.5 },
        LemmaCase::B3 { n, delta: (nf - 2.0) / 2.0 },
        LemmaCase::B3 { n, delta: nf - 2.5 },
    ];
    if n > 5 {
        for eta in [0.5, 1.0] {
            out.push(LemmaCase::B4 { n, alpha: p.alpha(), eta, lambda: 20.0 });
        }
    }
    out
}

/// Default sample budget: points for B1, radii for B3/B4.
pub fn default_budget(case: &LemmaCase) -> usize {
    match case {
        LemmaCase::B1 { .. } => 4096,
        _ => 32,
    }
}

/// `g_{k,j}(x)/RHS(x)` with `z_j = 0`, `z_k = separation·e1`.
pub fn b1_ratio(a: f64, b: f64, delta: f64, separation: f64, x: &[f64]) -> f64 {
    let mut zk = vec![0.0; x.len()];
    zk[0] = separation;
    let dj = 1.0 + dist(x, &vec![0.0; x.len()]);
    let dk = 1.0 + dist(x, &zk);
    let e = a + b - delta;
    let lhs = dj.powf(-a) * dk.powf(-b);
    let rhs = separation.powf(-delta) * (dj.powf(-e) + dk.powf(-e));
    lhs / rhs
}

/// `∫|x-y|^{-(N-2)}(1+|y|)^{-(2+δ)} dy` at `|x| = r`.
pub fn b3_lhs(n: usize, delta: f64, r: f64, spec: &QuadratureSpec) -> Result<IntegralResult> {
    let mut x = vec![0.0; n];
    x[0] = r;
    riesz_radial(|s| (1.0 + s).powf(-2.0 - delta), n, n as f64 - 2.0, &vec![0.0; n], &x, 1.0, spec)
}

/// Exponent `(3N+2)/2 - α + η` of the B4 density.
pub fn b4_exponent(n: usize, alpha: f64, eta: f64) -> f64 {
    (3.0 * n as f64 + 2.0) / 2.0 - alpha + eta
}

/// `|x|^{-α} * λ^{N-α/2}(1+λ|x-z|)^{-p}` at `x` for the center `z`.
pub fn b4_lhs(n: usize, alpha: f64, eta: f64, lambda: f64, z: &[f64], x: &[f64], spec: &QuadratureSpec) -> Result<IntegralResult> {
    let p = b4_exponent(n, alpha, eta);
    let amp = lambda.powf(n as f64 - alpha / 2.0);
    riesz_radial(|s| amp * (1.0 + lambda * s).powf(-p), n, alpha, z, x, 1.0 / lambda, spec)
}

/// Log-uniform radii in `[10^-2, 10^4]` from the base-2 van der Corput sequence, after `0`.
fn radii(count: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend((1..count as u64).map(|i| 10f64.powf(-2.0 + 6.0 * radical_inverse(i, 2))));
    out
}

fn b1_samples(n: usize, separation: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut zk = vec![0.0; n];
    zk[0] = separation;
    let mut mid = vec![0.0; n];
    mid[0] = 0.5 * separation;
    let mut out = vec![vec![0.0; n], zk.clone(), mid.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..n + 1).map(|_| rng.gen::<f64>()).collect();
    let bases = primes(n + 1);
    let mut u = vec![0.0; n + 1];
    let mut dir = vec![0.0; n];
    let ball = 2.0 * separation + 10.0;
    for i in 0..count.saturating_sub(3) {
        shifted_point(i as u64 + 1, &bases, &shift, &mut u);
        unit_direction(&u[1..], &mut dir);
        let (c, rad) = match i % 3 {
            0 => (&mid, ball * u[0].powf(1.0 / n as f64)),
            1 => (&out[0], 10f64.powf(-2.0 + 3.5 * u[0])),
            _ => (&zk, 10f64.powf(-2.0 + 3.5 * u[0])),
        };
        let x: Vec<f64> = c.iter().zip(&dir).map(|(a, d)| a + rad * d).collect();
        out.push(x);
    }
    out.truncate(count);
    out
}

/// Ratios at `2·budget` nested samples with their points.
fn ratios(case: &LemmaCase, count: usize, spec: &QuadratureSpec) -> Result<Vec<(f64, Vec<f64>)>> {
    match *case {
        LemmaCase::B1 { n, a, b, delta, separation } => Ok(b1_samples(n, separation, count, spec.seed)
            .into_iter()
            .map(|x| (b1_ratio(a, b, delta, separation, &x), x))
            .collect()),
        LemmaCase::B3 { n, delta } => radii(count)
            .into_iter()
            .map(|r| {
                let lhs = b3_lhs(n, delta, r, spec)?.value;
                let mut x = vec![0.0; n];
                x[0] = r;
                Ok((lhs * (1.0 + r).powf(delta), x))
            })
            .collect(),
        LemmaCase::B4 { n, alpha, eta, lambda } => {
            let mut z = vec![0.0; n];
            z[0] = 1.0;
            let q = alpha.min((n as f64 + 2.0) / 2.0);
            radii(count)
                .into_iter()
                .map(|s| {
                    let mut x = z.clone();
                    x[0] += s / lambda;
                    let lhs = b4_lhs(n, alpha, eta, lambda, &z, &x, spec)?.value;
                    Ok((lhs / (lambda.powf(alpha / 2.0) * (1.0 + s).powf(-q)), x))
                })
                .collect()
        }
    }
}

fn sup(r: &[(f64, Vec<f64>)]) -> (f64, usize) {
    r.iter()
        .enumerate()
        .fold((f64::NEG_INFINITY, 0), |(bv, bi), (i, (v, _))| if *v > bv || v.is_nan() { (*v, i) } else { (bv, bi) })
}

/// Runs one check at `budget` and `2·budget` samples.
pub fn lemma_check(case: &LemmaCase, budget: usize, spec: &QuadratureSpec) -> Result<LemmaReport> {
    case.validate()?;
    if budget == 0 {
        return Err(Error::EmptySampleSet);
    }
    let all = ratios(case, 2 * budget, spec)?;
    let (half, _) = sup(&all[..budget.min(all.len())]);
    let (worst, at) = sup(&all);
    let holds = worst.is_finite() && half.is_finite() && worst <= STABILITY * half;
    Ok(LemmaReport {
        case: case.clone(),
        budget,
        holds,
        worst_ratio: worst,
        ratio_at_budget: half,
        witness: all[at].1.clone(),
    })
}
