//! Polygonal bubble placement, interaction sums, sectors and the tube cutoff.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{smoothstep5, Real};

/// Centers `z_j = (r̄ cos(2(j-1)π/m), r̄ sin(2(j-1)π/m), x̄'')`, `j = 1..m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement<T> {
    pub centers: Vec<Vec<T>>,
    pub r_bar: T,
    pub x_bar_pp: Vec<T>,
}

pub fn place_bubbles<T: Real>(m: usize, r_bar: T, x_bar_pp: &[T]) -> Result<Placement<T>> {
    if m < 1 {
        return Err(Error::InvalidInput("m must be >= 1".into()));
    }
    let centers = (0..m)
        .map(|j| {
            let ang = T::lit(2.0) * T::PI() * T::from_usize_lossy(j) / T::from_usize_lossy(m);
            let (s, c) = ang.sin_cos();
            let mut z = Vec::with_capacity(2 + x_bar_pp.len());
            z.push(r_bar * c);
            z.push(r_bar * s);
            z.extend_from_slice(x_bar_pp);
            z
        })
        .collect();
    Ok(Placement {
        centers,
        r_bar,
        x_bar_pp: x_bar_pp.to_vec(),
    })
}

impl<T: Real> Placement<T> {
    pub fn m(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.x_bar_pp.len() + 2
    }

    /// Chord length `|z_1 - z_j| = 2r̄ sin((j-1)π/m)` (1-based `j`).
    pub fn chord(&self, j: usize) -> T {
        T::lit(2.0) * self.r_bar * (T::PI() * T::from_usize_lossy(j - 1) / T::from_usize_lossy(self.m())).sin()
    }
}

/// `Σ_{j=2}^m |z_1 - z_j|^{-e} = (2r̄)^{-e} Σ_{j=2}^m sin^{-e}((j-1)π/m)`.
pub fn interaction_sum<T: Real>(m: usize, r_bar: T, exponent: T) -> Result<T> {
    if m < 2 {
        return Err(Error::MTooSmall(m));
    }
    let mf = T::from_usize_lossy(m);
    let mut acc = T::zero();
    for j in 1..m {
        acc = acc + (T::PI() * T::from_usize_lossy(j) / mf).sin().powf(-exponent);
    }
    Ok((T::lit(2.0) * r_bar).powf(-exponent) * acc)
}

/// Index (1-based) of the sector `Ω_j` containing `x`; ties go to the smaller index
/// and points on the `x3..xN` axis map to 1.
pub fn sector_index<T: Real>(x: &[T], placement: &Placement<T>) -> usize {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    if r == T::zero() {
        return 1;
    }
    let m = placement.m();
    let mf = T::from_usize_lossy(m);
    let tol = T::lit(64.0) * T::epsilon();
    let mut best = 1;
    let mut best_dot = -T::infinity();
    for j in 0..m {
        let ang = T::lit(2.0) * T::PI() * T::from_usize_lossy(j) / mf;
        let (s, c) = ang.sin_cos();
        let dot = (x[0] * c + x[1] * s) / r;
        if dot > best_dot + tol {
            best_dot = dot;
            best = j + 1;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffProfile {
    SmoothstepQuintic,
}

/// `ξ = 1` within distance `δ` of `(r0, x0'')` in the `(r, x'')` variables, `0` beyond `2δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec<T> {
    pub r0: T,
    pub x0_pp: Vec<T>,
    pub delta: T,
    pub profile: CutoffProfile,
}

/// Value, gradient and Laplacian of a function on `R^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T> {
    pub value: T,
    pub grad: Vec<T>,
    pub laplacian: T,
}

impl<T: Real> CutoffSpec<T> {
    pub fn new(r0: T, x0_pp: Vec<T>, delta: T) -> Result<Self> {
        if !(r0 > T::zero() && delta > T::zero()) {
            return Err(Error::InvalidInput("cutoff needs r0 > 0 and delta > 0".into()));
        }
        if !(T::lit(2.0) * delta < r0) {
            return Err(Error::InvalidInput("cutoff support 2*delta must stay inside r0".into()));
        }
        Ok(Self {
            r0,
            x0_pp,
            delta,
            profile: CutoffProfile::SmoothstepQuintic,
        })
    }

    /// `|(|x'|, x'') - (r0, x0'')|`.
    pub fn tube_distance(&self, x: &[T]) -> T {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let mut d2 = (r - self.r0) * (r - self.r0);
        for (a, b) in x[2..].iter().zip(&self.x0_pp) {
            d2 = d2 + (*a - *b) * (*a - *b);
        }
        d2.sqrt()
    }

    /// `ξ` and its derivatives in the tube distance.
    pub fn profile_at(&self, d: T) -> (T, T, T) {
        let (s, ds, d2s) = smoothstep5((d - self.delta) / self.delta);
        (
            T::one() - s,
            -ds / self.delta,
            -d2s / (self.delta * self.delta),
        )
    }

    pub fn value(&self, x: &[T]) -> T {
        self.profile_at(self.tube_distance(x)).0
    }

    pub fn eval(&self, x: &[T]) -> Jet<T> {
        let n = x.len();
        let d = self.tube_distance(x);
        let (v, d1, d2) = self.profile_at(d);
        let mut grad = vec![T::zero(); n];
        if d1 == T::zero() && d2 == T::zero() {
            return Jet { value: v, grad, laplacian: T::zero() };
        }
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let dr = (r - self.r0) / d;
        grad[0] = d1 * dr * x[0] / r;
        grad[1] = d1 * dr * x[1] / r;
        for k in 2..n {
            grad[k] = d1 * (x[k] - self.x0_pp[k - 2]) / d;
        }
        let lap_d = T::from_usize_lossy(n - 2) / d + (r - self.r0) / (r * d);
        Jet {
            value: v,
            grad,
            laplacian: d2 + d1 * lap_d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rotate(x: &[f64], ang: f64) -> Vec<f64> {
        let (s, c) = ang.sin_cos();
        let mut y = x.to_vec();
        y[0] = c * x[0] - s * x[1];
        y[1] = s * x[0] + c * x[1];
        y
    }

    fn contains(set: &[Vec<f64>], p: &[f64]) -> bool {
        set.iter()
            .any(|z| z.iter().zip(p).all(|(a, b)| (a - b).abs() < 1e-12))
    }

    #[test]
    fn two_and_four_bubbles() {
        let pl = place_bubbles(2, 1.5f64, &[0.1, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(pl.centers[0], vec![1.5, 0.0, 0.1, 0.0, 0.0, 0.0]);
        assert!((pl.centers[1][0] + 1.5).abs() < 1e-15 && pl.centers[1][1].abs() < 1e-15);
        let pl = place_bubbles(4, 1.0f64, &[0.0; 4]).unwrap();
        assert!((crate::scalar::dist(&pl.centers[0], &pl.centers[2]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn chords_match_distances() {
        let pl = place_bubbles(7, 0.8f64, &[0.3, -0.2, 0.0]).unwrap();
        for j in 1..=7 {
            let d = crate::scalar::dist(&pl.centers[0], &pl.centers[j - 1]);
            assert!((d - pl.chord(j)).abs() < 1e-14);
        }
    }

    #[test]
    fn placement_symmetry() {
        let m = 9;
        let pl = place_bubbles(m, 1.3, &[0.2, 0.1, -0.4]).unwrap();
        for z in &pl.centers {
            assert!(contains(&pl.centers, &rotate(z, 2.0 * PI / m as f64)));
            let mut r = z.clone();
            r[1] = -r[1];
            assert!(contains(&pl.centers, &r));
            assert!(((z[0] * z[0] + z[1] * z[1]).sqrt() - 1.3).abs() < 1e-14);
        }
    }

    #[test]
    fn interaction_sum_small_cases() {
        let b = interaction_sum(2, 0.7, 4.0).unwrap();
        assert!((b - 1.4f64.powi(-4)).abs() < 1e-14);
        // chords 2 sin(π/4), 2, 2 sin(3π/4)
        let b = interaction_sum(4, 1.0, 1.0).unwrap();
        let direct = 1.0 / 2f64.sqrt() + 0.5 + 1.0 / 2f64.sqrt();
        assert!((b - direct).abs() < 1e-14);
        assert_eq!(interaction_sum(1, 1.0, 4.0), Err(Error::MTooSmall(1)));
    }

    #[test]
    fn interaction_sum_matches_brute_force() {
        for m in [2usize, 3, 5, 16, 64] {
            let pl = place_bubbles(m, 1.1f64, &[0.0; 3]).unwrap();
            let brute: f64 = (1..m)
                .map(|j| crate::scalar::dist(&pl.centers[0], &pl.centers[j]).powf(-3.0))
                .sum();
            let b = interaction_sum(m, 1.1, 3.0).unwrap();
            assert!((b - brute).abs() < 1e-12 * brute);
        }
    }

    #[test]
    fn interaction_sum_growth() {
        let e = 4.0f64;
        let ms = [8.0f64, 16.0, 32.0, 64.0];
        let ys: Vec<f64> = ms.iter().map(|&m| interaction_sum(m as usize, 1.0, e).unwrap().ln()).collect();
        let xs: Vec<f64> = ms.iter().map(|m| m.ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((slope - e).abs() < 0.05 * e, "slope {slope}");
    }

    #[test]
    fn sectors() {
        let pl = place_bubbles(6, 1.0, &[0.0; 4]).unwrap();
        let x = vec![0.9, 0.1, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(sector_index(&x, &pl), 1);
        assert_eq!(sector_index(&rotate(&x, PI / 3.0), &pl), 2);
        let edge = vec![(PI / 6.0).cos(), (PI / 6.0).sin(), 0.0, 0.0, 0.0, 0.0];
        assert_eq!(sector_index(&edge, &pl), 1);
        assert_eq!(sector_index(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0], &pl), 1);
    }

    fn spec() -> CutoffSpec<f64> {
        CutoffSpec::new(1.0, vec![0.0; 4], 0.1).unwrap()
    }

    fn at_distance(d: f64) -> Vec<f64> {
        // split the offset between the radial and x'' directions
        let r = 1.0 + 0.6 * d;
        vec![r * 0.6f64.cos(), r * 0.6f64.sin(), 0.8 * d, 0.0, 0.0, 0.0]
    }

    #[test]
    fn cutoff_plateau_and_support() {
        let c = spec();
        assert_eq!(c.value(&at_distance(0.05)), 1.0);
        assert_eq!(c.value(&at_distance(0.3)), 0.0);
        let j = c.eval(&at_distance(0.15));
        assert!(j.value > 0.0 && j.value < 1.0);
        assert!(c.profile_at(0.15).1 < 0.0);
    }

    #[test]
    fn cutoff_derivatives_match_fd() {
        let c = spec();
        let x = at_distance(0.137);
        let j = c.eval(&x);
        let mut lap = 0.0;
        for k in 0..6 {
            let shifted = |h: f64| {
                let mut p = x.clone();
                p[k] += h;
                c.value(&p)
            };
            let h = 1e-6;
            assert!(((shifted(h) - shifted(-h)) / (2.0 * h) - j.grad[k]).abs() < 1e-6);
            let h = 1e-4;
            lap += (shifted(h) - 2.0 * j.value + shifted(-h)) / (h * h);
        }
        assert!((lap - j.laplacian).abs() < 1e-3 * j.laplacian.abs().max(1.0), "{lap} vs {}", j.laplacian);
    }

    #[test]
    fn cutoff_is_c2_across_seams() {
        let c = spec();
        for d in [0.1, 0.2] {
            let (a, b) = (c.eval(&at_distance(d - 1e-9)), c.eval(&at_distance(d + 1e-9)));
            assert!((a.value - b.value).abs() < 1e-6);
            assert!((a.laplacian - b.laplacian).abs() < 1e-3);
        }
    }

    #[test]
    fn rejects_wide_cutoff() {
        assert!(CutoffSpec::new(1.0, vec![], 0.6).is_err());
    }
}
