//! Globally adaptive Gauss–Kronrod (10/21) integration on finite intervals.
//!
//! Integrands return fixed-size arrays so that several related integrals share one
//! set of nodes. Panel sums are taken in left-to-right order after adaptation
//! finishes, so results do not depend on rayon scheduling.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::scalar::Real;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

/// Tolerances and budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct GkOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_panels: usize,
    /// Evaluate the nodes of each subdivision step on the rayon pool.
    pub parallel: bool,
    /// Measure `rel_tol` against `∫|f|` instead of `|∫f|`, so that components with
    /// cancelling or vanishing integrals still converge.
    pub l1_relative: bool,
}

impl<T: Real> GkOptions<T> {
    pub fn new(abs_tol: T, rel_tol: T, max_panels: usize) -> Self {
        Self {
            abs_tol,
            rel_tol,
            max_panels,
            parallel: false,
            l1_relative: true,
        }
    }

    pub fn l1_relative(mut self, on: bool) -> Self {
        self.l1_relative = on;
        self
    }

    pub fn parallel(mut self, on: bool) -> Self {
        self.parallel = on;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GkResult<T, const D: usize> {
    pub value: [T; D],
    pub error: [T; D],
    pub evals: usize,
    pub panels: usize,
    pub converged: bool,
}

#[derive(Clone, Copy)]
struct Panel<T, const D: usize> {
    a: T,
    b: T,
    value: [T; D],
    error: [T; D],
    absval: [T; D],
    key: T,
}

impl<T: Real, const D: usize> PartialEq for Panel<T, D> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real, const D: usize> Eq for Panel<T, D> {}
impl<T: Real, const D: usize> PartialOrd for Panel<T, D> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real, const D: usize> Ord for Panel<T, D> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .partial_cmp(&other.key)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.a.partial_cmp(&self.a).unwrap_or(Ordering::Equal))
    }
}

fn abscissae<T: Real>(a: T, b: T) -> [T; 21] {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let mut xs = [mid; 21];
    for k in 0..10 {
        let dx = half * T::lit(XGK[k]);
        xs[2 * k] = mid - dx;
        xs[2 * k + 1] = mid + dx;
    }
    xs
}

type Estimate<T, const D: usize> = ([T; D], [T; D], [T; D]);

fn rule<T: Real, const D: usize>(a: T, b: T, fx: &[([T; D], [T; D])]) -> Estimate<T, D> {
    let half = (b - a) * T::lit(0.5);
    let mut value = [T::zero(); D];
    let mut error = [T::zero(); D];
    let mut absval = [T::zero(); D];
    let eps = T::epsilon();
    for d in 0..D {
        let fc = fx[20].0[d];
        let mut carried = T::lit(WGK[10]) * fx[20].1[d].abs();
        let mut kron = fc * T::lit(WGK[10]);
        let mut gauss = T::zero();
        let mut resabs = kron.abs();
        for k in 0..10 {
            let (f1, f2) = (fx[2 * k].0[d], fx[2 * k + 1].0[d]);
            kron = kron + T::lit(WGK[k]) * (f1 + f2);
            carried = carried + T::lit(WGK[k]) * (fx[2 * k].1[d].abs() + fx[2 * k + 1].1[d].abs());
            resabs = resabs + T::lit(WGK[k]) * (f1.abs() + f2.abs());
            if k % 2 == 1 {
                gauss = gauss + T::lit(WG[k / 2]) * (f1 + f2);
            }
        }
        let mean = kron * T::lit(0.5);
        let mut resasc = T::lit(WGK[10]) * (fc - mean).abs();
        for k in 0..10 {
            resasc = resasc
                + T::lit(WGK[k]) * ((fx[2 * k].0[d] - mean).abs() + (fx[2 * k + 1].0[d] - mean).abs());
        }
        let (kron, resabs, resasc) = (kron * half, resabs * half.abs(), resasc * half.abs());
        let mut err = (kron - gauss * half).abs();
        if resasc > T::zero() && err > T::zero() {
            let scale = (T::lit(200.0) * err / resasc).powf(T::lit(1.5));
            err = resasc * if scale < T::one() { scale } else { T::one() };
        }
        let floor = T::lit(50.0) * eps * resabs;
        if floor > err {
            err = floor;
        }
        value[d] = kron;
        error[d] = err + carried * half.abs();
        absval[d] = resabs;
    }
    (value, error, absval)
}

fn eval_panels<T, F, const D: usize>(f: &F, bounds: &[(T, T)], parallel: bool) -> Vec<Estimate<T, D>>
where
    T: Real,
    F: Fn(T) -> ([T; D], [T; D]) + Sync,
{
    let xs: Vec<T> = bounds.iter().flat_map(|&(a, b)| abscissae(a, b)).collect();
    let fx: Vec<([T; D], [T; D])> = if parallel {
        xs.par_iter().map(|&x| f(x)).collect()
    } else {
        xs.iter().map(|&x| f(x)).collect()
    };
    bounds
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| rule(a, b, &fx[21 * i..21 * (i + 1)]))
        .collect()
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the panels given by
/// consecutive breakpoints. Convergence requires every component to meet
/// `max(abs_tol, rel_tol·‖f‖)`, with `‖f‖` either `∫|f|` or `|∫f|`.
pub fn integrate<T, F, const D: usize>(f: F, points: &[T], opts: GkOptions<T>) -> GkResult<T, D>
where
    T: Real,
    F: Fn(T) -> [T; D] + Sync,
{
    integrate_carried(|x| (f(x), [T::zero(); D]), points, opts)
}

/// As [`integrate`] for integrands that carry their own pointwise error (typically an
/// inner integral); the integral of the carried error's magnitude is added to the
/// reported error.
pub fn integrate_carried<T, F, const D: usize>(f: F, points: &[T], opts: GkOptions<T>) -> GkResult<T, D>
where
    T: Real,
    F: Fn(T) -> ([T; D], [T; D]) + Sync,
{
    assert!(points.len() >= 2, "need at least one interval");
    let bounds: Vec<(T, T)> = points.windows(2).map(|w| (w[0], w[1])).collect();
    let first = eval_panels(&f, &bounds, opts.parallel);
    let mut evals = 21 * bounds.len();

    let mut total_v = [T::zero(); D];
    let mut total_e = [T::zero(); D];
    let mut total_a = [T::zero(); D];
    for (v, e, ab) in &first {
        for d in 0..D {
            total_v[d] = total_v[d] + v[d];
            total_e[d] = total_e[d] + e[d];
            total_a[d] = total_a[d] + ab[d];
        }
    }
    let magnitude = |v: T, ab: T| if opts.l1_relative && ab > v.abs() { ab } else { v.abs() };
    // priority weights are frozen from the first pass
    let mut scale = [T::one(); D];
    for d in 0..D {
        let t = opts.rel_tol * magnitude(total_v[d], total_a[d]);
        scale[d] = if t > opts.abs_tol { t } else { opts.abs_tol };
        if !(scale[d] > T::zero()) {
            scale[d] = T::min_positive_value();
        }
    }
    let key = |e: &[T; D]| {
        let mut k = T::zero();
        for d in 0..D {
            let r = e[d] / scale[d];
            if r > k {
                k = r;
            }
        }
        k
    };

    let mut heap: BinaryHeap<Panel<T, D>> = bounds
        .iter()
        .zip(first)
        .map(|(&(a, b), (value, error, absval))| Panel {
            a,
            b,
            value,
            error,
            absval,
            key: key(&error),
        })
        .collect();

    let done = |v: &[T; D], e: &[T; D], ab: &[T; D]| {
        (0..D).all(|d| {
            let t = opts.rel_tol * magnitude(v[d], ab[d]);
            e[d] <= if t > opts.abs_tol { t } else { opts.abs_tol }
        })
    };

    let mut converged = done(&total_v, &total_e, &total_a);
    while !converged && heap.len() < opts.max_panels {
        let worst = heap.pop().expect("heap is never empty");
        let mid = (worst.a + worst.b) * T::lit(0.5);
        if !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            break;
        }
        let halves = [(worst.a, mid), (mid, worst.b)];
        let res = eval_panels(&f, &halves, opts.parallel);
        evals += 42;
        for d in 0..D {
            total_v[d] = total_v[d] - worst.value[d];
            total_e[d] = total_e[d] - worst.error[d];
            total_a[d] = total_a[d] - worst.absval[d];
        }
        for (&(a, b), (value, error, absval)) in halves.iter().zip(res) {
            for d in 0..D {
                total_v[d] = total_v[d] + value[d];
                total_e[d] = total_e[d] + error[d];
                total_a[d] = total_a[d] + absval[d];
            }
            heap.push(Panel {
                a,
                b,
                value,
                error,
                absval,
                key: key(&error),
            });
        }
        converged = done(&total_v, &total_e, &total_a);
    }

    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.partial_cmp(&q.a).unwrap_or(Ordering::Equal));
    let mut value = [T::zero(); D];
    let mut error = [T::zero(); D];
    let mut absval = [T::zero(); D];
    for p in &panels {
        for d in 0..D {
            value[d] = value[d] + p.value[d];
            error[d] = error[d] + p.error[d];
            absval[d] = absval[d] + p.absval[d];
        }
    }
    let converged = done(&value, &error, &absval);
    GkResult {
        value,
        error,
        evals,
        panels: panels.len(),
        converged,
    }
}

/// Scalar convenience wrapper over [`integrate`].
pub fn integrate_scalar<T, F>(f: F, a: T, b: T, opts: GkOptions<T>) -> GkResult<T, 1>
where
    T: Real,
    F: Fn(T) -> T + Sync,
{
    integrate(|x| [f(x)], &[a, b], opts)
}
