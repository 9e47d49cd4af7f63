use proptest::prelude::*;
use statrs::function::beta::beta;

use hartree::energy::{coefficient_a1_moment, fit_expansion};
use hartree::geometry::{place_bubbles, CutoffSpec};
use hartree::potential::{default_quadratic_model, FnPotential, PotentialModel};
use hartree::reduction::lemmas::{b3_lhs, b4_exponent, b4_lhs, default_budget};
use hartree::reduction::norms::single_bubble_star_sup;
use hartree::reduction::solve::{a3_from_a2, newton_critical_point};
use hartree::reduction::*;
use hartree::special::sphere_area;
use hartree::{make_problem, Ansatz, Error, QuadratureSpec, SharpConstants};

fn bubble(n: usize, alpha: f64, lambda: f64) -> Ansatz {
    let p = make_problem(n, alpha).unwrap();
    let c = SharpConstants::compute(&p).unwrap();
    let cut = CutoffSpec::new(1.0, vec![0.0; n - 2], 0.1).unwrap();
    Ansatz::new(p, c.bubble_coeff, 1, 1.0, &vec![0.0; n - 2], lambda, cut, false).unwrap()
}

#[test]
fn balance_root_examples() {
    for n in 5..=9 {
        let p = make_problem(n, n as f64 - 0.5).unwrap();
        assert_eq!(balance_root(1.0, 1.0, &p).unwrap(), 1.0);
    }
    let p = make_problem(6, 4.0).unwrap();
    let t = balance_root(3.0, 48.0, &p).unwrap();
    assert!((t - 4.0).abs() < 1e-15);
    assert!(balance_residual(3.0, 48.0, &p, t) <= 1e-12);
    assert!(matches!(balance_root(0.0, 1.0, &p), Err(Error::NonPositiveCoefficient { .. })));
    assert!(matches!(balance_root(1.0, -2.0, &p), Err(Error::NonPositiveCoefficient { .. })));
}

proptest! {
    #[test]
    fn balance_root_clears_the_equation(a1 in 0.01f64..100.0, a3 in 0.01f64..100.0, n in 5usize..10) {
        let p = make_problem(n, n as f64 - 0.5).unwrap();
        let t = balance_root(a1, a3, &p).unwrap();
        let k = n as f64 - 4.0;
        prop_assert!((a3 - a1 * t.powf(k)).abs() <= 1e-12 * a3.max(a1 * t.powf(k)));
    }

    #[test]
    fn weighted_norms_are_homogeneous(k in -8.0f64..8.0, lambda in 2.0f64..50.0) {
        let a = bubble(6, 4.0, lambda);
        let spec = WeightedNormSpec::stratified(&a.params, a.placement.clone(), lambda, 500, 3);
        let u = |x: &[f64]| a.eval(x);
        let base = weighted_norm_star(u, &spec).unwrap().value;
        let scaled = weighted_norm_star(|x: &[f64]| k * a.eval(x), &spec).unwrap().value;
        prop_assert!((scaled - k.abs() * base).abs() <= 1e-14 * scaled.abs().max(1e-300));
    }
}

fn pipeline_coefficients(n: usize, alpha: f64) -> (f64, f64) {
    let p = make_problem(n, alpha).unwrap();
    let c = SharpConstants::compute(&p).unwrap();
    let k = default_quadratic_model(n);
    let a1 = coefficient_a1_moment(&p, c.bubble_coeff, &k, &QuadratureSpec::radial()).unwrap().value;
    let cut = CutoffSpec::new(1.0, vec![0.0; n - 2], 0.1).unwrap();
    let pair = Ansatz::new(p, c.bubble_coeff, 2, 1.0, &vec![0.0; n - 2], 40.0, cut, false).unwrap();
    let one = PotentialModel::constant_one(1.0, vec![0.0; n - 2]);
    let fit = fit_expansion(&pair, &one, &[20.0, 30.0, 40.0, 60.0, 80.0], &QuadratureSpec::radial()).unwrap();
    (a1, fit.a2.unwrap())
}

#[test]
fn reduced_solve_for_the_quadratic_model() {
    for (n, alpha) in [(6, 4.0), (5, 3.5), (7, 5.0)] {
        let p = make_problem(n, alpha).unwrap();
        let (a1, a2) = pipeline_coefficients(n, alpha);
        assert!(a1 > 0.0 && a2 > 0.0, "A1 = {a1}, A2 = {a2}");
        let k = default_quadratic_model(n);
        let opts = SolveOptions::default();
        for m in [8, 16, 32, 64] {
            let s = solve_reduced(&k, m, BalanceCoefficients::FromA2 { a1, a2 }, &p, &opts).unwrap();
            assert!(s.in_window && s.proximity_ok, "{s:?}");
            assert_eq!(s.r_bar_m, 1.0);
            assert!(s.x_bar_pp_m.iter().all(|v| *v == 0.0));
            assert!(s.balance_residual <= 1e-12 * a1 / s.t_m.powi(3), "{s:?}");
            assert_ne!(s.degree_sign, 0);
            let a3 = a3_from_a2(&p, m, 1.0, a2).unwrap();
            let t = s.lambda_m / (m as f64).powf(p.window_exponent());
            assert!((t - (a3 / a1).powf(1.0 / (n as f64 - 4.0))).abs() <= 1e-12 * t);
        }
    }
}

#[test]
fn equal_coefficients_give_the_scaling_law() {
    let p = make_problem(6, 4.0).unwrap();
    let k = default_quadratic_model(6);
    let coeffs = BalanceCoefficients::Fixed { a1: 2.5, a3: 2.5 };
    let opts = SolveOptions::default();
    for m in [2, 3, 8, 10, 16, 64] {
        let s = solve_reduced(&k, m, coeffs, &p, &opts).unwrap();
        assert_eq!(s.lambda_m, (m * m) as f64);
        assert_eq!(s.t_m, 1.0);
    }
    for (n, alpha) in [(5, 3.5), (7, 5.0), (9, 8.0)] {
        let p = make_problem(n, alpha).unwrap();
        let k = default_quadratic_model(n);
        let coeffs = BalanceCoefficients::Fixed { a1: 1.3, a3: 2.1 };
        for m in [3, 8, 25] {
            let s1 = solve_reduced(&k, m, coeffs, &p, &opts).unwrap();
            let s2 = solve_reduced(&k, 2 * m, coeffs, &p, &opts).unwrap();
            let ratio = s2.lambda_m / s1.lambda_m;
            let expect = 2f64.powf(p.window_exponent());
            assert!((ratio - expect).abs() <= 1e-12 * expect, "{ratio} vs {expect}");
        }
    }
}

#[test]
fn reduced_solve_errors() {
    let p = make_problem(6, 4.0).unwrap();
    let k = default_quadratic_model(6);
    let coeffs = BalanceCoefficients::Fixed { a1: 1.0, a3: 1.0 };
    let opts = SolveOptions::default();
    let err = solve_reduced(&k, 1, coeffs, &p, &opts).unwrap_err();
    assert!(matches!(err, Error::MTooSmall(1)));
    assert!(err.to_string().contains("m >= 2"));
    let far = BalanceCoefficients::Fixed { a1: 1.0, a3: 1e6 };
    assert!(matches!(solve_reduced(&k, 8, far, &p, &opts), Err(Error::RootOutsideWindow { .. })));
    let lax = SolveOptions { enforce_window: false, ..SolveOptions::default() };
    let s = solve_reduced(&k, 8, far, &p, &lax).unwrap();
    assert!(!s.in_window);
    assert!((s.t_m - 1e3).abs() < 1e-9);
    let flat = PotentialModel::constant_one(1.0, vec![0.0; 4]);
    assert!(matches!(solve_reduced(&flat, 8, coeffs, &p, &opts), Err(Error::DegenerateHessian(_))));
}

#[test]
fn newton_finds_an_off_axis_critical_point() {
    // K = 1 - (r - 1.2)² - 2(x3 - 0.1)² - Σ_{i>3} x_i² + cubic terms, critical at (1.2, 0.1, 0, 0)
    let f = |r: f64, x: &[f64]| {
        let (dr, d3) = (r - 1.2, x[0] - 0.1);
        1.0 - dr * dr - 2.0 * d3 * d3 - x[1..].iter().map(|v| v * v).sum::<f64>() + 0.3 * dr.powi(3) - 0.2 * d3.powi(3)
    };
    let k = FnPotential::new(f, 1.2, vec![0.1, 0.0, 0.0]);
    assert_eq!(k.check_assumptions(1e-8).unwrap(), 1);
    let (y, g, it) = newton_critical_point(&k, &[1.35, -0.05, 0.1, -0.08], 1e-10, 40).unwrap();
    assert!(g <= 1e-10 && it > 0);
    for (a, b) in y.iter().zip([1.2, 0.1, 0.0, 0.0]) {
        assert!((a - b).abs() < 1e-8, "{y:?}");
    }
}

#[test]
fn weighted_norm_of_a_single_bubble() {
    for (n, alpha, lambda) in [(6, 4.0, 20.0), (5, 3.5, 7.0), (7, 5.0, 40.0)] {
        let a = bubble(n, alpha, lambda);
        let spec = WeightedNormSpec::stratified(&a.params, a.placement.clone(), lambda, 10_000, 1);
        assert_eq!(spec.tau, (n as f64 - 4.0) / (n as f64 - 2.0));
        let v = weighted_norm_star(|x: &[f64]| a.eval(x), &spec).unwrap();
        // 1-D maximization of c(1+s)^{b+τ}/(1+s²)^b on a fine grid
        let b = (n as f64 - 2.0) / 2.0;
        let ratio = |s: f64| a.coeff * (1.0 + s).powf(b + spec.tau) / (1.0 + s * s).powf(b);
        let grid = (0..=200_000).map(|i| ratio(i as f64 * 1e-5)).fold(0.0, f64::max);
        let (sup, s_star) = single_bubble_star_sup(&a.params, a.coeff);
        assert!((sup - grid).abs() < 1e-9 * grid);
        assert!(s_star > 0.1, "supremum is off-center");
        assert!(v.value >= ratio(0.0) && v.value >= grid * (1.0 - 1e-3) && v.value <= grid * (1.0 + 1e-12), "{} vs {grid}", v.value);
        let s_w = lambda * v.witness.iter().zip(&a.placement.centers[0]).map(|(x, z)| (x - z).powi(2)).sum::<f64>().sqrt();
        assert!((s_w - s_star).abs() < 0.05, "{s_w} vs {s_star}");
    }
}

#[test]
fn weighted_norm_edge_cases() {
    let a = bubble(6, 4.0, 10.0);
    let spec = WeightedNormSpec::stratified(&a.params, a.placement.clone(), 10.0, 2000, 5);
    assert_eq!(weighted_norm_star(|_: &[f64]| 0.0, &spec).unwrap().value, 0.0);
    assert_eq!(weighted_norm_starstar(|_: &[f64]| 0.0, &spec).unwrap().value, 0.0);
    let empty = WeightedNormSpec::new(&a.params, a.placement.clone(), 10.0, vec![]);
    assert!(matches!(weighted_norm_star(|x: &[f64]| a.eval(x), &empty), Err(Error::EmptySampleSet)));
    // -ΔU = N(N-2)λ²U/q², so ‖ΔU‖_∗∗ is attained at the bubble center for N = 6
    let spec = WeightedNormSpec::new(&a.params, a.placement.clone(), 10.0, vec![a.placement.centers[0].clone()]);
    let lap = weighted_norm_starstar(|x: &[f64]| a.jet(x).2, &spec).unwrap().value;
    assert!((lap - 24.0 * a.coeff).abs() < 1e-10 * lap);
    let twice = WeightedNormSpec::stratified(&a.params, a.placement.clone(), 10.0, 2000, 5);
    assert_eq!(twice, WeightedNormSpec::stratified(&a.params, a.placement.clone(), 10.0, 2000, 5));
    let multi = place_bubbles(8, 1.0, &[0.0; 4]).unwrap();
    let spec = WeightedNormSpec::stratified(&a.params, multi, 10.0, 2000, 5);
    assert!(spec.sample_points.iter().all(|x| x.len() == 6));
    assert_eq!(spec.sample_points.len(), 2000);
}

fn tube_spec() -> QuadratureSpec {
    QuadratureSpec::tube().with_nodes(1).with_tol(1e-3)
}

#[test]
fn pohozaev_residuals_vanish_on_the_exact_bubble() {
    let a = bubble(6, 4.0, 20.0);
    let p = a.params;
    let k = PotentialModel::constant_one(1.0, vec![0.0; 4]);
    let v = ClosedFormNonlocal::for_ansatz(&a).unwrap();
    let u = AnsatzField(&a);
    for f in [2.5, 3.5, 4.5] {
        let tube = Tube::around(&k, 0.1, f * 0.1).unwrap();
        let r = pohozaev_dilation_residual(&u, &k, &v, &tube, &p, &tube_spec()).unwrap();
        assert!(r.value.abs() <= 3.0 * r.est_error, "rho = {f}δ: {r:?}");
        assert!(r.linear_part.abs() > 1e3 * r.value.abs());
    }
    let tube = Tube::around(&k, 0.1, 0.35).unwrap();
    for i in [3, 6] {
        let r = pohozaev_translation_residual(&u, &k, &v, &tube, i, &p, &tube_spec()).unwrap();
        assert!(r.value.abs() <= 3.0 * r.est_error.max(1e-300), "i = {i}: {r:?}");
    }
}

#[test]
fn pohozaev_argument_errors() {
    let a = bubble(6, 4.0, 20.0);
    let p = a.params;
    let k = PotentialModel::constant_one(1.0, vec![0.0; 4]);
    for rho in [0.2, 0.5, 0.05] {
        assert!(matches!(Tube::around(&k, 0.1, rho), Err(Error::RhoOutOfRange { .. })));
    }
    let v = ClosedFormNonlocal::for_ansatz(&a).unwrap();
    let tube = Tube::around(&k, 0.1, 0.35).unwrap();
    for i in [1, 2, 7] {
        let r = pohozaev_translation_residual(&AnsatzField(&a), &k, &v, &tube, i, &p, &tube_spec());
        assert!(matches!(r, Err(Error::InvalidInput(_))), "i = {i}");
    }
}

#[test]
fn pohozaev_residual_of_a_perturbed_bubble() {
    let lambda = 20.0;
    let a = bubble(6, 4.0, lambda);
    let p = a.params;
    let k = PotentialModel::constant_one(1.0, vec![0.0; 4]);
    let tube = Tube::around(&k, 0.1, 0.35).unwrap();
    let z = a.placement.centers[0].clone();
    let amp = 0.01 * a.coeff * lambda.powf(p.half_n_minus_2());
    let w = 1.0 / lambda;
    let e = p.two_star_alpha();
    let g = |r: f64| {
        let u = hartree::bubbles::bubble_radial(&p, a.coeff, lambda, r);
        (u + amp * (-(r / w).powi(2)).exp()).powf(e) - u.powf(e)
    };
    let base = ClosedFormNonlocal::for_ansatz(&a).unwrap();
    let v = RadialTableNonlocal::build(base, g, &p, &z, w, tube.max_distance_from(&z), 48, &QuadratureSpec::two_center()).unwrap();
    let field = || BumpedField { base: AnsatzField(&a), amplitude: amp, center: z.clone(), width: w };
    let spec = tube_spec();
    let r = pohozaev_dilation_residual(&field(), &k, &v, &tube, &p, &spec).unwrap();
    assert!(r.value.abs() > 100.0 * r.est_error, "{r:?}");

    let fd = FdField::new(field());
    let r_fd = pohozaev_dilation_residual(&fd, &k, &v, &tube, &p, &spec).unwrap();
    assert!((r.value - r_fd.value).abs() <= r.est_error + r_fd.est_error, "{r:?} vs {r_fd:?}");

    let two = ScaledField { factor: 2.0, inner: field() };
    let v2 = ScaledNonlocal { factor: 2f64.powf(e), inner: &v };
    let r2 = pohozaev_dilation_residual(&two, &k, &v2, &tube, &p, &spec).unwrap();
    let predicted = 4.0 * r.linear_part - 2f64.powf(2.0 * e) * r.nonlocal_part;
    let err = r2.est_error + 4.0 * r.linear_error + 2f64.powf(2.0 * e) * r.nonlocal_error;
    assert!((r2.value - predicted).abs() <= err, "{} vs {predicted}", r2.value);

    // the bump is even in every x_i, i ≥ 3, about the tube axis
    let t = pohozaev_translation_residual(&field(), &k, &v, &tube, 4, &p, &spec).unwrap();
    assert!(t.value.abs() <= 3.0 * t.est_error.max(1e-300), "{t:?}");
}

/// `|S^{N-1}|[r^{-(N-2)}∫_0^r s^{N-1}f + ∫_r^∞ s f]` for `f = (1+s)^{-2-δ}`.
fn newton_shell(n: usize, delta: f64, r: f64) -> f64 {
    let f = |s: f64| (1.0 + s).powf(-2.0 - delta);
    let outer = (1.0 + r).powf(-delta) / delta - (1.0 + r).powf(-1.0 - delta) / (1.0 + delta);
    let inner = if r == 0.0 {
        0.0
    } else {
        let k = 20_000;
        let h = r / k as f64;
        let g = |s: f64| s.powi(n as i32 - 1) * f(s);
        let mut acc = g(0.0) + g(r);
        for i in 1..k {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
        }
        acc * h / 3.0 * r.powf(2.0 - n as f64)
    };
    sphere_area::<f64>(n) * (inner + outer)
}

#[test]
fn b3_potential_matches_the_shell_theorem() {
    let spec = QuadratureSpec::radial();
    for (n, delta) in [(6, 2.0), (6, 0.5), (5, 1.5), (8, 5.5)] {
        let at0 = b3_lhs(n, delta, 0.0, &spec).unwrap().value;
        let exact0 = sphere_area::<f64>(n) / (delta * (1.0 + delta));
        assert!((at0 - exact0).abs() < 1e-8 * exact0, "N = {n}, δ = {delta}: {at0} vs {exact0}");
        for r in [0.01, 0.7, 3.0, 40.0, 1e3] {
            let got = b3_lhs(n, delta, r, &spec).unwrap().value;
            let want = newton_shell(n, delta, r);
            assert!((got - want).abs() < 1e-7 * want, "N = {n}, δ = {delta}, r = {r}: {got} vs {want}");
        }
    }
}

#[test]
fn b4_peak_value() {
    let spec = QuadratureSpec::radial();
    for (n, alpha, eta, lambda) in [(6, 4.0, 0.5, 20.0), (7, 5.0, 1.0, 5.0), (6, 4.5, 2.0, 1.0)] {
        let z = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0][..n].to_vec();
        let got = b4_lhs(n, alpha, eta, lambda, &z, &z, &spec).unwrap().value;
        let pw = b4_exponent(n, alpha, eta);
        let nf = n as f64;
        let want = lambda.powf(alpha / 2.0) * sphere_area::<f64>(n) * beta(nf - alpha, pw - nf + alpha);
        assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
    }
}

#[test]
fn b1_midpoint_ratio() {
    // with a = b = δ the ratio at the midpoint is (1+d/2)^{-2a} d^a / (2(1+d/2)^{-a})
    for (a, d) in [(1.0, 4.0), (2.0, 10.0), (1.5, 7.0)] {
        let x = [0.5 * d, 0.0, 0.0, 0.0, 0.0, 0.0];
        let got = hartree::reduction::lemmas::b1_ratio(a, a, a, d, &x);
        let want = (1.0 + 0.5 * d).powf(-a) * d.powf(a) / 2.0;
        assert!((got - want).abs() < 1e-14 * want);
    }
}

#[test]
fn default_lemma_grid_holds() {
    for (n, alpha) in [(6, 4.0), (5, 3.5)] {
        let p = make_problem(n, alpha).unwrap();
        let grid = default_lemma_grid(&p);
        assert_eq!(grid.iter().any(|c| c.name() == "B4"), n > 5);
        for case in &grid {
            let rep = lemma_check(case, default_budget(case), &QuadratureSpec::radial()).unwrap();
            assert!(rep.holds, "{rep:?}");
            assert!(rep.worst_ratio.is_finite() && rep.worst_ratio >= rep.ratio_at_budget);
        }
    }
}

#[test]
fn lemma_exponent_gates() {
    let spec = QuadratureSpec::radial();
    let bad = [
        LemmaCase::B4 { n: 5, alpha: 3.5, eta: 0.5, lambda: 10.0 },
        LemmaCase::B4 { n: 6, alpha: 4.0, eta: 0.0, lambda: 10.0 },
        LemmaCase::B3 { n: 6, delta: 4.0 },
        LemmaCase::B3 { n: 6, delta: 0.0 },
        LemmaCase::B1 { n: 6, a: 0.5, b: 1.0, delta: 0.5, separation: 2.0 },
        LemmaCase::B1 { n: 6, a: 2.0, b: 1.0, delta: 1.5, separation: 2.0 },
    ];
    for case in &bad {
        assert!(matches!(lemma_check(case, 8, &spec), Err(Error::ExponentOutOfRange(_))), "{case:?}");
    }
    let ok = LemmaCase::B3 { n: 6, delta: 1.0 };
    assert!(matches!(lemma_check(&ok, 0, &spec), Err(Error::EmptySampleSet)));
    let a = lemma_check(&ok, 8, &spec).unwrap();
    assert_eq!(a, lemma_check(&ok, 8, &spec).unwrap());
}
