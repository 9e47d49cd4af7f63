//! Property suites. Each check is a CSV row `(check_id, expected, actual, tol, pass)`
//! with an absolute tolerance: `pass ⇔ |actual - expected| ≤ tol`.

use hartree::bubbles::bubble_radial;
use hartree::energy::{dj_dlambda, energy_eval, hls_quotient, DerivativeMethod};

use hartree::reduction::lemmas::STABILITY;
use hartree::reduction::pohozaev::DEFAULT_RHO_FACTOR;
use hartree::reduction::*;
use hartree::riesz::{riesz_bubble_closed, riesz_numeric_with, RadialLayout};
use hartree::special::{gamma_fn, riesz_identity_constant};
use hartree::{Ansatz, Bubble, CutoffSpec, PotentialModel, ProblemParams};

use crate::commands::{bumped_nonlocal, lemma_reports, sharp, tube_bubble};
use crate::config::RunConfig;
use crate::output::{num, Output};
use crate::{CliError, Suite};

struct Check {
    id: String,
    expected: f64,
    actual: f64,
    tol: f64,
}

impl Check {
    fn new(id: impl Into<String>, expected: f64, actual: f64, tol: f64) -> Self {
        Self { id: id.into(), expected, actual, tol }
    }

    fn rel(id: impl Into<String>, expected: f64, actual: f64, rel: f64) -> Self {
        Self::new(id, expected, actual, rel * expected.abs())
    }

    fn pass(&self) -> bool {
        (self.actual - self.expected).abs() <= self.tol
    }
}

pub fn run(cfg: &RunConfig, suite: Suite, out: &mut Output) -> Result<(), CliError> {
    let p = cfg.params()?;
    let (name, checks) = match suite {
        Suite::Riesz => ("verify_riesz", riesz(cfg, &p)?),
        Suite::Hls => ("verify_hls", hls(cfg, &p)?),
        Suite::Invariance => ("verify_invariance", invariance(cfg, &p)?),
        Suite::Lemmas => ("verify_lemmas", lemmas(cfg)?),
        Suite::Pohozaev => ("verify_pohozaev", pohozaev(cfg, &p)?),
    };
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| vec![c.id.clone(), num(c.expected), num(c.actual), num(c.tol), c.pass().to_string()])
        .collect();
    out.csv(name, &["check_id", "expected", "actual", "tol", "pass"], &rows)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass()).map(|c| c.id.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failure(format!("{} check(s) failed: {}", failed.len(), failed.join(", "))))
    }
}

fn e1(n: usize, t: f64) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[0] = t;
    x
}

/// Identity `|x|^{-2s} * (1+|y|²)^{-(N-s)} = I(s)(1+|x|²)^{-s}` at `s = 2`, and the
/// closed-form potential of `U^{2*}` against quasi-Monte Carlo quadrature.
fn riesz(cfg: &RunConfig, p: &ProblemParams) -> Result<Vec<Check>, CliError> {
    let n = p.n();
    let nf = n as f64;
    let spec = cfg.quadrature.specs()?.qmc;
    let s = 2.0;
    let i_s = riesz_identity_constant(p, s)?;
    let mut out = Vec::new();
    for t in [0.0, 1.0, 2.0] {
        let x = e1(n, t);
        let f = |y: &[f64]| (1.0 + y.iter().map(|v| v * v).sum::<f64>()).powf(-(nf - s));
        let r = riesz_numeric_with(f, 2.0 * s, &x, &RadialLayout::towards(&x, &vec![0.0; n], 1.0), &spec)?;
        out.push(Check::rel(format!("identity_s2_x{t}"), i_s * (1.0 + t * t).powf(-s), r.value, 1e-3));
    }
    let k = sharp(p)?;
    let b = Bubble::at_origin(n, 1.0);
    let e = p.two_star_alpha();
    for t in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let x = e1(n, t);
        let f = |y: &[f64]| bubble_radial(p, k.bubble_coeff, 1.0, y.iter().map(|v| v * v).sum::<f64>().sqrt()).powf(e);
        let r = riesz_numeric_with(f, p.alpha(), &x, &RadialLayout::towards(&x, &vec![0.0; n], 1.0), &spec)?;
        out.push(Check::rel(format!("bubble_potential_r{t}"), riesz_bubble_closed(p, &k, &b, &x), r.value, 1e-3));
    }
    Ok(out)
}

/// HLS quotient at the bubble against `S_{H,L}`, with `S` from the Rayleigh quotient.
fn hls(cfg: &RunConfig, p: &ProblemParams) -> Result<Vec<Check>, CliError> {
    let k = sharp(p)?;
    let specs = cfg.quadrature.specs()?;
    let nf = p.n_real();
    let a = p.alpha();
    let g = |x: f64| gamma_fn(x);
    let mut out = Vec::new();
    for lambda in [1.0, 3.0] {
        let q = hls_quotient(p, k.bubble_coeff, lambda, &specs.radial)?;
        out.push(Check::rel(format!("hls_quotient_lambda{lambda}"), k.shl, q.value, 1e-3));
    }
    let s_gamma = std::f64::consts::PI * nf * (nf - 2.0) * (g(nf / 2.0)? / g(nf)?).powf(2.0 / nf);
    out.push(Check::rel("sobolev_rayleigh_vs_gamma", s_gamma, k.sobolev_s, 1e-9));
    let c_alt = (nf * (nf - 2.0) / k.i_half_alpha).powf((nf - 2.0) / (2.0 * (nf - a + 2.0)));
    out.push(Check::rel("bubble_coeff_two_routes", c_alt, k.bubble_coeff, 1e-9));
    Ok(out)
}

/// Scale invariance of `J` with `K ≡ 1`, and `∫|∇U|² = D(U^{2*})` for the solution.
fn invariance(cfg: &RunConfig, p: &ProblemParams) -> Result<Vec<Check>, CliError> {
    let specs = cfg.quadrature.specs()?;
    let k = cfg.potential()?;
    let one = PotentialModel::constant_one(k.r0, k.x0_pp.clone());
    let c = sharp(p)?.bubble_coeff * cfg.verify.coefficient_factor;
    let cut = CutoffSpec::new(k.r0, k.x0_pp.clone(), cfg.ansatz.delta)?;
    let lambdas = [0.5, 1.0, 2.0];
    let bubble = |l: f64| Ansatz::new(*p, c, 1, k.r0, &k.x0_pp, l, cut.clone(), false);
    let reports = lambdas
        .iter()
        .map(|&l| energy_eval(&bubble(l)?, &one, &specs.radial))
        .collect::<hartree::Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for i in 0..3 {
        for j in i + 1..3 {
            out.push(Check::rel(
                format!("energy_lambda{}_vs_lambda{}", lambdas[i], lambdas[j]),
                reports[i].total,
                reports[j].total,
                1e-3,
            ));
        }
    }
    for &l in &lambdas {
        let d = dj_dlambda(&bubble(l)?, &one, &specs.radial, DerivativeMethod::Analytic)?;
        out.push(Check::new(format!("dj_dlambda_lambda{l}"), 0.0, d.value, 3.0 * d.est_error));
    }
    let e = p.two_star_alpha();
    for (r, l) in reports.iter().zip(lambdas) {
        let grad = 2.0 * r.gradient_term;
        let nonlocal = 2.0 * e * r.nonlocal_term;
        out.push(Check::new(format!("equation_identity_lambda{l}"), grad, nonlocal, 1e-6 * grad.abs() + 3.0 * r.est_error));
    }
    Ok(out)
}

fn lemmas(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    Ok(lemma_reports(cfg)?
        .iter()
        .map(|r| {
            // worst ≥ ratio_at_budget by nesting, so this is worst ≤ 1.1·ratio_at_budget
            Check::new(
                format!("{}[{}]", r.case.name(), r.case.describe()),
                r.ratio_at_budget,
                r.worst_ratio,
                (STABILITY - 1.0) * r.ratio_at_budget,
            )
        })
        .collect())
}

/// Exact-bubble residuals, the bumped field against its finite-difference oracle, and
/// the scaling of the residual under `u → 2u`.
fn pohozaev(cfg: &RunConfig, p: &ProblemParams) -> Result<Vec<Check>, CliError> {
    let s = &cfg.pohozaev;
    let spec = cfg.quadrature.specs()?.tube;
    let (a, k) = tube_bubble(cfg, p)?;
    let v = ClosedFormNonlocal::for_ansatz(&a)?;
    let u = AnsatzField(&a);
    let mut out = Vec::new();
    for f in &s.rho_factors {
        let tube = Tube::around(&k, s.delta, f * s.delta)?;
        let r = pohozaev_dilation_residual(&u, &k, &v, &tube, p, &spec)?;
        out.push(Check::new(format!("bubble_dilation_rho{f}delta"), 0.0, r.value, 3.0 * r.est_error));
        for &i in &s.translation {
            let r = pohozaev_translation_residual(&u, &k, &v, &tube, i, p, &spec)?;
            out.push(Check::new(format!("bubble_translation{i}_rho{f}delta"), 0.0, r.value, 3.0 * r.est_error));
        }
    }
    let tube = Tube::around(&k, s.delta, DEFAULT_RHO_FACTOR * s.delta)?;
    let rel = if s.perturbation > 0.0 { s.perturbation } else { 0.01 };
    let amp = rel * a.coeff * a.lambda.powf(p.half_n_minus_2());
    let w = s.bump_width / a.lambda;
    let z = a.placement.centers[0].clone();
    let vb = bumped_nonlocal(&a, amp, w, tube.max_distance_from(&z), s.table_degree, &cfg.quadrature.specs()?.two_center)?;
    let field = BumpedField { base: AnsatzField(&a), amplitude: amp, center: z, width: w };
    let r = pohozaev_dilation_residual(&field, &k, &vb, &tube, p, &spec)?;
    let fd = pohozaev_dilation_residual(&FdField::new(&field), &k, &vb, &tube, p, &spec)?;
    out.push(Check::new("bumped_dilation_vs_fd", fd.value, r.value, r.est_error + fd.est_error));
    let e = p.two_star_alpha();
    let two = ScaledField { factor: 2.0, inner: &field };
    let v2 = ScaledNonlocal { factor: 2f64.powf(e), inner: &vb };
    let r2 = pohozaev_dilation_residual(&two, &k, &v2, &tube, p, &spec)?;
    let factor = 2f64.powf(2.0 * e);
    out.push(Check::new(
        "bumped_dilation_scaling",
        4.0 * r.linear_part - factor * r.nonlocal_part,
        r2.value,
        r2.est_error + 4.0 * r.linear_error + factor * r.nonlocal_error,
    ));
    Ok(out)
}
