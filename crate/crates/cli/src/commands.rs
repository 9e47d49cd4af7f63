use serde::Serialize;

use hartree::bubbles::bubble_radial;
use hartree::energy::{coefficient_a1_moment, dj_dlambda, fit_samples, ExpansionFit};
use hartree::geometry::interaction_sum;
use hartree::potential::Potential;
use hartree::PotentialModel;
use hartree::reduction::lemmas::default_budget;
use hartree::reduction::norms::single_bubble_star_sup;
use hartree::reduction::pohozaev::DEFAULT_RHO_FACTOR;
use hartree::reduction::solve::SolveOptions;
use hartree::reduction::*;
use hartree::special::{sobolev_quotient, SharpConstants as Constants};
use hartree::{Ansatz, CutoffSpec, ProblemParams, SharpConstants};

use crate::config::{CoefficientSource, ExpansionPotential, RunConfig};
use crate::output::{num, Output};
use crate::CliError;

/// Relative accuracy assigned to closed-form Gamma-function expressions.
const CLOSED_FORM_REL: f64 = 1e-14;

pub fn sharp(p: &ProblemParams) -> Result<SharpConstants, CliError> {
    Ok(Constants::compute(p)?)
}

/// Ansatz from the `ansatz` section with `m`, `λ` and the cutoff flag replaced.
pub fn ansatz(cfg: &RunConfig, p: &ProblemParams, coeff: f64, m: usize, lambda: f64, cut: bool) -> Result<Ansatz, CliError> {
    let a = cfg.ansatz_config()?;
    let k = cfg.potential()?;
    let cutoff = CutoffSpec::new(k.r0, k.x0_pp.clone(), a.delta)?;
    Ok(Ansatz::new(*p, coeff, m, a.r_bar, &a.x_bar_pp, lambda, cutoff, cut)?)
}

#[derive(Serialize)]
struct ConstantEntry {
    name: &'static str,
    value: f64,
    est_error: f64,
    source: &'static str,
}

#[derive(Serialize)]
struct ConstantsRecord {
    #[serde(rename = "N")]
    n: usize,
    alpha: f64,
    two_star_alpha: f64,
    tau: f64,
    window_exponent: f64,
    constants: Vec<ConstantEntry>,
}

pub fn constants(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let p = cfg.params()?;
    let c = sharp(&p)?;
    let (_, s_err) = sobolev_quotient::<f64>(p.n(), 1.0, 1e-12)?;
    let s_rel = s_err / c.sobolev_s;
    let n = p.n_real();
    let a = p.alpha();
    let entry = |name, value: f64, rel: f64, source| ConstantEntry {
        name,
        value,
        est_error: (rel + CLOSED_FORM_REL) * value.abs(),
        source,
    };
    let rec = ConstantsRecord {
        n: p.n(),
        alpha: a,
        two_star_alpha: p.two_star_alpha(),
        tau: p.tau(),
        window_exponent: p.window_exponent(),
        constants: vec![
            entry("hls_c", c.hls_c, 0.0, "closed form in Gamma functions (sharp HLS constant at the extremal exponent)"),
            entry("sobolev_s", c.sobolev_s, s_rel, "Rayleigh quotient of the Aubin-Talenti profile, adaptive quadrature"),
            entry("s_hl", c.shl, s_rel, "S / C(N, alpha)^{1/2*}"),
            entry(
                "bubble_coeff",
                c.bubble_coeff,
                ((n - a) * (n - 2.0) / (4.0 * (n - a + 2.0))).abs() * s_rel,
                "normalization making c(1+|x|^2)^{-(N-2)/2} a solution, from S and C(N, alpha)",
            ),
            entry("i_half_alpha", c.i_half_alpha, 0.0, "I(s) at s = alpha/2, closed form in Gamma functions"),
        ],
    };
    out.json("constants", &rec)
}

#[derive(Serialize)]
struct SyntheticReport {
    a1: f64,
    a2: f64,
    a1_rel_error: f64,
    /// `None` for `m = 1`, where the pair term is absent.
    a2_rel_error: Option<f64>,
    tol: f64,
}

#[derive(Serialize)]
struct ExpansionRecord {
    #[serde(rename = "N")]
    n: usize,
    alpha: f64,
    m: usize,
    potential: ExpansionPotential,
    a1: f64,
    a2: Option<f64>,
    a3: Option<f64>,
    rel_residual: f64,
    max_rel_residual: f64,
    synthetic: Option<SyntheticReport>,
    pass: bool,
}

pub fn expansion(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let p = cfg.params()?;
    let c = sharp(&p)?;
    let e = &cfg.expansion;
    let specs = cfg.quadrature.specs()?;
    let k = match e.potential {
        ExpansionPotential::Configured => cfg.potential()?,
        ExpansionPotential::ConstantOne => {
            let k = cfg.potential()?;
            PotentialModel::constant_one(k.r0, k.x0_pp)
        }
    };
    let template = ansatz(cfg, &p, c.bubble_coeff, e.m, cfg.ansatz.lambda, cfg.ansatz.use_cutoff)?;
    let r_bar = template.placement.r_bar;
    let nf = p.n_real();
    let b = if e.m >= 2 { interaction_sum(e.m, r_bar, nf - 2.0)? } else { 0.0 };
    let mut samples = Vec::new();
    for &l in &e.lambda_grid {
        samples.push(match e.synthetic {
            Some(s) => (e.m as f64 * (-s.a1 / l.powi(3) + s.a2 * b / l.powf(nf - 1.0)), 0.0, 0.0),
            None => {
                let d = dj_dlambda(&template.with_lambda(l), &k, &specs.two_center, e.method)?;
                (d.value, d.est_error, d.omitted_bound)
            }
        });
    }
    let dj: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let fit = fit_samples(&p, e.m, r_bar, &e.lambda_grid, &dj)?;
    let rows: Vec<Vec<String>> = e
        .lambda_grid
        .iter()
        .zip(&samples)
        .map(|(&l, s)| {
            vec![
                num(l),
                num(s.0),
                num(s.1),
                num(s.2),
                num(fit.predict(&p, e.m, r_bar, l)),
                num(l.powi(3) * s.0),
            ]
        })
        .collect();
    let synthetic = e.synthetic.map(|s| SyntheticReport {
        a1: s.a1,
        a2: s.a2,
        a1_rel_error: (fit.a1 - s.a1).abs() / s.a1.abs().max(f64::MIN_POSITIVE),
        a2_rel_error: fit.a2.map(|a2| (a2 - s.a2).abs() / s.a2.abs().max(f64::MIN_POSITIVE)),
        tol: e.synthetic_tol,
    });
    let pass = match &synthetic {
        Some(s) => s.a1_rel_error <= s.tol && s.a2_rel_error.is_none_or(|r| r <= s.tol),
        None => fit.rel_residual <= e.max_rel_residual,
    };
    out.csv(
        "expansion",
        &["lambda", "dj_dlambda", "est_error", "omitted_bound", "model_prediction", "lambda3_dj_dlambda"],
        &rows,
    )?;
    out.json(
        "expansion_fit",
        &ExpansionRecord {
            n: p.n(),
            alpha: p.alpha(),
            m: e.m,
            potential: e.potential,
            a1: fit.a1,
            a2: fit.a2,
            a3: fit.a3,
            rel_residual: fit.rel_residual,
            max_rel_residual: e.max_rel_residual,
            synthetic,
            pass,
        },
    )?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Failure(format!(
            "expansion fit failed its threshold (relative residual {:e})",
            fit.rel_residual
        )))
    }
}

/// `A1` from a single-bubble fit with `k`, over the given grid.
pub fn fit_single(cfg: &RunConfig, p: &ProblemParams, c: f64, k: &dyn Potential, grid: &[f64]) -> Result<ExpansionFit, CliError> {
    let specs = cfg.quadrature.specs()?;
    let t = ansatz(cfg, p, c, 1, grid[0], false)?;
    Ok(hartree::energy::fit_expansion(&t, k, grid, &specs.two_center)?)
}

/// `A2` from a pair fit with `K ≡ 1`.
pub fn fit_pair(cfg: &RunConfig, p: &ProblemParams, c: f64, grid: &[f64]) -> Result<ExpansionFit, CliError> {
    let specs = cfg.quadrature.specs()?;
    let k = cfg.potential()?;
    let one = PotentialModel::constant_one(k.r0, k.x0_pp);
    let t = ansatz(cfg, p, c, 2, grid[0], false)?;
    Ok(hartree::energy::fit_expansion(&t, &one, grid, &specs.two_center)?)
}

#[derive(Serialize)]
struct SolveRecord {
    #[serde(rename = "N")]
    n: usize,
    alpha: f64,
    coefficient_source: CoefficientSource,
    /// Pair constant, when `A3` was derived from it.
    a2: Option<f64>,
    window: (f64, f64),
    theta: f64,
    #[serde(flatten)]
    solution: ReducedSolution,
}

pub fn solve(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let p = cfg.params()?;
    let s = &cfg.solve;
    if s.m < 2 {
        return Err(hartree::Error::MTooSmall(s.m).into());
    }
    let k = cfg.potential()?;
    let c = sharp(&p)?.bubble_coeff;
    let (coeffs, a2) = match s.coefficients {
        CoefficientSource::Fixed => (
            BalanceCoefficients::Fixed {
                a1: s.a1.unwrap_or_default(),
                a3: s.a3.unwrap_or_default(),
            },
            None,
        ),
        CoefficientSource::Fit | CoefficientSource::Moment => {
            let a1 = if s.coefficients == CoefficientSource::Fit {
                fit_single(cfg, &p, c, &k, &s.fit_lambda_grid)?.a1
            } else {
                coefficient_a1_moment(&p, c, &k, &cfg.quadrature.specs()?.radial)?.value
            };
            let a2 = fit_pair(cfg, &p, c, &s.fit_lambda_grid)?
                .a2
                .ok_or_else(|| CliError::Failure("pair fit returned no A2".into()))?;
            (BalanceCoefficients::FromA2 { a1, a2 }, Some(a2))
        }
    };
    let opts = SolveOptions {
        window: cfg.ansatz.window,
        theta: cfg.ansatz.theta,
        tol: s.tol,
        max_iter: s.max_iter,
        start: s.start.clone(),
        enforce_window: s.enforce_window,
    };
    let solution = solve_reduced(&k, s.m, coeffs, &p, &opts)?;
    out.json(
        "solve",
        &SolveRecord {
            n: p.n(),
            alpha: p.alpha(),
            coefficient_source: s.coefficients,
            a2,
            window: opts.window,
            theta: opts.theta,
            solution,
        },
    )
}

fn residual_row(field: &str, test: &str, rho: f64, r: &PohozaevResidual) -> Vec<String> {
    vec![
        field.to_string(),
        test.to_string(),
        num(rho),
        num(r.value),
        num(r.est_error),
        num(r.linear_part),
        num(r.linear_error),
        num(r.nonlocal_part),
        num(r.nonlocal_error),
        r.evals.to_string(),
    ]
}

pub const POHOZAEV_HEADER: [&str; 10] = [
    "field",
    "test",
    "rho",
    "value",
    "est_error",
    "linear_part",
    "linear_error",
    "nonlocal_part",
    "nonlocal_error",
    "evals",
];

/// The single bubble at the tube center with `K ≡ 1`, and its closed-form potential.
pub fn tube_bubble(cfg: &RunConfig, p: &ProblemParams) -> Result<(Ansatz, PotentialModel), CliError> {
    let k = cfg.potential()?;
    let one = PotentialModel::constant_one(k.r0, k.x0_pp.clone());
    let c = sharp(p)?.bubble_coeff;
    let cut = CutoffSpec::new(k.r0, k.x0_pp.clone(), cfg.pohozaev.delta)?;
    let a = Ansatz::new(*p, c, 1, k.r0, &k.x0_pp, cfg.pohozaev.lambda, cut, false)?;
    Ok((a, one))
}

/// Radial remainder potential for the bumped bubble.
pub fn bumped_nonlocal(
    a: &Ansatz,
    amplitude: f64,
    width: f64,
    r_max: f64,
    degree: usize,
    spec: &hartree::QuadratureSpec,
) -> Result<RadialTableNonlocal<ClosedFormNonlocal>, CliError> {
    let p = a.params;
    let e = p.two_star_alpha();
    let (c, l) = (a.coeff, a.lambda);
    let g = move |r: f64| {
        let u = bubble_radial(&p, c, l, r);
        (u + amplitude * (-(r / width).powi(2)).exp()).powf(e) - u.powf(e)
    };
    Ok(RadialTableNonlocal::build(
        ClosedFormNonlocal::for_ansatz(a)?,
        g,
        &p,
        &a.placement.centers[0],
        width,
        r_max,
        degree,
        spec,
    )?)
}

pub fn pohozaev(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let p = cfg.params()?;
    let s = &cfg.pohozaev;
    let specs = cfg.quadrature.specs()?;
    let (a, k) = tube_bubble(cfg, &p)?;
    let mut rows = Vec::new();
    let factors = if s.rho_factors.is_empty() { vec![DEFAULT_RHO_FACTOR] } else { s.rho_factors.clone() };
    let tubes = factors
        .iter()
        .map(|f| Tube::around(&k, s.delta, f * s.delta))
        .collect::<hartree::Result<Vec<_>>>()?;
    let run = |field: &dyn Field, v: &dyn Nonlocal, name: &str, rows: &mut Vec<Vec<String>>| -> Result<(), CliError> {
        for tube in &tubes {
            let r = pohozaev_dilation_residual(field, &k, v, tube, &p, &specs.tube)?;
            rows.push(residual_row(name, "dilation", tube.rho, &r));
            for &i in &s.translation {
                let r = pohozaev_translation_residual(field, &k, v, tube, i, &p, &specs.tube)?;
                rows.push(residual_row(name, &format!("translation_{i}"), tube.rho, &r));
            }
        }
        Ok(())
    };
    if s.perturbation == 0.0 {
        let v = ClosedFormNonlocal::for_ansatz(&a)?;
        run(&AnsatzField(&a), &v, "bubble", &mut rows)?;
    } else {
        let amp = s.perturbation * a.coeff * a.lambda.powf(p.half_n_minus_2());
        let w = s.bump_width / a.lambda;
        let z = a.placement.centers[0].clone();
        let r_max = tubes.iter().map(|t| t.max_distance_from(&z)).fold(0.0, f64::max);
        let v = bumped_nonlocal(&a, amp, w, r_max, s.table_degree, &specs.two_center)?;
        let field = BumpedField { base: AnsatzField(&a), amplitude: amp, center: z, width: w };
        run(&field, &v, "bumped", &mut rows)?;
        if s.fd_oracle {
            run(&FdField::new(&field), &v, "bumped_fd", &mut rows)?;
        }
    }
    out.csv("pohozaev", &POHOZAEV_HEADER, &rows)
}

#[derive(Serialize)]
struct NormsRecord {
    #[serde(rename = "N")]
    n: usize,
    alpha: f64,
    m: usize,
    lambda: f64,
    tau: f64,
    seed: u64,
    /// Sampled suprema are lower bounds of the true norms.
    lower_bound: bool,
    design: &'static str,
    star_ansatz: NormValue,
    starstar_laplacian: NormValue,
    /// `-ΔZ - (Σ_j |x|^{-α} * U_j^{2*})Z^{2*-1}` for the uncut sum with `K ≡ 1`.
    starstar_interaction_error: NormValue,
    /// `max_s c(1+s)^{b+τ}/(1+s²)^b` for one bubble, with its argmax `s = λ|x - z|`.
    single_bubble_star_sup: Option<(f64, f64)>,
}

pub fn norms(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let p = cfg.params()?;
    let c = sharp(&p)?.bubble_coeff;
    let s = &cfg.ansatz;
    let a = ansatz(cfg, &p, c, s.m, s.lambda, s.use_cutoff)?;
    let uncut = a.without_cutoff();
    let seed = cfg.quadrature.seed;
    let spec = WeightedNormSpec::stratified(&p, a.placement.clone(), s.lambda, cfg.norms.samples, seed);
    let v = ClosedFormNonlocal::for_ansatz(&a)?;
    let e = p.two_star_alpha();
    let interaction = |x: &[f64]| {
        let (u, _, lap) = uncut.jet(x);
        -lap - v.potential(x) * u.powf(e - 1.0)
    };
    out.json(
        "norms",
        &NormsRecord {
            n: p.n(),
            alpha: p.alpha(),
            m: s.m,
            lambda: s.lambda,
            tau: spec.tau,
            seed,
            lower_bound: true,
            design: "centers; 3/4 of the rest at log-uniform distances 1e-3/lambda..1e2/lambda around the centers; \
                     the rest at radii log-uniform in [r_bar, 1e3 r_bar]; shifted Halton directions",
            star_ansatz: weighted_norm_star(|x: &[f64]| a.eval(x), &spec)?,
            starstar_laplacian: weighted_norm_starstar(|x: &[f64]| a.jet(x).2, &spec)?,
            starstar_interaction_error: weighted_norm_starstar(interaction, &spec)?,
            single_bubble_star_sup: (s.m == 1).then(|| single_bubble_star_sup(&p, c)),
        },
    )
}

pub const LEMMA_HEADER: [&str; 9] = [
    "lemma",
    "parameters",
    "budget",
    "ratio_at_budget",
    "worst_ratio",
    "growth",
    "tol",
    "holds",
    "witness",
];

pub fn lemma_reports(cfg: &RunConfig) -> Result<Vec<LemmaReport>, CliError> {
    let p = cfg.params()?;
    let spec = cfg.quadrature.specs()?.radial;
    let cases = cfg.lemmas.cases.clone().unwrap_or_else(|| default_lemma_grid(&p));
    cases
        .iter()
        .map(|case| Ok(lemma_check(case, cfg.lemmas.budget.unwrap_or_else(|| default_budget(case)), &spec)?))
        .collect()
}

pub fn lemma_row(r: &LemmaReport) -> Vec<String> {
    vec![
        r.case.name().to_string(),
        r.case.describe(),
        r.budget.to_string(),
        num(r.ratio_at_budget),
        num(r.worst_ratio),
        num(r.worst_ratio / r.ratio_at_budget),
        num(hartree::reduction::lemmas::STABILITY),
        r.holds.to_string(),
        r.witness.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" "),
    ]
}

pub fn lemma_check_cmd(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let reports = lemma_reports(cfg)?;
    let rows: Vec<_> = reports.iter().map(lemma_row).collect();
    out.csv("lemma_check", &LEMMA_HEADER, &rows)?;
    let failed = reports.iter().filter(|r| !r.holds).count();
    if failed > 0 {
        return Err(CliError::Failure(format!("{failed} lemma check(s) did not hold")));
    }
    Ok(())
}
