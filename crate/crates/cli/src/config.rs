//! Run configuration. Every section has explicit defaults; `resolve` fills the
//! dimension-dependent ones (`x''` vectors, the potential curvature) from `N`.

use serde::{Deserialize, Serialize};

use hartree::energy::DerivativeMethod;
use hartree::potential::make_quadratic_model;
use hartree::reduction::lemmas::LemmaCase;
use hartree::reduction::solve::{SolveOptions, DEFAULT_THETA, DEFAULT_WINDOW};
use hartree::{make_problem, AnsatzConfig, PotentialModel, ProblemParams, QuadratureSpec, Scheme};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub potential: PotentialSection,
    pub ansatz: AnsatzSection,
    pub quadrature: QuadratureSection,
    pub expansion: ExpansionSection,
    pub solve: SolveSection,
    pub pohozaev: PohozaevSection,
    pub norms: NormsSection,
    pub lemmas: LemmasSection,
    pub verify: VerifySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSection {
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self { n: 6, alpha: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Quadratic,
    ConstantOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSection {
    pub kind: PotentialKind,
    pub r0: f64,
    /// Zeros of length `N - 2` when absent.
    pub x0_pp: Option<Vec<f64>>,
    /// `1/(2(N-1))` when absent, which makes `ΔK = -1` at the maximum.
    pub a: Option<f64>,
    pub rho_t: f64,
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self {
            kind: PotentialKind::Quadratic,
            r0: 1.0,
            x0_pp: None,
            a: None,
            rho_t: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnsatzSection {
    pub m: usize,
    pub r_bar: f64,
    pub x_bar_pp: Option<Vec<f64>>,
    pub lambda: f64,
    pub delta: f64,
    pub window: (f64, f64),
    pub theta: f64,
    pub use_cutoff: bool,
}

impl Default for AnsatzSection {
    fn default() -> Self {
        Self {
            m: 1,
            r_bar: 1.0,
            x_bar_pp: None,
            lambda: 20.0,
            delta: 0.1,
            window: DEFAULT_WINDOW,
            theta: DEFAULT_THETA,
            use_cutoff: false,
        }
    }
}

/// Overrides of one quadrature preset; the seed is shared by all presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFields {
    pub scheme: Option<Scheme>,
    pub nodes: Option<usize>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub domain_radius: Option<f64>,
}

impl SpecFields {
    fn of(s: &QuadratureSpec) -> Self {
        Self {
            scheme: Some(s.scheme),
            nodes: Some(s.nodes),
            rel_tol: Some(s.rel_tol),
            abs_tol: Some(s.abs_tol),
            domain_radius: Some(s.domain_radius),
        }
    }

    fn apply(&self, mut s: QuadratureSpec, name: &str) -> Result<QuadratureSpec, CliError> {
        if let Some(sc) = self.scheme {
            if sc != s.scheme {
                return Err(CliError::Config(format!(
                    "quadrature.{name}.scheme must be {:?}",
                    s.scheme
                )));
            }
        }
        s.nodes = self.nodes.unwrap_or(s.nodes);
        s.rel_tol = self.rel_tol.unwrap_or(s.rel_tol);
        s.abs_tol = self.abs_tol.unwrap_or(s.abs_tol);
        s.domain_radius = self.domain_radius.unwrap_or(s.domain_radius);
        s.validate().map_err(|e| CliError::Config(format!("quadrature.{name}: {e}")))?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSection {
    pub seed: u64,
    /// One-dimensional radial integrals.
    pub radial: SpecFields,
    /// Two-center integrals (energy, Riesz potentials off the center).
    pub two_center: SpecFields,
    /// Quasi-Monte Carlo Riesz convolutions.
    pub qmc: SpecFields,
    /// Pohožaev tube integrals.
    pub tube: SpecFields,
}

/// Tube tolerance used by the CLI; the library preset is tighter.
const CLI_TUBE_TOL: f64 = 1e-3;
const CLI_QMC_NODES: usize = 1 << 12;

fn presets() -> Specs {
    Specs {
        radial: QuadratureSpec::radial(),
        two_center: QuadratureSpec::two_center().with_tol(1e-9),
        qmc: QuadratureSpec::qmc().with_nodes(CLI_QMC_NODES),
        tube: QuadratureSpec::tube().with_nodes(1).with_tol(CLI_TUBE_TOL),
    }
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let d = presets();
        Self {
            seed: QuadratureSpec::default().seed,
            radial: SpecFields::of(&d.radial),
            two_center: SpecFields::of(&d.two_center),
            qmc: SpecFields::of(&d.qmc),
            tube: SpecFields::of(&d.tube),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Specs {
    pub radial: QuadratureSpec,
    pub two_center: QuadratureSpec,
    pub qmc: QuadratureSpec,
    pub tube: QuadratureSpec,
}

impl QuadratureSection {
    /// Overrides are applied on top of the CLI presets, so omitted fields keep their defaults.
    pub fn specs(&self) -> Result<Specs, CliError> {
        let seed = self.seed;
        let d = presets();
        Ok(Specs {
            radial: self.radial.apply(d.radial, "radial")?.with_seed(seed),
            two_center: self.two_center.apply(d.two_center, "two_center")?.with_seed(seed),
            qmc: self.qmc.apply(d.qmc, "qmc")?.with_seed(seed),
            tube: self.tube.apply(d.tube, "tube")?.with_seed(seed),
        })
    }

    /// Replaces partial overrides with the full resolved presets.
    fn fill(&mut self) -> Result<(), CliError> {
        let s = self.specs()?;
        self.radial = SpecFields::of(&s.radial);
        self.two_center = SpecFields::of(&s.two_center);
        self.qmc = SpecFields::of(&s.qmc);
        self.tube = SpecFields::of(&s.tube);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionPotential {
    /// The `potential` section.
    Configured,
    ConstantOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticModel {
    pub a1: f64,
    pub a2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpansionSection {
    pub m: usize,
    pub potential: ExpansionPotential,
    pub lambda_grid: Vec<f64>,
    pub method: DerivativeMethod,
    /// Fit exact model samples instead of computed ones.
    pub synthetic: Option<SyntheticModel>,
    /// Exit 1 when the weighted relative fit residual exceeds this.
    pub max_rel_residual: f64,
    pub synthetic_tol: f64,
}

impl Default for ExpansionSection {
    fn default() -> Self {
        Self {
            m: 1,
            potential: ExpansionPotential::Configured,
            lambda_grid: vec![10.0, 15.0, 20.0, 30.0, 40.0, 60.0, 80.0],
            method: DerivativeMethod::Analytic,
            synthetic: None,
            max_rel_residual: 0.05,
            synthetic_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientSource {
    /// `A1` from a single-bubble fit with the configured `K`, `A2` from a pair fit with `K ≡ 1`.
    Fit,
    /// `A1` from the second-moment formula, `A2` from the pair fit.
    Moment,
    /// `a1` and `a3` as given.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSection {
    pub m: usize,
    pub coefficients: CoefficientSource,
    pub a1: Option<f64>,
    pub a3: Option<f64>,
    pub fit_lambda_grid: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub start: Option<Vec<f64>>,
    pub enforce_window: bool,
}

impl Default for SolveSection {
    fn default() -> Self {
        let o = SolveOptions::default();
        Self {
            m: 16,
            coefficients: CoefficientSource::Fit,
            a1: None,
            a3: None,
            fit_lambda_grid: vec![20.0, 30.0, 40.0, 60.0, 80.0],
            tol: o.tol,
            max_iter: o.max_iter,
            start: None,
            enforce_window: o.enforce_window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PohozaevSection {
    pub lambda: f64,
    pub delta: f64,
    pub rho_factors: Vec<f64>,
    /// Translation residuals for these 1-based coordinates (each in `3..=N`).
    pub translation: Vec<usize>,
    /// Bump amplitude relative to the bubble peak `c λ^{(N-2)/2}`; `0` for the exact bubble.
    pub perturbation: f64,
    /// Bump width in units of `1/λ`.
    pub bump_width: f64,
    pub table_degree: usize,
    /// Repeat the perturbed residuals with finite-difference derivatives.
    pub fd_oracle: bool,
}

impl Default for PohozaevSection {
    fn default() -> Self {
        Self {
            lambda: 20.0,
            delta: 0.1,
            rho_factors: vec![2.5, 3.5, 4.5],
            translation: vec![3],
            perturbation: 0.0,
            bump_width: 1.0,
            table_degree: 48,
            fd_oracle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormsSection {
    pub samples: usize,
}

impl Default for NormsSection {
    fn default() -> Self {
        Self {
            samples: hartree::reduction::norms::DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmasSection {
    /// Default grid for `(N, α)` when absent.
    pub cases: Option<Vec<LemmaCase>>,
    /// Per-lemma default when absent.
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Multiplies the bubble coefficient in the invariance suite (negative control).
    pub coefficient_factor: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { coefficient_factor: 1.0 }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<ProblemParams, CliError> {
        Ok(make_problem(self.problem.n, self.problem.alpha)?)
    }

    /// Fills the `N`-dependent defaults and validates every section.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let p = self.params()?;
        let n = p.n();
        let zeros = vec![0.0; n - 2];
        let pot = &mut self.potential;
        pot.x0_pp.get_or_insert_with(|| zeros.clone());
        if pot.kind == PotentialKind::Quadratic {
            pot.a.get_or_insert(1.0 / (2.0 * (n as f64 - 1.0)));
        }
        self.ansatz.x_bar_pp.get_or_insert_with(|| zeros.clone());
        self.quadrature.fill()?;
        self.potential()?;
        self.ansatz_config()?.validate(&p)?;
        if self.lemmas.budget == Some(0) {
            return Err(CliError::Config("lemmas.budget must be positive".into()));
        }
        if self.norms.samples == 0 {
            return Err(CliError::Config("norms.samples must be positive".into()));
        }
        if self.solve.coefficients == CoefficientSource::Fixed && (self.solve.a1.is_none() || self.solve.a3.is_none()) {
            return Err(CliError::Config("solve.coefficients = fixed needs solve.a1 and solve.a3".into()));
        }
        for &i in &self.pohozaev.translation {
            if !(3..=n).contains(&i) {
                return Err(CliError::Config(format!("pohozaev.translation index {i} outside 3..={n}")));
            }
        }
        Ok(self)
    }

    pub fn potential(&self) -> Result<PotentialModel, CliError> {
        let s = &self.potential;
        let n = self.problem.n;
        let x0 = s.x0_pp.clone().unwrap_or_else(|| vec![0.0; n - 2]);
        if x0.len() != n - 2 {
            return Err(CliError::Config(format!("potential.x0_pp has length {}, expected N-2 = {}", x0.len(), n - 2)));
        }
        Ok(match s.kind {
            PotentialKind::ConstantOne => PotentialModel::constant_one(s.r0, x0),
            PotentialKind::Quadratic => {
                let a = s.a.unwrap_or(1.0 / (2.0 * (n as f64 - 1.0)));
                make_quadratic_model(s.r0, x0, a, s.rho_t)?
            }
        })
    }

    pub fn ansatz_config(&self) -> Result<AnsatzConfig, CliError> {
        let s = &self.ansatz;
        Ok(AnsatzConfig {
            m: s.m,
            r_bar: s.r_bar,
            x_bar_pp: s.x_bar_pp.clone().unwrap_or_else(|| vec![0.0; self.problem.n - 2]),
            lambda: s.lambda,
            delta: s.delta,
            window: s.window,
            theta: s.theta,
        })
    }
}
