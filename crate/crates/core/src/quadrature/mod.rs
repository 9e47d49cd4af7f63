//! Integration engines with error reporting.
//!
//! - [`radial_integral`]: radial functions, one adaptive 1-D integral.
//! - [`two_center_integral`]: functions of the two distances to a pair of points,
//!   reduced to 2-D in prolate spheroidal coordinates.
//! - [`qmc_integral`]: randomized quasi-Monte Carlo over a ball.
//!
//! [`centered`] holds the 3-D coaxial integrator used for full-ansatz energies.

pub mod centered;
pub mod gk;
pub mod qmc;
pub mod radial;
pub mod two_center;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::special::sphere_area;

pub use qmc::qmc_integral;

const INNER_PANELS: usize = 200;
pub use two_center::two_center_integral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Radial1d,
    TwoCenter2d,
    QmcNd,
    Axial3d,
    Tube,
}

/// Scheme selection, budgets and tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    /// Panel budget for adaptive rules, point budget per shift for QMC.
    pub nodes: usize,
    pub seed: u64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Ball radius for QMC truncation of infinite domains.
    pub domain_radius: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            scheme: Scheme::Radial1d,
            nodes: 4096,
            seed: 0x5eed,
            rel_tol: 1e-10,
            abs_tol: 0.0,
            domain_radius: 50.0,
        }
    }
}

impl QuadratureSpec {
    pub fn radial() -> Self {
        Self::default()
    }

    pub fn two_center() -> Self {
        Self {
            scheme: Scheme::TwoCenter2d,
            nodes: 2048,
            rel_tol: 1e-8,
            ..Self::default()
        }
    }

    pub fn qmc() -> Self {
        Self {
            scheme: Scheme::QmcNd,
            nodes: 1 << 18,
            rel_tol: 1e-3,
            ..Self::default()
        }
    }

    /// Tube integrals: `nodes` sphere points per shift, adaptive Gauss–Kronrod in the
    /// two remaining variables.
    pub fn tube() -> Self {
        Self {
            scheme: Scheme::Tube,
            nodes: 32,
            rel_tol: 1e-5,
            ..Self::default()
        }
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn with_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 || !(self.rel_tol > 0.0) || !(self.domain_radius > 0.0) || self.abs_tol < 0.0 {
            return Err(Error::InvalidInput(
                "quadrature spec needs nodes > 0, rel_tol > 0, abs_tol >= 0, domain_radius > 0".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn gk(&self) -> gk::GkOptions<f64> {
        gk::GkOptions::new(self.abs_tol.max(f64::MIN_POSITIVE), self.rel_tol, self.nodes)
    }

    /// Options for inner levels of nested rules. Their error is carried to the outer
    /// level, so an inner level that stalls on roundoff only costs accuracy where it
    /// matters to the outer sum.
    pub(crate) fn inner_gk(&self) -> gk::GkOptions<f64> {
        gk::GkOptions::new(
            self.abs_tol.max(f64::MIN_POSITIVE),
            0.25 * self.rel_tol,
            self.nodes.min(INNER_PANELS),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub est_error: f64,
    pub nodes_used: usize,
    pub scheme: Scheme,
    pub converged: bool,
}

impl IntegralResult {
    /// Turns a non-converged or non-finite result into [`Error::QuadratureFailure`].
    pub fn checked(self, what: &str) -> Result<Self> {
        if !self.converged || !self.value.is_finite() || !self.est_error.is_finite() {
            return Err(Error::QuadratureFailure(format!(
                "{what}: value {:e} with error {:e} after {} nodes ({:?})",
                self.value, self.est_error, self.nodes_used, self.scheme
            )));
        }
        Ok(self)
    }

    pub fn scaled(self, k: f64) -> Self {
        Self {
            value: self.value * k,
            est_error: self.est_error * k.abs(),
            ..self
        }
    }

    pub fn rel_error(&self) -> f64 {
        self.est_error / self.value.abs()
    }
}

/// `∫_{R^N} g(|x|) dx`, via `r = tan θ`.
pub fn radial_integral<G>(g: G, p: &ProblemParams<f64>, spec: &QuadratureSpec) -> Result<IntegralResult>
where
    G: Fn(f64) -> f64 + Sync,
{
    radial_integral_scaled(g, p.n(), 1.0, spec)
}

/// As [`radial_integral`] with the substitution `r = scale·tan θ`, for integrands whose
/// features sit near radius `scale`.
pub fn radial_integral_scaled<G>(g: G, n: usize, scale: f64, spec: &QuadratureSpec) -> Result<IntegralResult>
where
    G: Fn(f64) -> f64 + Sync,
{
    spec.validate()?;
    let r = radial::radial_moment(|r| [g(r)], n, scale, &[1.0], spec.gk());
    let area = sphere_area::<f64>(n);
    IntegralResult {
        value: r.value[0] * area,
        est_error: r.error[0] * area,
        nodes_used: r.evals,
        scheme: Scheme::Radial1d,
        converged: r.converged,
    }
    .checked("radial integral")
}
