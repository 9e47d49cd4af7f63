//! Multi-bubble approximate solutions of the critical Hartree equation
//!
//! ```text
//! -Δu = K(|x'|, x'') (|x|^{-α} * K|u|^{2*_α}) u^{2*_α - 1},   x ∈ R^N
//! ```
//!
//! The crate evaluates the explicit constants of the problem (Hardy–Littlewood–Sobolev
//! constant, Sobolev constant, bubble normalization, the Riesz identity constant),
//! builds the polygonal m-bubble ansatz, and checks the reduced energy expansion
//! and the local Pohožaev identities numerically.
//!
//! Pointwise math (parameters, constants, geometry, bubbles, potentials, closed-form
//! Riesz potentials) is generic over the scalar via [`Real`]; the integration
//! engines and everything built on them run in `f64`. The `f64` aliases below are
//! what most callers want.

pub mod bubbles;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod params;
pub mod potential;
pub mod quadrature;
pub mod reduction;
pub mod riesz;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use params::make_problem;
pub use scalar::Real;

pub type ProblemParams = params::ProblemParams<f64>;
pub type AnsatzConfig = params::AnsatzConfig<f64>;
pub type SharpConstants = special::SharpConstants<f64>;
pub type Placement = geometry::Placement<f64>;
pub type CutoffSpec = geometry::CutoffSpec<f64>;
pub type Bubble = bubbles::Bubble<f64>;
pub type Ansatz = bubbles::Ansatz<f64>;
pub type PotentialModel = potential::PotentialModel<f64>;

pub use quadrature::{IntegralResult, QuadratureSpec, Scheme};
