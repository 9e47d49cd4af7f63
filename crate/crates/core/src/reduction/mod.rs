//! The reduced problem: balance equation and critical points of `K`, weighted norms,
//! local Pohožaev residuals and the decay estimates.

pub mod lemmas;
pub mod norms;
pub mod pohozaev;
pub mod solve;

pub use lemmas::{default_lemma_grid, lemma_check, LemmaCase, LemmaReport};
pub use norms::{weighted_norm_star, weighted_norm_starstar, NormValue, WeightedNormSpec};
pub use pohozaev::{
    pohozaev_dilation_residual, pohozaev_translation_residual, AnsatzField, BumpedField, ClosedFormNonlocal, FdField,
    Field, Nonlocal, PohozaevResidual, RadialTableNonlocal, ScaledField, ScaledNonlocal, Tube,
};
pub use solve::{balance_residual, balance_root, solve_reduced, BalanceCoefficients, ReducedSolution, SolveOptions};
