use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension N = {0} is not supported; the construction needs N >= 5")]
    DimensionTooSmall(usize),
    #[error("alpha = {alpha} outside ({lower}, {upper})")]
    AlphaOutOfRange { alpha: f64, lower: f64, upper: f64 },
    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),
    #[error("s = {s} outside (0, N/2) = (0, {half_n})")]
    SOutOfRange { s: f64, half_n: f64 },
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("interaction needs m >= 2 bubbles, got m = {0}")]
    MTooSmall(usize),
    #[error("curvature a = {a} with rho_t = {rho_t} makes K non-positive in the transition")]
    CurvatureTooLarge { a: f64, rho_t: f64 },
    #[error("Hessian of K at the critical point is degenerate (det = {0})")]
    DegenerateHessian(f64),
    #[error("two-center integral needs distinct centers")]
    CoincidentCenters,
    #[error("expansion fit is ill-conditioned: {0}")]
    IllConditionedFit(String),
    #[error("finite-difference step {step} too coarse for lambda = {lambda}")]
    StepTooCoarse { step: f64, lambda: f64 },
    #[error("pair separation lambda*|z1 - z2| = {0} below the asymptotic threshold 10")]
    TooClose(f64),
    #[error("rho = {rho} outside the admissible range ({lo}, {hi})")]
    RhoOutOfRange { rho: f64, lo: f64, hi: f64 },
    #[error("balance coefficients must be positive (A1 = {a1}, A3 = {a3})")]
    NonPositiveCoefficient { a1: f64, a3: f64 },
    #[error("Newton iteration diverged after {iterations} steps (|grad K| = {grad_norm})")]
    NewtonDiverged { iterations: usize, grad_norm: f64 },
    #[error("balance root t = {t} outside window [{l0}, {l1}]")]
    RootOutsideWindow { t: f64, l0: f64, l1: f64 },
    #[error("weighted norm needs at least one sample point")]
    EmptySampleSet,
    #[error("exponent out of range: {0}")]
    ExponentOutOfRange(String),
    #[error("bubble centers and the potential/cutoff axis differ in x''; only coaxial configurations are supported here")]
    NotCoaxial,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
