use thiserror::Error;

/// Errors raised by the solvers and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SilError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("profile integrand vanishes away from the wells at w = {at}")]
    NonMonotone { at: f64 },
    #[error("energy increased during descent at iteration {iteration}")]
    NoDescent { iteration: usize },
    #[error("tail region has {found} usable samples, at least {needed} required")]
    TailTooShort { found: usize, needed: usize },
    #[error("data violate the solvability condition (defect {defect:e})")]
    Incompatible { defect: f64 },
    #[error("linear system is singular beyond the expected kernel: {0}")]
    SingularSolve(String),
    #[error("kernel dimension is {dim}, expected 1")]
    KernelNotSimple { dim: usize },
    #[error("grid has {per_unit:.2} points per unit length, at least {min} required")]
    GridTooCoarse { per_unit: f64, min: f64 },
    #[error("perturbation outside the admissible class: orthogonality defect {defect:e}")]
    PerturbationOutOfClass { defect: f64 },
    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("graph slope {slope:e} exceeds the cap {cap:e} at t = {t}")]
    BlowUp { slope: f64, cap: f64, t: f64 },
    #[error("tubular neighbourhood not embedded: delta * max|k| = {product:.4}")]
    TubularOverlap { product: f64 },
    #[error("time step produced non-finite values at t = {t}")]
    StepRejected { t: f64 },
    #[error("principal coefficient {value:e} is not positive")]
    NonParabolic { value: f64 },
    #[error("order-one source is not orthogonal to the kernel (defect {defect:e})")]
    CompatibilityDefect { defect: f64 },
    #[error("grid resolves eps = {eps} with {cells_per_eps:.2} cells, at least 8 required")]
    UnresolvedInterface { eps: f64, cells_per_eps: f64 },
    #[error("condition estimate {estimate:e} exceeds the cap {cap:e}")]
    IllConditioned { estimate: f64, cap: f64 },
    #[error("I/O failure at {path}: {message}")]
    Io { path: String, message: String },
    #[error("configuration error at line {line}: {message}")]
    Config { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, SilError>;

impl SilError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        SilError::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}
