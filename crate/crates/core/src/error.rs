use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("x = {x} lies outside the profile interval [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("derivative undefined at x = {x}: one-sided slopes differ, request a side")]
    DerivativeUndefined { x: f64 },

    #[error("width vanishes at x = {x}: potential is singular there")]
    Singular { x: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("profile validation failed: {}", .0.join("; "))]
    ValidationFailed(Vec<String>),

    #[error("profile vanishes at an endpoint; solve through bracket profiles instead")]
    RequiresBracketing,

    #[error("lower bracket profile is nonpositive at x = {x}: shrink eta_tilde")]
    ShrinkEtaTilde { x: f64 },

    #[error("bracket construction failed: {0}")]
    Bracket(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bisection for eigenvalue {index} did not converge after {iterations} steps (bracket [{lo}, {hi}])")]
    Bisection {
        index: usize,
        lo: f64,
        hi: f64,
        iterations: usize,
    },

    #[error("shift {shift} hits the spectrum (pivot {pivot:e} at row {row}); perturb the shift")]
    ShiftHitsSpectrum { shift: f64, row: usize, pivot: f64 },

    #[error("Lanczos did not converge in {iterations} steps; Ritz estimates (value, residual): {ritz:?}")]
    LanczosNoConvergence {
        iterations: usize,
        ritz: Vec<(f64, f64)>,
    },

    #[error("inertia certificate failed at shift {shift}: {found} eigenvalues below, expected {expected}")]
    Inertia {
        shift: f64,
        found: usize,
        expected: usize,
    },

    #[error("bracketing inequality violated: lambda_plus = {plus:?}, lambda_minus = {minus:?}")]
    BracketOrder { plus: Vec<f64>, minus: Vec<f64> },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("truncation policy unsatisfiable: {0}")]
    Truncation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config(_) | Error::Json(_) | Error::InvalidProfile(_) => 2,
            Error::ValidationFailed(_) | Error::RequiresBracketing => 3,
            Error::Io(_) => 1,
            _ => 4,
        }
    }
}
