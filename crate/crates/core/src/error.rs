use thiserror::Error;

/// Errors raised by the solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("secular function is singular at kappa = 0")]
    SingularPoint,

    #[error("interval [{lo}, {hi}] holds fewer than 4 grid points")]
    DegenerateInterval { lo: f64, hi: f64 },

    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("cluster near kappa = {kappa}: winding {winding} contradicts local analysis ({real} real roots)")]
    UnresolvedCluster {
        kappa: f64,
        winding: i64,
        real: usize,
    },

    #[error("secular function vanishes on the contour of {region}")]
    ContourZero { region: String },

    #[error("contour sampling exceeded the budget of {budget} samples")]
    PhaseBudget { budget: usize },

    #[error("Newton iterate left the search region near {near}")]
    Diverged { near: String },

    #[error("numerical nullspace at kappa = {kappa} is two-dimensional")]
    DegenerateNullspace { kappa: String },

    #[error("kappa = {kappa} is not an eigenvalue (pivot ratio {ratio:e})")]
    NoNullspace { kappa: String, ratio: f64 },

    #[error("PT parity convention violated (residual {residual:e})")]
    ConventionViolation { residual: f64 },

    #[error("x = {0} lies outside [-1, 1]")]
    OutOfDomain(f64),

    #[error("found {found} extrema, need at least {needed}")]
    InsufficientExtrema { found: usize, needed: usize },

    #[error("found {found} levels, need at least {needed}")]
    TooFewLevels { found: usize, needed: usize },

    #[error("unknown figure id {0} (expected 1..=7)")]
    InvalidFigure(u32),

    #[error("shooting jumped from seed {seed} to {found}, beyond the local level spacing")]
    LevelJump { seed: String, found: String },

    #[error("level {0} not found")]
    LevelNotFound(usize),

    #[error("on window [{lo}, {hi}]: {source}")]
    InWindow {
        lo: f64,
        hi: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_window(self, lo: f64, hi: f64) -> Error {
        Error::InWindow {
            lo,
            hi,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
