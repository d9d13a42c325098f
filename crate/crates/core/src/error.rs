use thiserror::Error;

/// Crate-wide error type. Variants are grouped by the surface that raises
/// them; the CLI maps them onto exit codes (validation = 2, precondition
/// violations = 3, budget/cap = 4).
#[derive(Debug, Error)]
pub enum Error {
    // -- chain validation --------------------------------------------------
    #[error("transition row {row} sums to {sum:.12}, not 1 (tolerance 1e-9)")]
    NonStochastic { row: usize, sum: f64 },
    #[error("state {state:?} has stationary mass {mass:.3e} < 1e-12")]
    ZeroMassState { state: String, mass: f64 },
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:.3e}); chain may be periodic or reducible — supply `stationary` explicitly")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("matrix entry [{row}][{col}] = {value} outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error(
        "transition matrix must be square with S >= 2 states, got {rows} rows and {cols} columns"
    )]
    NotSquare { rows: usize, cols: usize },
    #[error(
        "supplied stationary vector fails mu*Pi = mu (residual {residual:.3e}, tolerance 1e-10)"
    )]
    StationaryMismatch { residual: f64 },

    // -- observables and decomposition -------------------------------------
    #[error("value table has {got} entries, expected S^ell = {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("value table entry {index} is not finite")]
    NonFiniteValue { index: usize },
    #[error("observable is not centered (mean {mean:.3e}, tolerance {tol:.1e})")]
    NotCentered { mean: f64, tol: f64 },

    // -- lattice classification --------------------------------------------
    #[error("exact value table is partially populated; certified classification needs all entries exact or none")]
    MixedRepresentation,
    #[error("operation requires a {expected} classification, got {got}")]
    KindMismatch { expected: String, got: String },
    #[error("classification is Other ({diagnostic}); local limit comparison is out of scope for this case")]
    KindOther { diagnostic: String },

    // -- variance engine ----------------------------------------------------
    #[error("Poisson solve failed: {0}")]
    SolveFailed(String),
    #[error("asymptotic variance came out {value:.3e} < -1e-10; solver bug")]
    NegativeVariance { value: f64 },
    #[error("variance is degenerate (sigma^2 = {sigma2:.3e}); comparison against a normal law is meaningless")]
    DegenerateVariance { sigma2: f64 },
    #[error("positivity verdict is {verdict}; the local limit comparison needs a positive variance certificate")]
    VerdictPrecondition { verdict: String },

    // -- budgets and caps ----------------------------------------------------
    #[error("product state space has {states} states, exceeding the cap of {cap}")]
    CapExceeded { states: u128, cap: u128 },
    #[error(
        "enumeration needs {paths} paths, exceeding the cap of {cap} (override with NLLT_MAX_ENUM)"
    )]
    EnumerationCapExceeded { paths: u128, cap: u128 },
    #[error("simulation budget exceeded: {draws} chain steps requested, cap {cap}")]
    BudgetExceeded { draws: u128, cap: u128 },
    #[error("no block length m <= {cap} gives a strictly positive Pi^((m-2)*ell); chain fails the positivity precondition")]
    PositivityWindowUnavailable { cap: usize },

    // -- instance files -------------------------------------------------------
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code the CLI assigns to this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_)
            | Error::NonStochastic { .. }
            | Error::ZeroMassState { .. }
            | Error::NotConverged { .. }
            | Error::EntryOutOfRange { .. }
            | Error::NotSquare { .. }
            | Error::StationaryMismatch { .. }
            | Error::LengthMismatch { .. }
            | Error::NonFiniteValue { .. }
            | Error::MixedRepresentation => 2,
            Error::NotCentered { .. }
            | Error::KindMismatch { .. }
            | Error::KindOther { .. }
            | Error::SolveFailed(_)
            | Error::NegativeVariance { .. }
            | Error::DegenerateVariance { .. }
            | Error::VerdictPrecondition { .. }
            | Error::PositivityWindowUnavailable { .. } => 3,
            Error::CapExceeded { .. }
            | Error::EnumerationCapExceeded { .. }
            | Error::BudgetExceeded { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
