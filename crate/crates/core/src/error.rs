use thiserror::Error;

/// Errors raised by the analysis pipeline.
///
/// Variants fall into three families that the command-line front end maps to
/// distinct exit codes: input problems ([`Error::is_input`]), mathematical
/// refusals ([`Error::is_refusal`]) and internal-consistency failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("empty expression")]
    EmptyInput,
    #[error("invalid variable list: {0}")]
    InvalidVariables(String),
    #[error("expected {expected} coordinates, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("variable index {index} out of range for arity {arity}")]
    VariableOutOfRange { index: usize, arity: usize },
    #[error("Taylor order {0} exceeds the supported maximum of 5")]
    OrderTooLarge(usize),
    #[error("non-finite derivative value at the expansion center (multi-index {0:?})")]
    NonFiniteDerivative(Vec<u32>),

    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("declared point is not fixed: residual {residual:e} exceeds 1e-9")]
    NotFixed { residual: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value at orbit index {index}")]
    NonFiniteOrbit { index: usize },
    #[error("non-finite state during integration")]
    NonFiniteIntegration,
    #[error("singular Jacobian at orbit index {index} (|det| = {det:e})")]
    SingularJacobian { index: usize, det: f64 },
    #[error("Newton inversion did not converge at orbit index {index}")]
    NewtonDiverged { index: usize },

    #[error("empty point set")]
    EmptyPointSet,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("epsilon window is empty (eps_min {eps_min:e} >= eps_max {eps_max:e})")]
    EmptyWindow { eps_min: f64, eps_max: f64 },

    #[error("resonance at order {order}: small denominator {denominator:e}")]
    Resonance { order: usize, denominator: f64 },
    #[error("Jacobian at the base point is not diagonal: {0}")]
    NotDiagonal(String),
    #[error("restricted map is hyperbolic (|G'(0)| = {0}); nondegeneracy order undefined")]
    HyperbolicRestriction(f64),
    #[error("restricted map is degenerate up to order {0}")]
    Degenerate(usize),
    #[error("manifold expansion residual {0:e} exceeds threshold")]
    ResidualTooLarge(f64),

    #[error("QR iteration did not converge after {0} iterations")]
    QrNonConvergence(usize),
    #[error("orbit does not converge to the declared fixed point")]
    NonConvergentOrbit,

    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
}

impl Error {
    /// Malformed user input: parse errors, bad configs, unknown names.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::UnknownIdentifier { .. }
                | Error::EmptyInput
                | Error::InvalidVariables(_)
                | Error::ArityMismatch { .. }
                | Error::VariableOutOfRange { .. }
                | Error::OrderTooLarge(_)
                | Error::InvalidSystem(_)
                | Error::NotFixed { .. }
                | Error::InvalidParameter(_)
                | Error::Config { .. }
                | Error::UnknownEntry(_)
        )
    }

    /// Internal-consistency failures (two routes to the same quantity disagree).
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Inconsistent(_))
    }

    /// Everything else: the input was well formed but the mathematics refuses.
    pub fn is_refusal(&self) -> bool {
        !self.is_input() && !self.is_internal()
    }
}

pub type Result<T> = std::result::Result<T, Error>;
