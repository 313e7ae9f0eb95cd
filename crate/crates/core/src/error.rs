use thiserror::Error;

/// Every failure the library can report. `code()` gives a stable
/// module-qualified identifier used by the CLI and the C ABI.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input `{name}` must be strictly positive (got {value})")]
    NonPositiveInput { name: &'static str, value: f64 },
    #[error("m_N = m_e makes the Zeeman reduced mass undefined")]
    DegenerateMasses,
    #[error("internal units fix m_e = 1 (got {0})")]
    InconsistentUnits(f64),

    #[error("n_max = {0} exceeds the supported truncation (30)")]
    TruncationTooLarge(usize),

    #[error("dimensionless parameter {name} = {value} is too large for second-order perturbation theory")]
    PerturbationTooLarge { name: &'static str, value: f64 },
    #[error("ground state is (nearly) degenerate: gap estimate {gap:e}")]
    DegenerateGroundState { gap: f64 },
    #[error("basis mismatch: state has n_max = {state}, operator has n_max = {op}")]
    BasisMismatch { state: usize, op: usize },

    #[error("frequency {omega} lies within tolerance of a pole at {pole}")]
    OnResonance { omega: f64, pole: f64 },
    #[error("|k|c = {kc} differs from omega = {omega}")]
    OffShell { kc: f64, omega: f64 },
    #[error("field is not transverse to the wave vector (k.E = {0:e})")]
    NotTransverse(f64),

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),
    #[error("invalid quadrature settings: {0}")]
    InvalidQuadrature(String),

    #[error("transition energies must be negative (E1 = {e1}, E2 = {e2})")]
    NonNegativeTransitionEnergy { e1: f64, e2: f64 },
    #[error("resolvent solve failed: {0}")]
    ResolventSingular(String),
    #[error("orientation grid too coarse: refinement changed the average by {delta:e}")]
    GridTooCoarse { delta: f64 },

    #[error("config parse error: {0}")]
    ParseError(String),
    #[error("unknown config field `{0}`")]
    UnknownField(String),
    #[error("config value out of range: {0}")]
    RangeError(String),
    #[error("i/o error: {0}")]
    Io(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonPositiveInput { .. } => "params.NonPositiveInput",
            Error::DegenerateMasses => "params.DegenerateMasses",
            Error::InconsistentUnits(_) => "params.InconsistentUnits",
            Error::TruncationTooLarge(_) => "fock.TruncationTooLarge",
            Error::PerturbationTooLarge { .. } => "perturbation.PerturbationTooLarge",
            Error::DegenerateGroundState { .. } => "perturbation.DegenerateGroundState",
            Error::BasisMismatch { .. } => "perturbation.BasisMismatch",
            Error::OnResonance { .. } => "response.OnResonance",
            Error::OffShell { .. } => "response.OffShell",
            Error::NotTransverse(_) => "response.NotTransverse",
            Error::QuadratureNotConverged(_) => "semiclassical.QuadratureNotConverged",
            Error::InvalidQuadrature(_) => "semiclassical.InvalidQuadrature",
            Error::NonNegativeTransitionEnergy { .. } => "qed.NonNegativeTransitionEnergy",
            Error::ResolventSingular(_) => "qed.ResolventSingular",
            Error::GridTooCoarse { .. } => "qed.GridTooCoarse",
            Error::ParseError(_) => "cli.ParseError",
            Error::UnknownField(_) => "cli.UnknownField",
            Error::RangeError(_) => "cli.RangeError",
            Error::Io(_) => "cli.Io",
            Error::Invariant(_) => "invariant",
        }
    }

    /// Process exit code: 2 config, 3 non-convergence, 4 invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::QuadratureNotConverged(_)
            | Error::ResolventSingular(_)
            | Error::DegenerateGroundState { .. }
            | Error::GridTooCoarse { .. } => 3,
            Error::Invariant(_) | Error::BasisMismatch { .. } => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
