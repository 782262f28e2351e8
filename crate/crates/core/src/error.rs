use thiserror::Error;

pub type Result<T, E = GameError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("matrix dimensions must be positive and match the entry count ({rows}x{cols} with {len} entries)")]
    BadShape {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("qubit count must be at least {min}, got {got}")]
    TooFewQubits { min: usize, got: usize },
    #[error("player index {player} out of range for {n_players} players")]
    PlayerOutOfRange { player: usize, n_players: usize },
    #[error("operator is not unitary")]
    NonUnitary,
    #[error("Kraus operators violate completeness (sum of A^dag A != I)")]
    NotCptp,
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("probability {0} is negative beyond rounding tolerance")]
    NegativeProbability(f64),
    #[error("quaternion is not unit norm (squared norm {0})")]
    NonUnitQuaternion(f64),
    #[error("parameter constraint violated: {0}")]
    Constraint(String),
    #[error("Stinespring parameters are degenerate (rank < 2)")]
    DegenerateIsometry,
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("cannot parse `{token}`: {reason}")]
    Parse { token: String, reason: String },
    #[error("table line {line}: {reason}")]
    TableFormat { line: usize, reason: String },
    #[error("table is missing outcome {0}")]
    MissingOutcome(String),
    #[error("table lists outcome {0} more than once")]
    DuplicateOutcome(String),
    #[error("profile has {got} strategies but the game has {expected} players")]
    ArityMismatch { expected: usize, got: usize },
    #[error("payoff table is not flip-symmetric")]
    NotFlipSymmetric,
    #[error("strategy for player {0} is not unitary")]
    NonUnitaryStrategy(usize),
    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },
}
