use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown population or label `{0}`")]
    UnknownName(String),
    #[error("probability bound {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("malformed time interval [{lo}, {hi}]")]
    MalformedInterval { lo: f64, hi: f64 },
    #[error("class {class} fires in state {state:?} but leads to a negative population")]
    WellFormednessViolation { state: Vec<i64>, class: usize },
    #[error("class {class} has negative propensity {value} in state {state:?}")]
    NegativePropensity { state: Vec<i64>, class: usize, value: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("the truncation contains no states")]
    EmptyTruncation,
    #[error("target state {0} is not absorbing in this view")]
    NotAbsorbing(usize),
    #[error("state {0:?} has not been explored")]
    StateNotExplored(Vec<i64>),
    #[error("the drift is unbounded above on the non-negative orthant")]
    NoFiniteMaximum,
    #[error("Lyapunov function is not radially unbounded along population `{0}`")]
    NotRadiallyUnbounded(String),
    #[error("window of {size} states exceeds the cap of {cap}")]
    WindowTooLarge { size: usize, cap: usize },
    #[error("window enumeration failed: level set escapes the bounding box")]
    WindowShellViolation,
    #[error("window generator is not irreducible ({reached} of {size} states mutually reachable)")]
    ReducibleWindow { reached: usize, size: usize },
    #[error("steady-state operator needs a Lyapunov certificate: {0}")]
    MissingCertificate(String),
    #[error("expression is not a polynomial: {0}")]
    NotPolynomial(String),
    #[error("arithmetic overflow in exact coefficient")]
    Overflow,
}
