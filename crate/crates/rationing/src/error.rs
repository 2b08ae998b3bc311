use thiserror::Error;

/// Everything that can go wrong while analysing a rationing queue.
///
/// A few variants are advisory rather than fatal: `PriorityViolation`,
/// `DegenerateRoot`, `DegenerateRatio`, `NeighborUndefined` and
/// `CycleWithoutImprovement` are usually carried inside a report as a
/// diagnostic while the computation carries on.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rate `{name}` must be strictly positive, got {value}")]
    NonPositiveRate { name: &'static str, value: f64 },

    #[error("threshold K={k} must satisfy 1 <= K <= N={n}")]
    BadThreshold { k: usize, n: usize },

    #[error("cost `{name}` must be finite and non-negative, got {value}")]
    BadCost { name: &'static str, value: f64 },

    #[error("priority assumption violated: c_lost1={c_lost1} <= c_lost2={c_lost2}")]
    PriorityViolation { c_lost1: f64, c_lost2: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("decision entries must be 0 or 1, found {value} at position {position}")]
    BadDecision { position: usize, value: i64 },

    #[error("order is not a permutation of the difference set")]
    InvalidOrder,

    #[error("K={k} exceeds the enumeration cap {cap}")]
    CapExceeded { k: usize, cap: usize },

    #[error("stationary weight at state {state} is not finite")]
    NumericalOverflow { state: usize },

    #[error("linear system is numerically singular (pivot {pivot} at row {row})")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("recurrence does not close: residual {residual:e} exceeds {tolerance:e}")]
    InconsistentTermination { residual: f64, tolerance: f64 },

    #[error("state index {i} outside 1..={n}")]
    IndexOutOfRange { i: usize, n: usize },

    #[error("penalty coefficient vanishes at position {i}; root is {root}")]
    DegenerateRoot { i: usize, root: f64 },

    #[error("policies must differ in exactly one position, they differ in {size}")]
    NotSingleFlip { size: usize },

    #[error("geometric ratio too close to one (alpha={alpha}, beta={beta})")]
    DegenerateRatio { alpha: f64, beta: f64 },

    #[error("threshold theta={theta} outside 1..={max}")]
    ThetaOutOfRange { theta: usize, max: usize },

    #[error("optimal threshold theta={theta} sits on the boundary; a neighbour is undefined")]
    NeighborUndefined { theta: usize },

    #[error("policy improvement cycled without improving")]
    CycleWithoutImprovement,

    #[error("grid is empty")]
    EmptyGrid,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

// Reports carry advisory errors; they serialize as their message.
impl serde::Serialize for Error {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}
