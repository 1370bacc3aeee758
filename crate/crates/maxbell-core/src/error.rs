use core::fmt;

/// Errors reported by constructors and operations.
///
/// Every variant names the violated constraint; numeric payloads carry the
/// offending values so callers can print actionable diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A tree fails a structural invariant (child count, measure signs,
    /// measure sums, root normalization).
    InvalidTree(&'static str),
    /// A simple function does not match the tree it is paired with.
    FunctionMismatch { expected_leaves: usize, got: usize },
    /// A step function fails an invariant (empty, non-positive length,
    /// negative or increasing values).
    InvalidStep(&'static str),
    /// A scalar argument lies outside the domain of the operation.
    OutOfDomain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    /// `beta_lambda` was asked for a level not exceeding the mean of `g`;
    /// the average `(1/t)∫_0^t g` never comes back down to it on `(0,1]`.
    LevelBelowAverage { lambda: f64, mean: f64 },
    /// An operation received an input it is degenerate on (e.g. `φ ≡ 0`).
    DegenerateInput(&'static str),
    /// The inputs select the other case of a two-case construction.
    WrongCase(&'static str),
    /// Exhaustive enumeration refused: instance too large.
    TooLarge {
        what: &'static str,
        max: usize,
        got: usize,
    },
    /// The truncation level leaves too much mass below the last scale.
    TailTooHeavy { tail_mass: f64, limit: f64 },
    /// A functional spec violates the monotonicity/nonnegativity hypotheses.
    InvalidSpec(&'static str),
    /// A computed quantity landed outside its proven range by more than
    /// rounding slack; inputs are inconsistent.
    Inconsistent(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidTree(why) => write!(f, "invalid tree: {why}"),
            Error::FunctionMismatch {
                expected_leaves,
                got,
            } => write!(
                f,
                "function/tree mismatch: tree has {expected_leaves} atoms, function has {got} values"
            ),
            Error::InvalidStep(why) => write!(f, "invalid step function: {why}"),
            Error::OutOfDomain {
                what,
                value,
                lo,
                hi,
            } => write!(f, "{what} = {value} outside [{lo}, {hi}]"),
            Error::LevelBelowAverage { lambda, mean } => write!(
                f,
                "level {lambda} does not exceed the mean {mean}; a level above the average is required"
            ),
            Error::DegenerateInput(why) => write!(f, "degenerate input: {why}"),
            Error::WrongCase(why) => write!(f, "wrong case: {why}"),
            Error::TooLarge { what, max, got } => {
                write!(f, "{what} too large: {got} exceeds the limit {max}")
            }
            Error::TailTooHeavy { tail_mass, limit } => write!(
                f,
                "truncation too shallow: tail mass {tail_mass} exceeds the allowed {limit}"
            ),
            Error::InvalidSpec(why) => write!(f, "invalid functional spec: {why}"),
            Error::Inconsistent(why) => write!(f, "inconsistent inputs: {why}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
