use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} exceeds the configured cap {cap}")]
    CapExceeded {
        what: &'static str,
        value: u128,
        cap: u128,
    },

    #[error("enumeration of {needed} elements exceeds the budget of {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// `[e_i, e_j]` leaves `Span(e_j, ..., e_d)`.
    #[error("basis is not triangular: [e_{i}, e_{j}] has a component below index {j}")]
    NotTriangular { i: usize, j: usize },

    #[error("vector is not primitive in the lattice (content {content})")]
    NotPrimitive { content: String },

    #[error("body is not strictly thick (largest successive minimum {lambda})")]
    NotThick { lambda: String },

    #[error("bracket incompatible with the body: [e_{i}, e_{j}] {detail}")]
    BracketIncompatible { i: usize, j: usize, detail: String },

    #[error("set does not generate the lattice (sublattice index {index})")]
    NotGenerating { index: String },

    /// A stated hypothesis of an operation does not hold for the input. This
    /// is a report about the data, not a fault.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("finiteness probe inconclusive: {0}")]
    Inconclusive(String),

    #[error("internal assertion failed: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors that describe the input failing a mathematical hypothesis rather
    /// than a malformed request or a bug.
    pub fn is_hypothesis_violation(&self) -> bool {
        matches!(
            self,
            Error::Hypothesis(_)
                | Error::NotThick { .. }
                | Error::NotGenerating { .. }
                | Error::BracketIncompatible { .. }
                | Error::NotTriangular { .. }
                | Error::Inconclusive(_)
        )
    }
}
