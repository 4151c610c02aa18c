use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("element {element} does not belong to group {group}")]
    KindMismatch { group: String, element: String },

    #[error("generator index {index} out of range for {group} ({count} generators)")]
    GeneratorOutOfRange {
        group: String,
        index: usize,
        count: usize,
    },

    #[error("parse error in {what}: {message}")]
    Parse { what: &'static str, message: String },

    #[error("invalid group descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("descriptor mismatch: expected {expected}, found {found}")]
    DescriptorMismatch { expected: String, found: String },

    #[error("homomorphism table violates a defining relation: {0}")]
    RelationViolated(String),

    #[error("resource budget exceeded: {what} needs more than {budget} elements")]
    BudgetExceeded { what: String, budget: usize },

    #[error("integer overflow while {0}")]
    Overflow(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal validation failure: {0}")]
    Validation(String),
}

impl Error {
    pub(crate) fn parse(what: &'static str, message: impl Into<String>) -> Self {
        Error::Parse {
            what,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
