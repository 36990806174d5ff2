use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("weighted shift is not continuous on {space}: {reason}")]
    DiscontinuousShift { space: String, reason: String },
    #[error("fast evaluator supports exactly two weight families, got {0}")]
    UnsupportedArity(usize),
    #[error("horizon {requested} exceeds the bit budget {budget}")]
    HorizonTooLarge { requested: usize, budget: usize },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("construction failed: {0}")]
    ConstructionFailed(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown recipe {name:?}; valid recipes: {valid}")]
    UnknownRecipe { name: String, valid: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
