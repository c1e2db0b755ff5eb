use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("intersection form is not negative definite: leading principal minor of order {order} of -I is {value}")]
    NotNegativeDefinite { order: usize, value: String },
    #[error("graph is not in QHS3 mode: {0}")]
    NotQhs3(String),
    #[error("invalid Hilbert data at {point}: {reason}")]
    InvalidData { point: String, reason: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn data(point: &[i64], reason: impl Into<String>) -> Self {
        Error::InvalidData { point: format_point(point), reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub fn format_point(l: &[i64]) -> String {
    let parts: Vec<String> = l.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}
