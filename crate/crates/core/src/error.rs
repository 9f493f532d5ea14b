use alloc::string::String;
use core::fmt;

use crate::vector::DocId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two vectors (or a vector and an index) disagree on dimension.
    DimensionMismatch { expected: usize, found: usize },
    /// A vector has no features at all.
    EmptyVector { row: Option<DocId> },
    /// A vector whose L2 norm is zero cannot be normalized.
    ZeroVector { row: Option<DocId> },
    /// NaN or infinite feature value.
    NonFinite { row: Option<DocId>, feature: usize },
    /// Malformed or out-of-range encoding configuration.
    InvalidEncoding(String),
    InvalidFilter(String),
    InvalidParams(String),
    DuplicateDocument(DocId),
    /// Raw index parts that violate the postings invariants.
    InconsistentIndex(String),
    /// A feature token that does not follow the token grammar.
    MalformedToken(String),
}

struct Row(Option<DocId>);

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(id) => write!(f, " (row {id})"),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::EmptyVector { row } => write!(f, "empty vector{}", Row(*row)),
            Error::ZeroVector { row } => write!(f, "zero vector{}", Row(*row)),
            Error::NonFinite { row, feature } => {
                write!(f, "non-finite value at feature {feature}{}", Row(*row))
            }
            Error::InvalidEncoding(msg) => write!(f, "invalid encoding: {msg}"),
            Error::InvalidFilter(msg) => write!(f, "invalid filter: {msg}"),
            Error::InvalidParams(msg) => write!(f, "invalid search parameters: {msg}"),
            Error::DuplicateDocument(id) => write!(f, "duplicate document {id}"),
            Error::InconsistentIndex(msg) => write!(f, "inconsistent index: {msg}"),
            Error::MalformedToken(tok) => write!(f, "malformed feature token {tok:?}"),
        }
    }
}

impl core::error::Error for Error {}
