//! Error type shared by every module of the toolkit.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model specification references something that does not exist.
    #[error("specification error: {0}")]
    Specification(String),

    /// Input data violates a contract. `row` is zero-based over data rows.
    #[error("data error at row {row}: {message}")]
    Data { row: usize, message: String },

    /// A CSV input is missing a required column.
    #[error("missing required column `{column}` in {source_name}")]
    MissingColumn { column: String, source_name: String },

    /// A value could not be parsed from a CSV cell.
    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// A configuration file or option is invalid.
    #[error("configuration error: {0}")]
    Config(String),

    /// Raking targets cannot be met by any reweighting of the sample.
    #[error("infeasible margin: variable `{variable}`, category `{category}` has no sample members but a positive target")]
    Infeasible { variable: String, category: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn spec(msg: impl Into<String>) -> Self {
        Error::Specification(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(row: usize, msg: impl Into<String>) -> Self {
        Error::Data {
            row,
            message: msg.into(),
        }
    }
}
