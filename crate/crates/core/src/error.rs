use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{name} = {value} is outside [{min}, {max}]")]
    Domain {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("operator is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("{} parse error(s):\n{}", .0.len(), ParseIssue::join(.0))]
    Parse(Vec<ParseIssue>),
}

impl Error {
    pub(crate) fn check_range(name: &'static str, value: f64, min: f64, max: f64) -> Result<()> {
        if value.is_finite() && (min..=max).contains(&value) {
            Ok(())
        } else {
            Err(Error::Domain {
                name,
                value,
                min,
                max,
            })
        }
    }
}

/// One problem found while reading an input file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseIssue {
    /// 1-based line number, when the problem is tied to a line.
    pub line: Option<usize>,
    pub message: String,
}

impl ParseIssue {
    pub fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    pub fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }

    fn join(issues: &[ParseIssue]) -> String {
        issues
            .iter()
            .map(|i| format!("  {i}"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl fmt::Display for ParseIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}
