use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid architecture, geometry, training settings and the like.
    #[error("configuration error: {0}")]
    Config(String),

    /// A value became NaN or infinite during evaluation.
    #[error("numerical failure in {context}{}", param_suffix(*.param_index))]
    NumericalFailure {
        context: String,
        param_index: Option<usize>,
    },

    /// Argument outside the range where an evaluation scheme is accurate.
    #[error("range error: {0}")]
    Range(String),

    #[error("singularity: {0}")]
    Singularity(String),

    /// The two-point problem is (numerically) singular at this frequency.
    #[error(
        "resonance at {frequency} Hz: characteristic denominator {denominator:.3e} below threshold; \
         nearest resonance frequency is {nearest:.6} Hz"
    )]
    Resonance {
        frequency: f64,
        denominator: f64,
        nearest: f64,
    },

    /// Value outside the domain of a physical model (e.g. non-positive area).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("failed to load parameters: field `{field}`: {reason}")]
    Load { field: &'static str, reason: String },

    #[error("incompatible parameter file: format version {found}, expected {expected}")]
    Incompatible { found: u32, expected: u32 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn param_suffix(index: Option<usize>) -> String {
    match index {
        Some(i) => format!(" (parameter {i})"),
        None => String::new(),
    }
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(context: impl Into<String>) -> Self {
        Error::NumericalFailure {
            context: context.into(),
            param_index: None,
        }
    }

    /// True for errors that stem from the numbers rather than from the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure { .. }
                | Error::Range(_)
                | Error::Singularity(_)
                | Error::Resonance { .. }
                | Error::Domain(_)
                | Error::UndefinedMetric(_)
        )
    }
}
