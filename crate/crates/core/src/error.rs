use thiserror::Error;

use crate::bidiag::PartialSvd;
use crate::newton::NewtonReport;

/// Errors raised anywhere in the library.
///
/// The `Display` form starts with the variant name so command-line
/// diagnostics always carry it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),

    #[error("RankDeficient: stacked matrix has sigma_min/sigma_max = {ratio:.3e} (tolerance {tol:.1e})")]
    RankDeficient { ratio: f64, tol: f64 },

    #[error("NotPositiveDefinite: lambda_min/lambda_max of A^H A + B^H B = {ratio:.3e} (tolerance {tol:.1e})")]
    NotPositiveDefinite { ratio: f64, tol: f64 },

    #[error("IndexOutOfRange: filter index {index} outside {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("InvalidIndex: index {index} outside 1..={n}")]
    InvalidIndex { index: usize, n: usize },

    #[error("InvalidFilter: {0}")]
    InvalidFilter(String),

    #[error(
        "NotConverged (grassmann newton): gradient norm {:.3e} after {} outer iterations",
        .0.grad_norm, .0.outer_iters
    )]
    NewtonNotConverged(Box<NewtonReport>),

    #[error("NotConverged (partial svd): {} of {} triplets converged", .0.converged_count(), .0.values.len())]
    SvdNotConverged(Box<PartialSvd>),

    #[error("LineSearchStalled: no acceptable step after {halvings} backtracking halvings")]
    LineSearchStalled { halvings: usize },

    #[error("RankDeficientStep: retraction input has sigma_min/sigma_max = {ratio:.3e}")]
    RankDeficientStep { ratio: f64 },

    #[error("InconsistentSolves: trace difference {value:.3e} at index {index} is negative beyond round-off")]
    InconsistentSolves { index: usize, value: f64 },

    #[error("InvalidDims: {0}")]
    InvalidDims(String),

    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),

    #[error("MissingIndices: computed pairs do not cover index {0}")]
    MissingIndices(usize),

    #[error("ParseError: {path}: row {row}, column {col}: {msg}")]
    Parse { path: String, row: usize, col: usize, msg: String },

    #[error("NonFinite: {path}: row {row}, column {col}")]
    NonFinite { path: String, row: usize, col: usize },

    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),

    #[error("IoError: json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::NewtonNotConverged(_)
                | Error::SvdNotConverged(_)
                | Error::LineSearchStalled { .. }
                | Error::RankDeficientStep { .. }
                | Error::InconsistentSolves { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
