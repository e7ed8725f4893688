use thiserror::Error;

use crate::copula::FamilyId;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad parameters, dimensions or arguments supplied by the caller.
    Invalid,
    /// A numerical routine failed to reach its tolerance.
    Numerical,
    /// A statistical procedure had nothing to work with.
    Statistical,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("infinite generator value: {family} generator diverges at t = {t}")]
    InfiniteGenerator { family: FamilyId, t: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error(
        "Ali-Mikhail-Haq is bivariate only (got d = {0}); the family does not admit a genuine \
         Archimedean extension beyond two dimensions"
    )]
    BivariateOnly(usize),

    #[error("kendall tau {tau} is not attainable for {family}; attainable range is {range}")]
    TauRange {
        family: FamilyId,
        tau: f64,
        range: String,
    },

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions: estimate {estimate:e}, \
         error bound {abs_error:e}"
    )]
    Quadrature {
        estimate: f64,
        abs_error: f64,
        subdivisions: usize,
    },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error(
        "empty level-set neighborhood: no observation has |C(U) - {alpha}| <= {h} among {n} rows; \
         increase h or n"
    )]
    EmptyLevelSet { alpha: f64, h: f64, n: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("all {replications} replications had empty level-set neighborhoods")]
    StudyFailed { replications: usize },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Quadrature { .. } | Error::RootFinding(_) => ErrorKind::Numerical,
            Error::EmptyLevelSet { .. } | Error::StudyFailed { .. } | Error::Degenerate(_) => {
                ErrorKind::Statistical
            }
            _ => ErrorKind::Invalid,
        }
    }

    pub(crate) fn io(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
