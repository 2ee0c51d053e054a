use alloc::boxed::Box;
use alloc::string::String;

use crate::family::CopulaFamily;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{family}: theta = {theta} is outside the parameter support {support}")]
    ParameterDomain {
        family: CopulaFamily,
        theta: f64,
        support: &'static str,
    },

    #[error("copula arguments must lie strictly inside (0, 1), got u = {u}, v = {v}")]
    UnitDomain { u: f64, v: f64 },

    #[error("{family}: rho = {rho} is not attainable (attainable range {lo} .. {hi})")]
    RhoOutOfRange {
        family: CopulaFamily,
        rho: f64,
        lo: f64,
        hi: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("variable `{variable}` has zero variance")]
    DegenerateVariance { variable: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("no candidate family can represent rho = {rho}")]
    Selection { rho: f64 },

    #[error("metric is undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("edge ({i}, {j}): {source}")]
    Edge {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("curve point rho = {rho}: {source}")]
    CurvePoint {
        rho: f64,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse error classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Schema,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::ParameterDomain { .. }
            | Error::RhoOutOfRange { .. }
            | Error::Config(_)
            | Error::Selection { .. } => ErrorKind::Config,
            Error::UnitDomain { .. }
            | Error::Data(_)
            | Error::DegenerateVariance { .. }
            | Error::UndefinedMetric(_) => ErrorKind::Data,
            Error::Schema(_) => ErrorKind::Schema,
            Error::Numerical(_) => ErrorKind::Numerical,
            Error::Edge { source, .. } | Error::CurvePoint { source, .. } => source.kind(),
        }
    }

    pub(crate) fn at_edge(self, i: usize, j: usize) -> Error {
        Error::Edge {
            i,
            j,
            source: Box::new(self),
        }
    }
}
