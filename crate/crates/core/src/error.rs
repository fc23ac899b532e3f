use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("degenerate rectangle: side lengths {width} x {height}")]
    DegenerateRectangle { width: f64, height: f64 },

    #[error("tiles overlap with positive area without being identical (invalid mesh)")]
    OverlappingTiles,

    #[error("point-charge coupling needs a nonzero distance; self terms go through the double integral")]
    ZeroDistance,

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("conductor {conductor} is assigned both {first} V and {second} V")]
    ConflictingVoltage {
        conductor: u32,
        first: f64,
        second: f64,
    },

    #[error(
        "capacitance extraction supports one or two conductors, found {found}; \
         full capacitance-matrix extraction is not supported"
    )]
    ConductorCount { found: usize },

    #[error("two-conductor capacitance needs distinct voltages, both conductors are at {0} V")]
    EqualVoltages(f64),

    #[error(
        "quadrature did not converge within {levels} refinement levels \
         (best estimate {best}, last difference {difference})"
    )]
    NonConvergence {
        levels: usize,
        best: f64,
        difference: f64,
    },

    #[error("pair touches or overlaps (gap {gap} m); the integrand is singular, use the Monte-Carlo oracle")]
    TouchingPair { gap: f64 },

    #[error("invalid oracle request: {0}")]
    InvalidOracle(String),

    #[error("dense {n}x{n} matrix needs {required} bytes, above the memory cap of {cap} bytes")]
    MemoryCap { n: usize, required: u64, cap: u64 },

    #[error("coupling matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("coupling matrix is singular or ill-conditioned (condition estimate {estimate:.3e})")]
    IllConditioned { estimate: f64 },

    #[error("solve residual {residual:.3e} exceeds the accepted bound")]
    Residual { residual: f64 },

    #[error("matrix has {matrix} rows but the mesh has {mesh} tiles")]
    SizeMismatch { matrix: usize, mesh: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// True for failures of the numerical pipeline (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::IllConditioned { .. }
                | Error::Residual { .. }
                | Error::MemoryCap { .. }
        )
    }
}
