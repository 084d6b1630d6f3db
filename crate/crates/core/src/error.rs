use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree out of range: {0}")]
    DegreeOutOfRange(usize),
    #[error("input form is not symmetric (defect {0:e})")]
    Asymmetric(f64),
    #[error("not an immersion at point {point:?} (det g = {det:e})")]
    NotImmersion { point: [f64; 4], det: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("inversion singularity at point {0:?}")]
    InversionSingularity([f64; 4]),
    #[error("point or radius outside domain: {0}")]
    OutsideDomain(String),
    #[error("quadrature did not converge: coarse {coarse}, fine {fine}")]
    NotConverged { coarse: f64, fine: f64 },
    #[error("singular boundary system (condition estimate {0:e})")]
    Singular(f64),
    #[error("non-integrable pairing ({0}, {1}) at an endpoint")]
    NonIntegrable(usize, usize),
    #[error("not graphical at this zeta: {0}")]
    NotGraphical(String),
    #[error("atlas does not cover a closed manifold")]
    AtlasNotClosed,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn at(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
