use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive definite even with ridge {ridge:e}")]
    NotPositiveDefinite { ridge: f64 },

    #[error("singular spline design: {0}")]
    SingularDesign(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("column `{0}` is constant and cannot be standardized")]
    ConstantColumn(String),

    #[error("radius is zero: all standardized predictor rows vanish")]
    ZeroRadius,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("singular Hessian (eigenvalues {eigenvalues:?})")]
    SingularHessian { eigenvalues: Vec<f64> },

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, with stage labels stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
