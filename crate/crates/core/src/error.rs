use nalgebra::DMatrix;
use thiserror::Error;

/// Errors raised anywhere in the sampling stack.
#[derive(Debug, Error)]
pub enum MnpError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("matrix is not symmetric positive definite ({reason}): {matrix}")]
    NotPositiveDefinite { reason: String, matrix: DMatrix<f64> },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("degenerate tie while classifying latent vector {values:?}")]
    DegenerateTie { values: Vec<f64> },

    #[error("sampler stuck after {attempts} attempts: {context}")]
    SamplerStuck { attempts: u64, context: String },

    #[error(
        "constrained covariance draw exceeded {max_rejections} rejections at iteration {iteration} \
         (mean rejections per earlier iteration: {mean_rejections:.2})"
    )]
    StuckChain {
        iteration: usize,
        max_rejections: u64,
        mean_rejections: f64,
    },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<MnpError>,
    },

    #[error("degenerate series '{label}': {reason}")]
    DegenerateSeries { label: String, reason: String },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("data error at line {line}: {message}")]
    Data { line: usize, message: String },

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl MnpError {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            MnpError::Config { .. } | MnpError::Argument(_) => 2,
            MnpError::Data { .. } | MnpError::Schema { .. } | MnpError::Io { .. } => 3,
            MnpError::AtIteration { source, .. } => source.exit_code(),
            _ => 4,
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> MnpError {
        match self {
            e @ (MnpError::StuckChain { .. } | MnpError::AtIteration { .. }) => e,
            other => MnpError::AtIteration {
                iteration,
                source: Box::new(other),
            },
        }
    }

    #[cfg(feature = "cli")]
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> MnpError {
        MnpError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = MnpError> = std::result::Result<T, E>;
