use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("density unattainable: target {target} (closest achievable {achieved:.6})")]
    DensityUnattainable { target: f64, achieved: f64 },

    #[error("empty structure: the voxel grid has no solid voxels")]
    EmptyStructure,

    #[error("unmapped material id {0}")]
    UnmappedMaterial(u8),

    #[error("singular preconditioner: zero diagonal at dof {dof}")]
    SingularPreconditioner { dof: usize },

    #[error("degenerate normal stiffness: C33 = {0}")]
    DegenerateNormalStiffness(f64),

    #[error("solver did not converge: relative residuals {residuals:?}")]
    NotConverged { residuals: Vec<f64> },

    #[error("malformed voxel file: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
