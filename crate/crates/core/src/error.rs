use std::path::PathBuf;

use thiserror::Error;

use crate::analysis::StatsError;
use crate::features::FeatureError;
use crate::net::checkpoint::CheckpointError;
use crate::net::ConfigError;
use crate::predictions::PredictionsError;
use crate::structure::StructureError;
use crate::train::{DatasetError, MetricsError, TrainError};
use crate::voxel::{EmogError, FrameError};
pub use emocpd_autograd::TensorError;

/// Any failure surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Emog(#[from] EmogError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Predictions(#[from] PredictionsError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
