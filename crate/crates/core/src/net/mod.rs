//! The convolution/attention classifier and its checkpoint format.

pub mod blocks;
pub mod checkpoint;
pub mod config;
pub mod layers;
pub mod model;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError, Provenance};
pub use config::{ConfigError, LayerSpec, ModelConfig, StageShape, StemConfig};
pub use layers::{Fwd, Mode};
pub use model::{Block, Model};
