//! Dense tensors, a tape-based reverse-mode differentiator and the handful of
//! operators a 3D convolutional attention network needs: `conv3d`, batch and
//! layer norm, relu/sigmoid/silu, global max pooling, linear layers, batched
//! matrix products, softmax and cross-entropy. Adam with decoupled weight
//! decay and a finite-difference gradient checker complete the kit.
//!
//! Tensors are generic over [`Scalar`] (`f32` or `f64`). All kernels run on
//! one thread in a fixed order, so identical inputs give bitwise-identical
//! outputs.

pub mod error;
pub mod gradcheck;
mod graph;
pub mod init;
mod ops;
pub mod optim;
pub mod params;
mod scalar;
mod tensor;

pub use error::{Result, TensorError};
pub use graph::{Activation, Gradients, Graph, Var};
pub use ops::{softmax_last_axis, BatchStats};
pub use optim::{Adam, AdamConfig, AdamState};
pub use params::{Binder, ParamId, ParamStore, Parameter};
pub use scalar::{c, DType, Scalar};
pub use tensor::Tensor;
