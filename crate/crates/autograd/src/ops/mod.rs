pub(crate) mod activation;
pub(crate) mod conv;
pub(crate) mod linear;
pub(crate) mod norm;
pub(crate) mod pool;
pub(crate) mod shape;
pub(crate) mod softmax;

pub use norm::BatchStats;
pub use softmax::softmax_last_axis;
