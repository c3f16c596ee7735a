//! Small residual CNN with a multi-node quantile head, forward and backward
//! passes written out by hand.

pub mod layers;
mod model;
mod quantiles;
mod scalar;
mod tensor;

pub use model::{param_layout, Gradients, Mode, ModelConfig, ModelState, Network, Param, SampleTape, Tape};
pub use quantiles::QuantileSpec;
pub use scalar::Scalar;
pub use tensor::Tensor;
