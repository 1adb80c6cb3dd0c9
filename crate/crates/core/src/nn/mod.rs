//! Minimal dense layers with hand-written backward passes.
//!
//! Layers do not build a graph. `forward` returns the output together with
//! whatever the matching `backward` call needs; `backward` accumulates into
//! the layer's parameter gradients and returns the input gradient.

mod activation;
mod attention;
mod dense;
pub mod gradcheck;
mod layer_norm;
mod loss;
mod optim;
mod param;
mod positional;

pub use activation::{relu, relu_backward, sigmoid, sigmoid_backward, Dropout, DropoutMask};
pub use attention::{AttentionCache, MultiHeadAttention};
pub use dense::Dense;
pub use gradcheck::{finite_diff_check, BlockError, GradCheckReport, Objective};
pub use layer_norm::{LayerNorm, LayerNormCache};
pub use loss::mse_loss;
pub use optim::{clip_grad_norm, Adam};
pub use param::Parameter;
pub use positional::positional_encoding;
