//! Bias-free fully connected ReLU networks.
//!
//! Layer `l` (0-based here, `W_{l+1}` in the usual 1-based notation) maps
//! `h_l ∈ R^{m_l}` to `R^{m_{l+1}}`. Hidden layers apply ReLU; the last layer
//! is linear. Weights are flattened layer by layer, each layer row-major, so
//! the gradient block of the last layer is `h_{L-1}` repeated once per output
//! row.

mod arch;
mod batch;
mod init;
mod loss;
mod pass;

pub use arch::{NetArch, ParamVector};
pub use batch::{backward_batch, forward_batch, BatchPass, FactoredGrads};
pub use init::{init_betas, sample_init, InitScheme};
pub use loss::{Label, LossKind};
pub use pass::{backprop, empirical_grad, forward, output_jacobian, per_example_grad, ForwardPass};
