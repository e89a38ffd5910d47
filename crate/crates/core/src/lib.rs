//! KL-privacy accounting for noisy gradient descent on ReLU networks.
//!
//! The crate covers both sides of the analysis: closed-form bounds on the KL
//! divergence between training runs on neighboring datasets
//! ([`accountant`]), and empirical estimates obtained by running noisy
//! gradient descent and accumulating per-step gradient differences
//! ([`estimator`]). Networks are bias-free fully connected ReLU models
//! ([`network`]) or their first-order expansion around initialization
//! ([`linearized`]).

pub mod accountant;
pub mod data;
pub mod error;
pub mod estimator;
pub mod linearized;
pub mod network;
pub mod numerics;

pub use data::{Dataset, Neighbor, NeighborNotion, NeighborSet};
pub use error::{Error, Result};
pub use network::{InitScheme, Label, LossKind, NetArch, ParamVector};
pub use numerics::{Matrix, RngStream};

/// Library version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
