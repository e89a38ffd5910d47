//! Empirical side of the analysis: noisy gradient descent, accumulated KL
//! over neighboring datasets, and Monte Carlo checks of the moments at
//! initialization.

mod config;
mod diffs;
mod kl;
mod lin_train;
mod monte_carlo;
mod step;

pub use config::{Model, TrainConfig, DIVERGENCE_THRESHOLD};
pub use diffs::{neighbor_diffs_from_gram, neighbor_grad_diffs};
pub use kl::{run_kl_estimation, KlEstimate, KlTrace};
pub use lin_train::{train_linearized, LinTrainReport};
pub use monte_carlo::{
    estimate_rank_mt, mc_grad_norm_at_init, mc_linearized_grad_diff, mc_output_sqnorm, McReport, ReferenceKind,
};
pub use step::noisy_gd_step;
