//! First-order expansion of the network around its initialization,
//! `f_lin(x; W) = f(x; W_0) + J(x; W_0)·(W − W_0)`.

mod average;
mod features;
mod lazy;

pub use average::{running_average, RunningAverage};
pub use features::{build_features, gram_analysis, GramAnalysis, NtkFeatures};
pub use lazy::{default_ridge, lazy_solution, LazySolution};
