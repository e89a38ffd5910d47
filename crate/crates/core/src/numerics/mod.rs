//! Dense linear algebra and random sampling kernels.

mod diff;
mod eigen;
mod matrix;
mod rng;

pub use diff::finite_diff_gradient;
pub use eigen::{psd_spectrum, solve_psd, Spectrum, SymmetricEigen, DEFAULT_RANK_TOL};
pub use matrix::{axpy, dot, norm_sq, Matrix};
pub(crate) use matrix::{gemm, View};
pub use rng::{fill_gaussian, gaussian_matrix, RngStream};
