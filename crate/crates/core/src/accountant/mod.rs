//! Closed-form KL-privacy calculators.

mod drift;
mod moments;
mod schedule;

pub use drift::{dnn_drift_bound, BoundReport, DnnBoundInputs, DriftTerms, MomentSource, EXP_REGIME_LIMIT};
pub use moments::{
    expected_grad_norm_init, expected_output_sqnorm_init, gradient_norm_constant, gradient_norm_constant_closed_form,
    lazy_r_bound,
};
pub use schedule::{kl_bound_linearized, kl_to_dp_delta, tradeoff_schedule, Tradeoff};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Constant in the per-step KL term `η‖Δg‖²/(k·σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum KlConvention {
    /// `k = 2`, the constant used throughout the published bounds.
    #[default]
    PaperHalfSigma2,
    /// `k = 4`, the exact KL between the two Gaussian step distributions.
    ExactGaussianQuarterSigma2,
}

impl KlConvention {
    /// The `k` above.
    pub fn denominator(&self) -> f64 {
        match self {
            KlConvention::PaperHalfSigma2 => 2.0,
            KlConvention::ExactGaussianQuarterSigma2 => 4.0,
        }
    }

    /// KL contributed by one step of size `eta` with squared gradient
    /// difference `diff_sq`.
    pub fn step_kl(&self, eta: f64, diff_sq: f64, sigma2: f64) -> f64 {
        eta * diff_sq / (self.denominator() * sigma2)
    }
}

impl fmt::Display for KlConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KlConvention::PaperHalfSigma2 => "paper",
            KlConvention::ExactGaussianQuarterSigma2 => "exact",
        })
    }
}

impl FromStr for KlConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" => Ok(KlConvention::PaperHalfSigma2),
            "exact" => Ok(KlConvention::ExactGaussianQuarterSigma2),
            _ => Err(Error::InvalidParameter(format!("unknown KL constant '{s}'"))),
        }
    }
}

pub(crate) fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite and non-negative, got {v}"
        )))
    }
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite and positive, got {v}"
        )))
    }
}
