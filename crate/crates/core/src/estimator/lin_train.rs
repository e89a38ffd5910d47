use crate::error::Result;
use crate::linearized::{NtkFeatures, RunningAverage};
use crate::network::{Label, LossKind, ParamVector};
use crate::numerics::RngStream;

use super::config::DIVERGENCE_THRESHOLD;
use super::step::step_in_place;

/// Outcome of noisy gradient descent on the linearized model.
#[derive(Debug, Clone, PartialEq)]
pub struct LinTrainReport {
    /// Mean of the iterates `W_0, …, W_{K-1}`.
    pub average: ParamVector,
    pub last: ParamVector,
    pub average_loss: f64,
    pub last_loss: f64,
    pub diverged: bool,
}

/// Runs `steps` noisy gradient steps on the linearized empirical loss,
/// starting from the base point of `features`.
pub fn train_linearized(
    features: &NtkFeatures,
    labels: &[Label],
    loss: LossKind,
    eta: f64,
    steps: usize,
    sigma2: f64,
    stream: &RngStream,
) -> Result<LinTrainReport> {
    let mut rng = stream.generator();
    let mut w = features.base_point().clone();
    let mut avg = RunningAverage::new();
    let mut noise = Vec::new();
    let mut diverged = false;
    for _ in 0..steps {
        avg.push(&w)?;
        let grad = features.lin_empirical_grad(&w, labels, loss)?;
        let norm = grad.norm_sq().sqrt();
        if norm.is_nan() || norm > DIVERGENCE_THRESHOLD {
            diverged = true;
            break;
        }
        step_in_place(&mut w, &grad, eta, sigma2, &mut rng, &mut noise)?;
    }
    let average = if avg.count() == 0 { w.clone() } else { avg.mean()? };
    Ok(LinTrainReport {
        average_loss: features.lin_loss(&average, labels, loss)?,
        last_loss: features.lin_loss(&w, labels, loss)?,
        average,
        last: w,
        diverged,
    })
}
