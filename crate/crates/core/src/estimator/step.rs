use rand::Rng;

use crate::error::{Error, Result};
use crate::network::ParamVector;
use crate::numerics::{axpy, fill_gaussian};

/// `W − η·grad + √(2ησ²)·Z` with `Z` standard normal per coordinate.
pub fn noisy_gd_step<R: Rng + ?Sized>(
    w: &ParamVector,
    grad: &ParamVector,
    eta: f64,
    sigma2: f64,
    rng: &mut R,
) -> Result<ParamVector> {
    let mut next = w.clone();
    let mut noise = Vec::new();
    step_in_place(&mut next, grad, eta, sigma2, rng, &mut noise)?;
    Ok(next)
}

/// In-place step reusing `noise` as scratch space.
pub(crate) fn step_in_place<R: Rng + ?Sized>(
    w: &mut ParamVector,
    grad: &ParamVector,
    eta: f64,
    sigma2: f64,
    rng: &mut R,
    noise: &mut Vec<f64>,
) -> Result<()> {
    if !grad.is_finite() {
        return Err(Error::NonFinite("gradient"));
    }
    if !(eta >= 0.0 && sigma2 >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step needs eta, sigma2 >= 0 (got {eta}, {sigma2})"
        )));
    }
    w.add_scaled(-eta, grad)?;
    let std = (2.0 * eta * sigma2).sqrt();
    if std > 0.0 {
        noise.resize(w.len(), 0.0);
        fill_gaussian(rng, noise, 1.0);
        axpy(std, noise, w.as_mut_slice());
    }
    Ok(())
}
