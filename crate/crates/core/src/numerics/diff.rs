use crate::error::{Error, Result};

/// Central-difference gradient of `f` at `point` with step `h`.
pub fn finite_diff_gradient<F>(mut f: F, point: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if h.is_nan() || h <= 0.0 || h.is_infinite() {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let mut p = point.to_vec();
    let mut grad = Vec::with_capacity(point.len());
    for i in 0..p.len() {
        let x = p[i];
        p[i] = x + h;
        let up = f(&p);
        p[i] = x - h;
        let down = f(&p);
        p[i] = x;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite("finite-difference evaluation"));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}
