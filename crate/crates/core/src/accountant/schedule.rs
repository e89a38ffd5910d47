use super::{check_nonneg, check_positive};
use crate::error::{Error, Result};

/// KL bound for training the linearized network for time `T`: `2BT/(n²σ²)`.
pub fn kl_bound_linearized(b: f64, time: f64, n: usize, sigma2: f64) -> Result<f64> {
    check_nonneg("B", b)?;
    check_nonneg("time", time)?;
    check_positive("sigma2", sigma2)?;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let n = n as f64;
    Ok(2.0 * b * time / (n * n * sigma2))
}

/// Noise level and training time minimizing the utility bound
/// `R/(2T) + BT/(εn)` under a KL budget `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tradeoff {
    pub sigma2: f64,
    pub time: f64,
    /// `1/n² + √(2BR/(εn))`.
    pub risk_bound: f64,
}

/// `T = √(εnR/(2B))`, `σ² = 2BT/(εn²)`.
pub fn tradeoff_schedule(b: f64, r: f64, eps: f64, n: usize) -> Result<Tradeoff> {
    check_positive("B", b)?;
    check_positive("R", r)?;
    check_positive("epsilon", eps)?;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let n = n as f64;
    let time = (eps * n * r / (2.0 * b)).sqrt();
    let sigma2 = 2.0 * b * time / (eps * n * n);
    let risk_bound = 1.0 / (n * n) + (2.0 * b * r / (eps * n)).sqrt();
    Ok(Tradeoff {
        sigma2,
        time,
        risk_bound,
    })
}

/// `δ = √(ε/2)`: a KL bound `ε` implies `(0, δ)`-DP by Pinsker's inequality.
pub fn kl_to_dp_delta(eps_kl: f64) -> Result<f64> {
    check_nonneg("KL bound", eps_kl)?;
    Ok((eps_kl / 2.0).sqrt())
}
