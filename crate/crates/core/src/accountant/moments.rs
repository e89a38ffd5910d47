//! Second moments of the network at Gaussian initialization.

use super::check_nonneg;
use crate::error::{Error, Result};
use crate::network::{InitScheme, NetArch};

fn check_betas(arch: &NetArch, betas: &[f64]) -> Result<()> {
    if betas.len() != arch.depth() {
        return Err(Error::DimensionMismatch {
            what: "layer variances",
            expected: arch.depth(),
            found: betas.len(),
        });
    }
    betas.iter().try_for_each(|b| check_nonneg("layer variance", *b))
}

/// `∏_{i<L} β_i m_i / 2`, the per-layer growth of `E‖h_i‖²`.
fn hidden_growth(arch: &NetArch, betas: &[f64], skip: Option<usize>) -> f64 {
    let m = arch.widths();
    (1..arch.depth())
        .filter(|&i| Some(i) != skip)
        .map(|i| betas[i - 1] * m[i] as f64 / 2.0)
        .product()
}

/// `E‖∂f/∂W‖²_F` at initialization for an input of squared norm `x_sqnorm`:
/// `‖x‖²·o·∏_{i<L}(β_i m_i/2)·Σ_l β_L/β_l`.
///
/// Evaluated without dividing by any `β_l`, so zero variances are allowed.
pub fn expected_grad_norm_init(arch: &NetArch, betas: &[f64], x_sqnorm: f64) -> Result<f64> {
    check_betas(arch, betas)?;
    check_nonneg("squared input norm", x_sqnorm)?;
    let depth = arch.depth();
    let m = arch.widths();
    let beta_last = betas[depth - 1];
    // l = L contributes the full product; l < L swaps the factor β_l m_l/2 for β_L m_l/2.
    let mut sum = hidden_growth(arch, betas, None);
    for (l, &width) in m.iter().enumerate().take(depth).skip(1) {
        sum += beta_last * width as f64 / 2.0 * hidden_growth(arch, betas, Some(l));
    }
    Ok(x_sqnorm * arch.output_dim() as f64 * sum)
}

/// `E‖f(x)‖²` at initialization: `o·β_L·∏_{i<L}(β_i m_i/2)·‖x‖²`.
pub fn expected_output_sqnorm_init(arch: &NetArch, betas: &[f64], x_sqnorm: f64) -> Result<f64> {
    check_betas(arch, betas)?;
    check_nonneg("squared input norm", x_sqnorm)?;
    Ok(arch.output_dim() as f64 * betas[arch.depth() - 1] * hidden_growth(arch, betas, None) * x_sqnorm)
}

/// Gradient-norm constant `B = d·o·∏_{i<L}(β_i m_i/2)·Σ_l β_L/β_l`, the
/// expected squared gradient norm at initialization for `‖x‖² = d`.
pub fn gradient_norm_constant(arch: &NetArch, betas: &[f64]) -> Result<f64> {
    expected_grad_norm_init(arch, betas, arch.input_dim() as f64)
}

/// `B` for a named scheme and uniform hidden width `width`, in the simplified
/// closed form of each scheme. `None` for custom schemes.
pub fn gradient_norm_constant_closed_form(
    scheme: &InitScheme,
    input_dim: usize,
    width: usize,
    depth: usize,
    outputs: usize,
) -> Option<f64> {
    let (d, m, l, o) = (input_dim as f64, width as f64, depth as f64, outputs as f64);
    match scheme {
        InitScheme::LeCun => Some(o * m * (l - 1.0 + d / m) / 2f64.powf(l - 1.0)),
        InitScheme::He => Some(o * m * (l - 1.0 + d / m)),
        InitScheme::Ntk => Some(d * m * ((l - 1.0) / 2.0 + o / m)),
        InitScheme::Xavier => {
            Some(o * d * (l - 1.0 + (d + o) / (2.0 * m)) / (2f64.powf(l - 3.0) * (1.0 + d / m) * (1.0 + o / m)))
        }
        InitScheme::Custom(_) => None,
    }
}

/// Order-of-magnitude bound on the squared lazy-training distance:
/// `max{1/(d·β_L·∏_{i<L} β_i m_i), 1}·n / Σ_l β_l⁻¹` (logarithmic factors
/// omitted). Single-output networks only.
pub fn lazy_r_bound(arch: &NetArch, betas: &[f64], n: usize) -> Result<f64> {
    check_betas(arch, betas)?;
    if arch.output_dim() != 1 {
        return Err(Error::Unsupported(format!(
            "lazy-training bound needs a single output, got {}",
            arch.output_dim()
        )));
    }
    if betas.contains(&0.0) {
        return Err(Error::InvalidParameter(
            "lazy-training bound needs positive variances".into(),
        ));
    }
    let m = arch.widths();
    let depth = arch.depth();
    let prod: f64 = (1..depth).map(|i| betas[i - 1] * m[i] as f64).product();
    let scale = (1.0 / (arch.input_dim() as f64 * betas[depth - 1] * prod)).max(1.0);
    let inv_sum: f64 = betas.iter().map(|b| 1.0 / b).sum();
    Ok(scale * n as f64 / inv_sum)
}
