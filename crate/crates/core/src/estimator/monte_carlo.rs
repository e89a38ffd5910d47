use rayon::prelude::*;

use crate::accountant::{expected_grad_norm_init, expected_output_sqnorm_init, gradient_norm_constant};
use crate::error::{Error, Result};
use crate::network::{
    forward, init_betas, output_jacobian, per_example_grad, sample_init, InitScheme, Label, LossKind, NetArch,
    ParamVector,
};
use crate::numerics::{norm_sq, psd_spectrum, Matrix, RngStream};

/// How the Monte Carlo mean relates to its reference value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    /// The reference is the exact expectation.
    Equality,
    /// The reference is an upper bound on the expectation.
    UpperBound,
}

/// Monte Carlo mean against a closed-form reference.
#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub mean: f64,
    /// Sample standard deviation over `√samples`.
    pub stderr: f64,
    pub samples: usize,
    pub reference: f64,
    /// `(mean − reference)/stderr`.
    pub z_score: f64,
    pub kind: ReferenceKind,
}

impl McReport {
    pub fn from_samples(values: &[f64], reference: f64, kind: ReferenceKind) -> Result<Self> {
        let k = values.len();
        if k < 2 {
            return Err(Error::TooFewRecords { needed: 2, found: k });
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        let stderr = (var / k as f64).sqrt();
        let gap = mean - reference;
        let z_score = if stderr > 0.0 {
            gap / stderr
        } else if gap == 0.0 {
            0.0
        } else {
            gap.signum() * f64::INFINITY
        };
        Ok(Self {
            mean,
            stderr,
            samples: k,
            reference,
            z_score,
            kind,
        })
    }

    /// `|z| ≤ z_max` for an exact reference, `z ≤ z_max` for a bound.
    pub fn passes(&self, z_max: f64) -> bool {
        match self.kind {
            ReferenceKind::Equality => self.z_score.abs() <= z_max,
            ReferenceKind::UpperBound => self.z_score <= z_max,
        }
    }
}

fn init_samples<F>(arch: &NetArch, scheme: &InitScheme, samples: usize, stream: &RngStream, f: F) -> Result<Vec<f64>>
where
    F: Fn(&ParamVector) -> Result<f64> + Sync,
{
    let betas = init_betas(scheme, arch)?;
    (0..samples)
        .into_par_iter()
        .map(|s| f(&sample_init(arch, &betas, &stream.child(s as u64))?))
        .collect()
}

/// Mean of `‖∂f(x)/∂W‖²_F` over fresh initializations, against its exact
/// expectation.
pub fn mc_grad_norm_at_init(
    arch: &NetArch,
    scheme: &InitScheme,
    x: &[f64],
    samples: usize,
    stream: &RngStream,
) -> Result<McReport> {
    let betas = init_betas(scheme, arch)?;
    let reference = expected_grad_norm_init(arch, &betas, norm_sq(x))?;
    let values = init_samples(arch, scheme, samples, stream, |w| {
        Ok(output_jacobian(w, x)?.frobenius_sq())
    })?;
    McReport::from_samples(&values, reference, ReferenceKind::Equality)
}

/// Mean of `‖f(x)‖²` over fresh initializations, against its exact
/// expectation.
pub fn mc_output_sqnorm(
    arch: &NetArch,
    scheme: &InitScheme,
    x: &[f64],
    samples: usize,
    stream: &RngStream,
) -> Result<McReport> {
    let betas = init_betas(scheme, arch)?;
    let reference = expected_output_sqnorm_init(arch, &betas, norm_sq(x))?;
    let values = init_samples(arch, scheme, samples, stream, |w| Ok(norm_sq(&forward(w, x)?.output)))?;
    McReport::from_samples(&values, reference, ReferenceKind::Equality)
}

/// Mean of `‖∇ℓ(f(x); y) − ∇ℓ(f(x′); y′)‖²/n²` at initialization (where the
/// network and its linearization share gradients), against the bound `4B/n²`.
pub fn mc_linearized_grad_diff(
    arch: &NetArch,
    scheme: &InitScheme,
    first: (&[f64], Label),
    second: (&[f64], Label),
    n: usize,
    samples: usize,
    stream: &RngStream,
) -> Result<McReport> {
    if arch.output_dim() != 1 {
        return Err(Error::Unsupported(format!(
            "gradient difference bound needs a single output, got {}",
            arch.output_dim()
        )));
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let d = arch.input_dim() as f64;
    for x in [first.0, second.0] {
        if norm_sq(x) > d * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "inputs must satisfy |x|^2 <= d = {d}, got {}",
                norm_sq(x)
            )));
        }
    }
    let betas = init_betas(scheme, arch)?;
    let n2 = (n as f64).powi(2);
    let reference = 4.0 * gradient_norm_constant(arch, &betas)? / n2;
    let loss = LossKind::LogisticSingle;
    let values = init_samples(arch, scheme, samples, stream, |w| {
        let a = per_example_grad(w, first.0, &first.1, loss)?;
        let b = per_example_grad(w, second.0, &second.1, loss)?;
        Ok(a.difference(&b)?.norm_sq() / n2)
    })?;
    McReport::from_samples(&values, reference, ReferenceKind::UpperBound)
}

/// Dimension of the span of the given gradients.
pub fn estimate_rank_mt(samples: &[ParamVector], tol: f64) -> Result<usize> {
    if samples.is_empty() {
        return Err(Error::EmptySequence);
    }
    let rows: Vec<&[f64]> = samples.iter().map(|s| s.as_slice()).collect();
    let stacked = Matrix::from_rows(&rows)?;
    Ok(psd_spectrum(&stacked.gram(), tol)?.rank)
}
