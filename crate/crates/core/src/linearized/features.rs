use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::network::{forward, output_jacobian, Label, LossKind, NetArch, ParamVector};
use crate::numerics::{psd_spectrum, Matrix};

/// Jacobians and outputs of a network at its base point, for a fixed set of
/// inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct NtkFeatures {
    w0: ParamVector,
    /// `n × o`.
    f0: Matrix,
    /// `(n·o) × P`, row `i·o + j` is `∂f_j(x_i)/∂W`.
    jac: Matrix,
}

/// Evaluates `f(x_i; W_0)` and its Jacobian for every record.
pub fn build_features(w0: &ParamVector, data: &Dataset) -> Result<NtkFeatures> {
    let arch = w0.arch();
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.dim() != arch.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "input dimension",
            expected: arch.input_dim(),
            found: data.dim(),
        });
    }
    let o = arch.output_dim();
    let per_example: Vec<(Vec<f64>, Matrix)> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let x = data.input(i);
            Ok((forward(w0, x)?.output, output_jacobian(w0, x)?))
        })
        .collect::<Result<_>>()?;
    let n = data.len();
    let mut f0 = Matrix::zeros(n, o);
    let mut jac = Matrix::zeros(n * o, w0.len());
    for (i, (f, j)) in per_example.into_iter().enumerate() {
        f0.row_mut(i).copy_from_slice(&f);
        for a in 0..o {
            jac.row_mut(i * o + a).copy_from_slice(j.row(a));
        }
    }
    NtkFeatures::new(w0.clone(), f0, jac)
}

impl NtkFeatures {
    /// Assembles features from explicit parts.
    pub fn new(w0: ParamVector, f0: Matrix, jac: Matrix) -> Result<Self> {
        let o = w0.arch().output_dim();
        let checks = [
            ("initial output columns", o, f0.cols()),
            ("Jacobian rows", f0.rows() * o, jac.rows()),
            ("Jacobian columns", w0.len(), jac.cols()),
        ];
        for (what, expected, found) in checks {
            if expected != found {
                return Err(Error::DimensionMismatch { what, expected, found });
            }
        }
        Ok(Self { w0, f0, jac })
    }

    pub fn arch(&self) -> &NetArch {
        self.w0.arch()
    }

    pub fn base_point(&self) -> &ParamVector {
        &self.w0
    }

    pub fn initial_outputs(&self) -> &Matrix {
        &self.f0
    }

    pub fn jacobian(&self) -> &Matrix {
        &self.jac
    }

    /// Number of examples.
    pub fn len(&self) -> usize {
        self.f0.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.f0.rows() == 0
    }

    pub fn outputs(&self) -> usize {
        self.f0.cols()
    }

    /// `(n·o) × (n·o)` Gram matrix of the Jacobian rows.
    pub fn jacobian_gram(&self) -> Matrix {
        self.jac.gram()
    }

    /// Predictions `f_0 + M_0·(W − W_0)` as an `n × o` matrix.
    pub fn lin_forward(&self, w: &ParamVector) -> Result<Matrix> {
        let delta = w.difference(&self.w0)?;
        let step = self.jac.matvec(delta.as_slice())?;
        let mut out = self.f0.clone();
        out.as_mut_slice().iter_mut().zip(&step).for_each(|(o, s)| *o += s);
        Ok(out)
    }

    /// `M_0ᵀ·coeffs` for a coefficient per Jacobian row, as a parameter vector.
    pub fn combine_rows(&self, coeffs: &[f64]) -> Result<ParamVector> {
        let flat = self.jac.t_matvec(coeffs)?;
        ParamVector::from_flat(self.arch(), flat)
    }

    /// Loss derivatives with respect to the predictions, flattened
    /// example-major.
    pub fn residuals(&self, preds: &Matrix, labels: &[Label], loss: LossKind) -> Result<Vec<f64>> {
        let o = self.outputs();
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch {
                what: "label count",
                expected: self.len(),
                found: labels.len(),
            });
        }
        loss.check_outputs(o)?;
        let mut r = vec![0.0; self.len() * o];
        for (i, y) in labels.iter().enumerate() {
            loss.check_label(y, o)?;
            loss.residual(preds.row(i), y, &mut r[i * o..(i + 1) * o]);
        }
        Ok(r)
    }

    /// Gradient of `(1/n)·Σ ℓ(f_lin(x_i; W); y_i)`.
    pub fn lin_empirical_grad(&self, w: &ParamVector, labels: &[Label], loss: LossKind) -> Result<ParamVector> {
        if self.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let preds = self.lin_forward(w)?;
        let mut r = self.residuals(&preds, labels, loss)?;
        let scale = 1.0 / self.len() as f64;
        r.iter_mut().for_each(|v| *v *= scale);
        self.combine_rows(&r)
    }

    /// `(1/n)·Σ ℓ(f_lin(x_i; W); y_i)`.
    pub fn lin_loss(&self, w: &ParamVector, labels: &[Label], loss: LossKind) -> Result<f64> {
        let preds = self.lin_forward(w)?;
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch {
                what: "label count",
                expected: self.len(),
                found: labels.len(),
            });
        }
        let total: f64 = labels
            .iter()
            .enumerate()
            .map(|(i, y)| loss.value(preds.row(i), y))
            .sum();
        Ok(total / self.len() as f64)
    }
}

/// Spectrum of the single-output Gram matrix `K = M_0·M_0ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramAnalysis {
    pub k: Matrix,
    pub eigenvalues: Vec<f64>,
    /// Smallest eigenvalue above the rank threshold.
    pub lambda0: f64,
    pub rank: usize,
}

pub fn gram_analysis(features: &NtkFeatures, tol: f64) -> Result<GramAnalysis> {
    if features.outputs() != 1 {
        return Err(Error::Unsupported(format!(
            "Gram analysis is single-output only, got {} outputs",
            features.outputs()
        )));
    }
    let k = features.jacobian_gram();
    let spec = psd_spectrum(&k, tol)?;
    Ok(GramAnalysis {
        k,
        eigenvalues: spec.eigenvalues,
        lambda0: spec.lambda_min_nonzero,
        rank: spec.rank,
    })
}
