//! Forward and backward passes over many examples at once.
//!
//! The per-example gradient of layer `l` is the outer product `δ_l ⊗ h_{l-1}`,
//! so the whole family of per-example gradients is kept in factored form:
//! one `n × m_l` matrix of back-propagated errors and one `n × m_{l-1}`
//! matrix of layer inputs per layer.

use super::{NetArch, ParamVector};
use crate::error::{Error, Result};
use crate::numerics::{gemm, Matrix, View};

/// Post-activations `H_0 = X, …, H_{L-1}` and outputs of a batch.
#[derive(Debug, Clone)]
pub struct BatchPass {
    pub activations: Vec<Matrix>,
    /// `n × o`.
    pub output: Matrix,
}

/// Per-example gradients in outer-product form.
#[derive(Debug, Clone)]
pub struct FactoredGrads {
    arch: NetArch,
    deltas: Vec<Matrix>,
    inputs: Vec<Matrix>,
}

/// Forward pass for every row of `x`.
pub fn forward_batch(params: &ParamVector, x: &Matrix) -> Result<BatchPass> {
    let arch = params.arch();
    if x.cols() != arch.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "input dimension",
            expected: arch.input_dim(),
            found: x.cols(),
        });
    }
    let depth = arch.depth();
    let n = x.rows();
    let mut activations = Vec::with_capacity(depth);
    activations.push(x.clone());
    for l in 0..depth {
        let (rows, cols) = arch.layer_shape(l);
        let w = View::from_slice(params.layer(l), rows, cols);
        let mut next = Matrix::zeros(n, rows);
        gemm(1.0, View::normal(&activations[l]), w.t(), 0.0, &mut next);
        if l + 1 < depth {
            next.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
            activations.push(next);
        } else {
            return Ok(BatchPass {
                activations,
                output: next,
            });
        }
    }
    unreachable!("depth >= 2")
}

/// Back-propagates one output seed per example (row `i` of `seeds` is the
/// cotangent of `f(x_i)`).
pub fn backward_batch(params: &ParamVector, pass: BatchPass, seeds: Matrix) -> Result<FactoredGrads> {
    let arch = params.arch();
    let depth = arch.depth();
    let n = pass.output.rows();
    if seeds.rows() != n || seeds.cols() != arch.output_dim() {
        return Err(Error::DimensionMismatch {
            what: "output seeds",
            expected: n * arch.output_dim(),
            found: seeds.rows() * seeds.cols(),
        });
    }
    let mut deltas = vec![Matrix::zeros(0, 0); depth];
    let mut delta = seeds;
    for l in (1..depth).rev() {
        let (rows, cols) = arch.layer_shape(l);
        let w = View::from_slice(params.layer(l), rows, cols);
        let mut prev = Matrix::zeros(n, cols);
        gemm(1.0, View::normal(&delta), w, 0.0, &mut prev);
        for (p, h) in prev.as_mut_slice().iter_mut().zip(pass.activations[l].as_slice()) {
            if *h <= 0.0 {
                *p = 0.0;
            }
        }
        deltas[l] = std::mem::replace(&mut delta, prev);
    }
    deltas[0] = delta;
    Ok(FactoredGrads {
        arch: arch.clone(),
        deltas,
        inputs: pass.activations,
    })
}

impl FactoredGrads {
    pub fn arch(&self) -> &NetArch {
        &self.arch
    }

    /// Number of examples.
    pub fn len(&self) -> usize {
        self.inputs[0].rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Gradient of example `i` materialized as a flat vector.
    pub fn example(&self, i: usize) -> ParamVector {
        let mut out = ParamVector::zeros(&self.arch);
        for l in 0..self.arch.depth() {
            let (rows, cols) = self.arch.layer_shape(l);
            let d = self.deltas[l].row(i);
            let h = self.inputs[l].row(i);
            let g = out.layer_mut(l);
            for r in 0..rows {
                for c in 0..cols {
                    g[r * cols + c] = d[r] * h[c];
                }
            }
        }
        out
    }

    /// `Σ_i weights[i]·g_i` over the leading `weights.len()` examples.
    pub fn weighted_sum(&self, weights: &[f64]) -> ParamVector {
        assert!(weights.len() <= self.len());
        let k = weights.len();
        let mut out = ParamVector::zeros(&self.arch);
        for l in 0..self.arch.depth() {
            let (rows, cols) = self.arch.layer_shape(l);
            let mut scaled = Matrix::zeros(k, rows);
            for (i, w) in weights.iter().enumerate() {
                for (s, d) in scaled.row_mut(i).iter_mut().zip(self.deltas[l].row(i)) {
                    *s = w * d;
                }
            }
            let mut block = Matrix::zeros(rows, cols);
            gemm(
                1.0,
                View::normal(&scaled).t(),
                View::top_rows(&self.inputs[l], k),
                0.0,
                &mut block,
            );
            out.layer_mut(l).copy_from_slice(block.as_slice());
        }
        out
    }

    /// `G_ij = ⟨g_i, g_j⟩` for all example pairs.
    pub fn gram(&self) -> Matrix {
        let n = self.len();
        let mut total = Matrix::zeros(n, n);
        for l in 0..self.arch.depth() {
            let dd = self.deltas[l].gram();
            let hh = self.inputs[l].gram();
            for ((t, a), b) in total.as_mut_slice().iter_mut().zip(dd.as_slice()).zip(hh.as_slice()) {
                *t += a * b;
            }
        }
        total
    }
}
