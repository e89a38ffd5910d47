use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{axpy, norm_sq, Matrix};

/// Layer widths of an `L`-layer network: `m_0 = d`, hidden `m_1..m_{L-1}`,
/// and `m_L = o`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NetArch {
    widths: Vec<usize>,
}

impl NetArch {
    pub fn new(input_dim: usize, hidden: &[usize], output_dim: usize) -> Result<Self> {
        if hidden.is_empty() {
            return Err(Error::InvalidArch("depth must be at least 2 (one hidden layer)".into()));
        }
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(input_dim);
        widths.extend_from_slice(hidden);
        widths.push(output_dim);
        if let Some(pos) = widths.iter().position(|&w| w == 0) {
            return Err(Error::InvalidArch(format!("width m_{pos} is zero")));
        }
        Ok(Self { widths })
    }

    /// `depth - 1` hidden layers, all of width `width`.
    pub fn uniform(input_dim: usize, width: usize, depth: usize, output_dim: usize) -> Result<Self> {
        if depth < 2 {
            return Err(Error::InvalidArch(format!("depth must be >= 2, got {depth}")));
        }
        Self::new(input_dim, &vec![width; depth - 1], output_dim)
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().expect("non-empty")
    }

    /// Number of weight matrices `L`.
    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn hidden_widths(&self) -> &[usize] {
        &self.widths[1..self.widths.len() - 1]
    }

    /// `m_0, …, m_L`.
    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    /// `(rows, cols) = (m_{l+1}, m_l)` of 0-based layer `l`.
    pub fn layer_shape(&self, layer: usize) -> (usize, usize) {
        (self.widths[layer + 1], self.widths[layer])
    }

    pub fn layer_len(&self, layer: usize) -> usize {
        let (r, c) = self.layer_shape(layer);
        r * c
    }

    pub fn layer_offset(&self, layer: usize) -> usize {
        (0..layer).map(|l| self.layer_len(l)).sum()
    }

    /// `P = Σ m_l·m_{l-1}`.
    pub fn param_count(&self) -> usize {
        (0..self.depth()).map(|l| self.layer_len(l)).sum()
    }
}

impl fmt::Display for NetArch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.widths.iter().map(|w| w.to_string()).collect();
        write!(f, "{}", parts.join("-"))
    }
}

/// Flattened weights `(W_1, …, W_L)` of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    arch: NetArch,
    flat: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(arch: &NetArch) -> Self {
        Self {
            flat: vec![0.0; arch.param_count()],
            arch: arch.clone(),
        }
    }

    pub fn from_flat(arch: &NetArch, flat: Vec<f64>) -> Result<Self> {
        if flat.len() != arch.param_count() {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: arch.param_count(),
                found: flat.len(),
            });
        }
        Ok(Self {
            arch: arch.clone(),
            flat,
        })
    }

    /// Builds a parameter vector from per-layer matrices.
    pub fn from_layers(arch: &NetArch, layers: &[Matrix]) -> Result<Self> {
        if layers.len() != arch.depth() {
            return Err(Error::DimensionMismatch {
                what: "layer count",
                expected: arch.depth(),
                found: layers.len(),
            });
        }
        let mut flat = Vec::with_capacity(arch.param_count());
        for (l, m) in layers.iter().enumerate() {
            let (r, c) = arch.layer_shape(l);
            if (m.rows(), m.cols()) != (r, c) {
                return Err(Error::InvalidArch(format!(
                    "layer {} must be {r}x{c}, got {}x{}",
                    l + 1,
                    m.rows(),
                    m.cols()
                )));
            }
            flat.extend_from_slice(m.as_slice());
        }
        Ok(Self {
            arch: arch.clone(),
            flat,
        })
    }

    pub fn arch(&self) -> &NetArch {
        &self.arch
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.flat
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.flat
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.flat
    }

    /// Row-major block of 0-based layer `l`.
    pub fn layer(&self, layer: usize) -> &[f64] {
        let off = self.arch.layer_offset(layer);
        &self.flat[off..off + self.arch.layer_len(layer)]
    }

    pub fn layer_mut(&mut self, layer: usize) -> &mut [f64] {
        let off = self.arch.layer_offset(layer);
        let len = self.arch.layer_len(layer);
        &mut self.flat[off..off + len]
    }

    pub fn layer_matrix(&self, layer: usize) -> Matrix {
        let (r, c) = self.arch.layer_shape(layer);
        Matrix::from_vec(r, c, self.layer(layer).to_vec()).expect("layer shape")
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.flat)
    }

    pub fn is_finite(&self) -> bool {
        self.flat.iter().all(|v| v.is_finite())
    }

    /// `self += alpha·other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &ParamVector) -> Result<()> {
        self.check_same(other)?;
        axpy(alpha, &other.flat, &mut self.flat);
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.flat.iter_mut().for_each(|v| *v *= alpha);
    }

    /// `self - other`.
    pub fn difference(&self, other: &ParamVector) -> Result<ParamVector> {
        self.check_same(other)?;
        let flat = self.flat.iter().zip(&other.flat).map(|(a, b)| a - b).collect();
        Ok(ParamVector {
            arch: self.arch.clone(),
            flat,
        })
    }

    fn check_same(&self, other: &ParamVector) -> Result<()> {
        if self.arch != other.arch {
            return Err(Error::InvalidArch(format!(
                "architectures differ: {} vs {}",
                self.arch, other.arch
            )));
        }
        Ok(())
    }
}
