use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::network::Label;
use crate::numerics::{norm_sq, Matrix, RngStream};

/// Feature rows with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    labels: Vec<Label>,
}

impl Dataset {
    pub fn new(x: Matrix, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != x.rows() {
            return Err(Error::DimensionMismatch {
                what: "label count",
                expected: x.rows(),
                found: labels.len(),
            });
        }
        if !x.is_finite() {
            return Err(Error::NonFinite("features"));
        }
        Ok(Self { x, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.x
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn input(&self, i: usize) -> &[f64] {
        self.x.row(i)
    }

    pub fn label(&self, i: usize) -> &Label {
        &self.labels[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], &Label)> {
        self.x.row_iter().zip(self.labels.iter())
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let d = self.dim();
        let mut data = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidParameter(format!(
                    "row index {i} out of range for {} records",
                    self.len()
                )));
            }
            data.extend_from_slice(self.input(i));
            labels.push(self.labels[i]);
        }
        Dataset::new(Matrix::from_vec(indices.len(), d, data)?, labels)
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                what: "feature dimension",
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let mut data = self.x.as_slice().to_vec();
        data.extend_from_slice(other.x.as_slice());
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Dataset::new(Matrix::from_vec(self.len() + other.len(), self.dim(), data)?, labels)
    }

    /// Same labels, features renormalized.
    pub fn normalized(&self, mode: NormalizeMode) -> Result<Dataset> {
        Ok(Dataset {
            x: normalize_to_sqrt_d(&self.x, mode)?,
            labels: self.labels.clone(),
        })
    }
}

/// How rows are brought to the `√d` norm scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NormalizeMode {
    /// Leave rows untouched.
    None,
    /// Shrink rows longer than `√d`; shorter rows are kept.
    #[default]
    Cap,
    /// Rescale every row to norm exactly `√d`.
    Exact,
}

impl fmt::Display for NormalizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalizeMode::None => "none",
            NormalizeMode::Cap => "cap",
            NormalizeMode::Exact => "exact",
        })
    }
}

impl FromStr for NormalizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(NormalizeMode::None),
            "cap" => Ok(NormalizeMode::Cap),
            "exact" => Ok(NormalizeMode::Exact),
            _ => Err(Error::InvalidParameter(format!("unknown normalize mode '{s}'"))),
        }
    }
}

/// Rescales rows of `x` towards norm `√d` according to `mode`.
pub fn normalize_to_sqrt_d(x: &Matrix, mode: NormalizeMode) -> Result<Matrix> {
    let target = (x.cols() as f64).sqrt();
    let mut out = x.clone();
    if mode == NormalizeMode::None {
        return Ok(out);
    }
    for i in 0..out.rows() {
        let norm = norm_sq(out.row(i)).sqrt();
        let scale = match mode {
            NormalizeMode::Exact if norm == 0.0 => {
                return Err(Error::InvalidParameter(format!(
                    "row {i} is zero and cannot be rescaled to norm sqrt(d)"
                )))
            }
            NormalizeMode::Exact => target / norm,
            _ if norm > target => target / norm,
            _ => continue,
        };
        // Rows already at the target norm are left bit-for-bit unchanged.
        if (scale - 1.0).abs() > 4.0 * f64::EPSILON {
            out.row_mut(i).iter_mut().for_each(|v| *v *= scale);
        }
    }
    Ok(out)
}

/// Splits off `holdout` uniformly chosen records, returning `(kept, held_out)`.
/// Both parts keep the original relative order.
pub fn holdout_split(data: &Dataset, holdout: usize, stream: &RngStream) -> Result<(Dataset, Dataset)> {
    if holdout >= data.len() {
        return Err(Error::TooFewRecords {
            needed: holdout + 1,
            found: data.len(),
        });
    }
    let mut picked = sample(&mut stream.generator(), data.len(), holdout).into_vec();
    picked.sort_unstable();
    let mut is_held = vec![false; data.len()];
    picked.iter().for_each(|&i| is_held[i] = true);
    let kept: Vec<usize> = (0..data.len()).filter(|&i| !is_held[i]).collect();
    Ok((data.subset(&kept)?, data.subset(&picked)?))
}
