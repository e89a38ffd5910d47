use rand::Rng;

use super::Dataset;
use crate::error::{Error, Result};
use crate::network::Label;
use crate::numerics::{dot, fill_gaussian, norm_sq, Matrix, RngStream};

/// How synthetic labels are assigned.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelRule {
    /// Independent fair `±1`.
    RandomSign,
    /// `sign(⟨w, x⟩)`, with `sign(0) = +1`.
    LinearTeacher(Vec<f64>),
    /// Uniform class index in `0..classes`.
    RandomClass(usize),
}

/// `n` points drawn uniformly on the sphere of radius `√d`.
///
/// Rows come from `stream.child(0)` and labels from `stream.child(1)`, so the
/// features do not depend on the label rule.
pub fn synth_sphere(n: usize, d: usize, stream: &RngStream, rule: &LabelRule) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "synthetic data needs n, d >= 1 (got n={n}, d={d})"
        )));
    }
    match rule {
        LabelRule::LinearTeacher(w) if w.len() != d => {
            return Err(Error::DimensionMismatch {
                what: "teacher dimension",
                expected: d,
                found: w.len(),
            })
        }
        LabelRule::RandomClass(k) if *k < 2 => {
            return Err(Error::InvalidParameter(format!("need at least 2 classes, got {k}")))
        }
        _ => {}
    }
    let radius = (d as f64).sqrt();
    let mut x = Matrix::zeros(n, d);
    let mut rng = stream.child(0).generator();
    for i in 0..n {
        let row = x.row_mut(i);
        loop {
            fill_gaussian(&mut rng, row, 1.0);
            let norm = norm_sq(row).sqrt();
            if norm > 1e-150 {
                row.iter_mut().for_each(|v| *v *= radius / norm);
                break;
            }
        }
    }
    let mut rng = stream.child(1).generator();
    let labels = (0..n)
        .map(|i| match rule {
            LabelRule::RandomSign => Label::Sign(if rng.random::<bool>() { 1.0 } else { -1.0 }),
            LabelRule::LinearTeacher(w) => Label::Sign(if dot(w, x.row(i)) >= 0.0 { 1.0 } else { -1.0 }),
            LabelRule::RandomClass(k) => Label::Class(rng.random_range(0..*k)),
        })
        .collect();
    Dataset::new(x, labels)
}
