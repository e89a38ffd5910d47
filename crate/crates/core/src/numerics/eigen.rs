//! Symmetric eigen-decomposition by cyclic Jacobi rotations, and the PSD
//! spectrum / solve helpers built on it.

use super::{dot, Matrix};
use crate::error::{Error, Result};

/// Relative eigenvalue threshold below which a direction counts as null.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 64;

/// `A = V·diag(values)·Vᵀ` with eigenvalues ascending and eigenvectors in the
/// columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymmetricEigen {
    /// Decomposes the symmetric part of `a`.
    pub fn new(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NonSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        if !a.is_finite() {
            return Err(Error::NonFinite("symmetric eigen input"));
        }
        let (values, vectors) = jacobi(a.symmetrized()?);
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Solves `(A + shift·I)·x = b` in the eigenbasis, dropping directions
    /// whose shifted eigenvalue is not positive.
    fn apply_inverse(&self, b: &[f64], shift: f64) -> Vec<f64> {
        let n = self.dim();
        let v = &self.vectors;
        let mut coeff = vec![0.0; n];
        for (k, c) in coeff.iter_mut().enumerate() {
            let lam = self.values[k].max(0.0) + shift;
            if lam > 0.0 {
                let proj: f64 = (0..n).map(|i| v[(i, k)] * b[i]).sum();
                *c = proj / lam;
            }
        }
        let mut x = vec![0.0; n];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = dot(v.row(i), &coeff);
        }
        x
    }
}

fn jacobi(mut a: Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_sq().sqrt();
    if n > 1 && scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
                .map(|(p, q)| a[(p, q)] * a[(p, q)])
                .sum::<f64>()
                .sqrt();
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    rotate(&mut a, &mut v, p, q, apq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, col)] = v[(r, k)];
        }
    }
    (values, vectors)
}

#[inline]
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, apq: f64) {
    let n = a.rows();
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for r in 0..n {
        if r != p && r != q {
            let arp = a[(r, p)];
            let arq = a[(r, q)];
            let np = c * arp - s * arq;
            let nq = s * arp + c * arq;
            a[(r, p)] = np;
            a[(p, r)] = np;
            a[(r, q)] = nq;
            a[(q, r)] = nq;
        }
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = c * vrp - s * vrq;
        v[(r, q)] = s * vrp + c * vrq;
    }
}

/// Spectrum of a positive semi-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Number of eigenvalues above `tol · max eigenvalue`.
    pub rank: usize,
    /// Smallest eigenvalue above the rank threshold; 0 when the rank is 0.
    pub lambda_min_nonzero: f64,
}

pub fn psd_spectrum(k: &Matrix, tol: f64) -> Result<Spectrum> {
    let eig = SymmetricEigen::new(k)?;
    Ok(spectrum_of(&eig.values, tol))
}

fn spectrum_of(values: &[f64], tol: f64) -> Spectrum {
    let max = values.iter().copied().fold(0.0_f64, f64::max);
    let threshold = tol * max;
    let above: Vec<f64> = values.iter().copied().filter(|&v| v > threshold).collect();
    Spectrum {
        eigenvalues: values.to_vec(),
        rank: above.len(),
        lambda_min_nonzero: above.first().copied().unwrap_or(0.0),
    }
}

/// Solves `(K + ridge·I)·α = b` for symmetric PSD `K`.
///
/// With `ridge = 0` the matrix must have full rank (relative tolerance
/// [`DEFAULT_RANK_TOL`]); otherwise [`Error::RankDeficient`] carries the rank.
pub fn solve_psd(k: &Matrix, b: &[f64], ridge: f64) -> Result<Vec<f64>> {
    if b.len() != k.rows() {
        return Err(Error::DimensionMismatch {
            what: "right-hand side",
            expected: k.rows(),
            found: b.len(),
        });
    }
    if ridge.is_nan() || ridge < 0.0 || ridge.is_infinite() {
        return Err(Error::InvalidParameter(format!("ridge must be >= 0, got {ridge}")));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    let eig = SymmetricEigen::new(k)?;
    let n = eig.dim();
    if ridge == 0.0 {
        let rank = spectrum_of(&eig.values, DEFAULT_RANK_TOL).rank;
        if rank < n {
            return Err(Error::RankDeficient { rank, dim: n });
        }
    }
    let ks = k.symmetrized()?;
    let mut x = eig.apply_inverse(b, ridge);
    // two rounds of iterative refinement against the original matrix
    for _ in 0..2 {
        let mut r = b.to_vec();
        for (i, ri) in r.iter_mut().enumerate() {
            *ri -= dot(ks.row(i), &x) + ridge * x[i];
        }
        let dx = eig.apply_inverse(&r, ridge);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
    }
    Ok(x)
}
