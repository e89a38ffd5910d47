//! Squared differences between the mean gradient on a dataset and on each of
//! its neighbors.

use crate::data::Neighbor;
use crate::error::{Error, Result};
use crate::network::ParamVector;
use crate::numerics::{norm_sq, Matrix};

/// Direct evaluation from materialized per-example gradients. With
/// `S = Σ g_i`:
///
/// * remove `i`: `‖S/n − (S − g_i)/(n − 1)‖²`
/// * add `g`: `‖S/n − (S + g)/(n + 1)‖²`
/// * replace `i` by `g`: `‖(g_i − g)/n‖²`
pub fn neighbor_grad_diffs(
    per_example: &[ParamVector],
    pool: &[ParamVector],
    neighbors: &[Neighbor],
) -> Result<Vec<f64>> {
    let n = per_example.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let dim = per_example[0].len();
    let mut sum = vec![0.0; dim];
    for g in per_example {
        sum.iter_mut().zip(g.as_slice()).for_each(|(s, v)| *s += v);
    }
    let nf = n as f64;
    let pool_grad = |p: usize| {
        pool.get(p)
            .ok_or_else(|| Error::InvalidParameter(format!("pool index {p} out of range")))
    };
    neighbors
        .iter()
        .map(|nb| {
            let diff: Vec<f64> = match *nb {
                Neighbor::Remove(i) => {
                    if n < 2 {
                        return Err(Error::TooFewRecords { needed: 2, found: n });
                    }
                    let gi = per_example[i].as_slice();
                    sum.iter().zip(gi).map(|(s, g)| s / nf - (s - g) / (nf - 1.0)).collect()
                }
                Neighbor::Add(p) => {
                    let g = pool_grad(p)?.as_slice();
                    sum.iter().zip(g).map(|(s, g)| s / nf - (s + g) / (nf + 1.0)).collect()
                }
                Neighbor::Replace { index, pool: p } => {
                    let g = pool_grad(p)?.as_slice();
                    per_example[index]
                        .as_slice()
                        .iter()
                        .zip(g)
                        .map(|(a, b)| (a - b) / nf)
                        .collect()
                }
            };
            Ok(norm_sq(&diff))
        })
        .collect()
}

/// The same quantities from the Gram matrix of `[g_1..g_n, pool_1..]`, where
/// pool record `p` sits at row `n + p`.
pub fn neighbor_diffs_from_gram(gram: &Matrix, n: usize, neighbors: &[Neighbor]) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if !gram.is_square() || gram.rows() < n {
        return Err(Error::DimensionMismatch {
            what: "gradient Gram matrix",
            expected: n,
            found: gram.rows(),
        });
    }
    let nf = n as f64;
    // s_k = ⟨g_k, S⟩ for every row, ss = ‖S‖².
    let s: Vec<f64> = (0..gram.rows()).map(|k| gram.row(k)[..n].iter().sum()).collect();
    let ss: f64 = s[..n].iter().sum();
    let pool_row = |p: usize| {
        let r = n + p;
        if r < gram.rows() {
            Ok(r)
        } else {
            Err(Error::InvalidParameter(format!("pool index {p} out of range")))
        }
    };
    neighbors
        .iter()
        .map(|nb| {
            let v = match *nb {
                Neighbor::Remove(i) => {
                    if n < 2 {
                        return Err(Error::TooFewRecords { needed: 2, found: n });
                    }
                    (gram[(i, i)] - 2.0 * s[i] / nf + ss / (nf * nf)) / ((nf - 1.0) * (nf - 1.0))
                }
                Neighbor::Add(p) => {
                    let r = pool_row(p)?;
                    (ss - 2.0 * nf * s[r] + nf * nf * gram[(r, r)]) / (nf * nf * (nf + 1.0) * (nf + 1.0))
                }
                Neighbor::Replace { index, pool } => {
                    let r = pool_row(pool)?;
                    (gram[(index, index)] - 2.0 * gram[(index, r)] + gram[(r, r)]) / (nf * nf)
                }
            };
            Ok(v.max(0.0))
        })
        .collect()
}
