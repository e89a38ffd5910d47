use super::NtkFeatures;
use crate::error::{Error, Result};
use crate::network::{Label, ParamVector};
use crate::numerics::{dot, psd_spectrum, solve_psd, DEFAULT_RANK_TOL};

/// Interpolating solution of the single-output linearized model that drives
/// every logistic loss term to `log(1 + 1/n²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LazySolution {
    pub w_star: ParamVector,
    /// Dual coefficients: `W* − W_0 = M_0ᵀ·α`.
    pub alpha: Vec<f64>,
    /// `‖W* − W_0‖² = αᵀKα`.
    pub r: f64,
    /// Mean logistic loss at `W*`.
    pub achieved_loss: f64,
    /// Upper bound on the gap to the infimum of the loss (which is 0 for a
    /// full-rank Gram matrix).
    pub alpha_gap: f64,
    pub ridge: f64,
}

/// `1e-10·trace(K)/n`.
pub fn default_ridge(features: &NtkFeatures) -> f64 {
    let k = features.jacobian_gram();
    1e-10 * k.trace() / k.rows() as f64
}

/// Moves `W_0` within the row space of `M_0` until every prediction equals
/// `2·ln(n)·y_i`.
pub fn lazy_solution(features: &NtkFeatures, labels: &[Label], ridge: f64) -> Result<LazySolution> {
    if features.outputs() != 1 {
        return Err(Error::Unsupported(format!(
            "lazy solution is single-output only, got {} outputs",
            features.outputs()
        )));
    }
    let n = features.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            what: "label count",
            expected: n,
            found: labels.len(),
        });
    }
    let signs = labels
        .iter()
        .map(|l| match l {
            Label::Sign(y) if y.abs() == 1.0 => Ok(*y),
            other => Err(Error::InvalidLabel(format!("expected +1 or -1, got {other}"))),
        })
        .collect::<Result<Vec<f64>>>()?;
    let k = features.jacobian_gram();
    let spectrum = psd_spectrum(&k, DEFAULT_RANK_TOL)?;
    if spectrum.rank < n {
        return Err(Error::RankDeficient {
            rank: spectrum.rank,
            dim: n,
        });
    }
    let scale = 2.0 * (n as f64).ln();
    let f0 = features.initial_outputs().as_slice();
    let target: Vec<f64> = signs.iter().zip(f0).map(|(y, f)| scale * y - f).collect();
    let alpha = solve_psd(&k, &target, ridge)?;
    let r = dot(&alpha, &k.matvec(&alpha)?);
    let mut w_star = features.combine_rows(&alpha)?;
    w_star.add_scaled(1.0, features.base_point())?;
    let achieved_loss = features.lin_loss(&w_star, labels, crate::network::LossKind::LogisticSingle)?;
    Ok(LazySolution {
        w_star,
        alpha,
        r,
        achieved_loss,
        alpha_gap: achieved_loss,
        ridge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetArch;
    use crate::numerics::Matrix;

    fn features(jac: Matrix, f0: Vec<f64>) -> NtkFeatures {
        let p = jac.cols();
        let arch = NetArch::uniform(1, p / 2, 2, 1).unwrap();
        let w0 = ParamVector::from_flat(&arch, (0..arch.param_count()).map(|i| i as f64 * 0.1).collect()).unwrap();
        NtkFeatures::new(w0, Matrix::from_vec(f0.len(), 1, f0).unwrap(), jac).unwrap()
    }

    #[test]
    fn single_example_needs_no_move() {
        let f = features(Matrix::from_rows(&[[1.0, 2.0, 0.5, -1.0]]).unwrap(), vec![0.0]);
        let s = lazy_solution(&f, &[Label::Sign(1.0)], 0.0).unwrap();
        assert_eq!(s.r, 0.0);
        assert_eq!(&s.w_star, f.base_point());
    }

    #[test]
    fn orthonormal_pair() {
        let jac = Matrix::from_rows(&[[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]).unwrap();
        let f = features(jac, vec![0.0, 0.0]);
        let s = lazy_solution(&f, &[Label::Sign(1.0), Label::Sign(-1.0)], 0.0).unwrap();
        let l2 = 2f64.ln();
        assert!((s.alpha[0] - 2.0 * l2).abs() < 1e-15);
        assert!((s.alpha[1] + 2.0 * l2).abs() < 1e-15);
        assert!((s.r - 3.843624).abs() < 1e-6);
        assert!((s.achieved_loss - 1.25f64.ln()).abs() < 1e-15);
        assert!(s.achieved_loss < 0.25);
        let moved = s.w_star.difference(f.base_point()).unwrap().norm_sq();
        assert!((moved - s.r).abs() <= 1e-12 * s.r);
    }

    #[test]
    fn rank_deficient_rejected() {
        let jac = Matrix::from_rows(&[[1.0, 2.0, 0.0, 0.0], [2.0, 4.0, 0.0, 0.0]]).unwrap();
        let f = features(jac, vec![0.0, 0.0]);
        assert!(matches!(
            lazy_solution(&f, &[Label::Sign(1.0), Label::Sign(1.0)], 0.0),
            Err(Error::RankDeficient { rank: 1, dim: 2 })
        ));
    }

    #[test]
    fn label_checks() {
        let f = features(Matrix::from_rows(&[[1.0, 0.0, 0.0, 0.0]]).unwrap(), vec![0.0]);
        assert!(lazy_solution(&f, &[Label::Class(0)], 0.0).is_err());
        assert!(lazy_solution(&f, &[], 0.0).is_err());
    }
}
