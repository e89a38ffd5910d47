use super::{Label, LossKind, ParamVector};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{axpy, Matrix};

/// Output and post-activations of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub output: Vec<f64>,
    /// `h_0 = x, h_1, …, h_{L-1}`.
    pub activations: Vec<Vec<f64>>,
}

/// `W_L·ReLU(W_{L-1}·…ReLU(W_1·x))`.
pub fn forward(params: &ParamVector, x: &[f64]) -> Result<ForwardPass> {
    let arch = params.arch();
    if x.len() != arch.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "input dimension",
            expected: arch.input_dim(),
            found: x.len(),
        });
    }
    let depth = arch.depth();
    let mut activations = Vec::with_capacity(depth);
    activations.push(x.to_vec());
    for l in 0..depth {
        let (rows, cols) = arch.layer_shape(l);
        let w = params.layer(l);
        let h = &activations[l];
        let mut next: Vec<f64> = (0..rows)
            .map(|r| w[r * cols..(r + 1) * cols].iter().zip(h).map(|(a, b)| a * b).sum())
            .collect();
        if l + 1 < depth {
            next.iter_mut().for_each(|v| *v = v.max(0.0));
            activations.push(next);
        } else {
            return Ok(ForwardPass {
                output: next,
                activations,
            });
        }
    }
    unreachable!("depth >= 2")
}

/// Gradient of `⟨seed, f(x)⟩` with respect to the weights.
///
/// ReLU's derivative at zero is taken to be zero.
pub fn backprop(params: &ParamVector, pass: &ForwardPass, seed: &[f64]) -> ParamVector {
    let arch = params.arch();
    let depth = arch.depth();
    let mut grad = ParamVector::zeros(arch);
    let mut delta = seed.to_vec();
    for l in (0..depth).rev() {
        let (rows, cols) = arch.layer_shape(l);
        let h = &pass.activations[l];
        let g = grad.layer_mut(l);
        for r in 0..rows {
            if delta[r] != 0.0 {
                axpy(delta[r], h, &mut g[r * cols..(r + 1) * cols]);
            }
        }
        if l > 0 {
            let w = params.layer(l);
            let mut prev = vec![0.0; cols];
            for r in 0..rows {
                if delta[r] != 0.0 {
                    axpy(delta[r], &w[r * cols..(r + 1) * cols], &mut prev);
                }
            }
            for (p, a) in prev.iter_mut().zip(h) {
                if *a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
    }
    grad
}

/// `∇_W ℓ(f_W(x); y)`.
pub fn per_example_grad(params: &ParamVector, x: &[f64], label: &Label, loss: LossKind) -> Result<ParamVector> {
    let outputs = params.arch().output_dim();
    loss.check_outputs(outputs)?;
    loss.check_label(label, outputs)?;
    let pass = forward(params, x)?;
    if pass.output.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forward pass"));
    }
    let mut residual = vec![0.0; outputs];
    loss.residual(&pass.output, label, &mut residual);
    Ok(backprop(params, &pass, &residual))
}

/// `o × P` matrix whose row `j` is `∂f_j/∂W`.
pub fn output_jacobian(params: &ParamVector, x: &[f64]) -> Result<Matrix> {
    let pass = forward(params, x)?;
    let outputs = params.arch().output_dim();
    let mut jac = Matrix::zeros(outputs, params.len());
    let mut seed = vec![0.0; outputs];
    for j in 0..outputs {
        seed[j] = 1.0;
        jac.row_mut(j)
            .copy_from_slice(backprop(params, &pass, &seed).as_slice());
        seed[j] = 0.0;
    }
    Ok(jac)
}

/// Mean per-example gradient over `data`.
pub fn empirical_grad(params: &ParamVector, data: &Dataset, loss: LossKind) -> Result<ParamVector> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = ParamVector::zeros(params.arch());
    for (x, y) in data.iter() {
        total.add_scaled(1.0, &per_example_grad(params, x, y, loss)?)?;
    }
    total.scale(1.0 / data.len() as f64);
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{init_betas, sample_init, InitScheme, NetArch};
    use crate::numerics::{finite_diff_gradient, RngStream};
    use rand::Rng;

    fn random_net(d: usize, m: usize, depth: usize, o: usize, seed: u64) -> ParamVector {
        let arch = NetArch::uniform(d, m, depth, o).unwrap();
        let betas = init_betas(&InitScheme::He, &arch).unwrap();
        sample_init(&arch, &betas, &RngStream::new(seed, 0)).unwrap()
    }

    fn min_abs_preactivation(p: &ParamVector, x: &[f64]) -> f64 {
        let pass = forward(p, x).unwrap();
        let arch = p.arch();
        let mut min = f64::INFINITY;
        for l in 0..arch.depth() - 1 {
            let (rows, cols) = arch.layer_shape(l);
            let w = p.layer(l);
            for r in 0..rows {
                let pre: f64 = w[r * cols..(r + 1) * cols]
                    .iter()
                    .zip(&pass.activations[l])
                    .map(|(a, b)| a * b)
                    .sum();
                min = min.min(pre.abs());
            }
        }
        min
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        diff / scale.max(1e-300)
    }

    #[test]
    fn hand_evaluated_two_layer_net() {
        let arch = NetArch::uniform(2, 2, 2, 1).unwrap();
        let p = ParamVector::from_flat(&arch, vec![1., 0., 0., 1., 1., 1.]).unwrap();
        let pass = forward(&p, &[1.0, -2.0]).unwrap();
        assert_eq!(pass.activations[1], vec![1.0, 0.0]);
        assert_eq!(pass.output, vec![1.0]);
        assert!(forward(&p, &[1.0]).is_err());
    }

    #[test]
    fn zero_weights_zero_output() {
        let arch = NetArch::uniform(3, 4, 3, 2).unwrap();
        let p = ParamVector::zeros(&arch);
        assert_eq!(forward(&p, &[1.0, 2.0, 3.0]).unwrap().output, vec![0.0, 0.0]);
    }

    #[test]
    fn positive_homogeneity() {
        let p = random_net(4, 6, 3, 2, 1);
        let x = [0.3, -0.2, 0.9, 0.5];
        let x2: Vec<f64> = x.iter().map(|v| 2.5 * v).collect();
        let a = forward(&p, &x).unwrap().output;
        let b = forward(&p, &x2).unwrap().output;
        for (u, v) in a.iter().zip(&b) {
            assert!((2.5 * u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn logistic_grad_at_zero_output_is_half_jacobian() {
        let mut p = random_net(3, 4, 2, 1, 5);
        p.layer_mut(1).iter_mut().for_each(|v| *v = 0.0);
        let x = [0.2, 0.4, -0.1];
        let g = per_example_grad(&p, &x, &Label::Sign(-1.0), LossKind::LogisticSingle).unwrap();
        let j = output_jacobian(&p, &x).unwrap();
        for (a, b) in g.as_slice().iter().zip(j.row(0)) {
            assert!((a - 0.5 * b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn zero_input_has_zero_first_layer_gradient() {
        let p = random_net(3, 5, 3, 2, 2);
        let g = per_example_grad(&p, &[0.0; 3], &Label::Class(1), LossKind::CrossEntropyMulti).unwrap();
        assert!(g.layer(0).iter().all(|v| *v == 0.0));
        let j = output_jacobian(&p, &[0.0; 3]).unwrap();
        let first = p.arch().layer_len(0);
        assert!(j.row(0)[..first].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn last_layer_jacobian_block_repeats_penultimate_activation() {
        let p = random_net(3, 5, 3, 3, 8);
        let x = [0.5, -1.0, 0.25];
        let pass = forward(&p, &x).unwrap();
        let j = output_jacobian(&p, &x).unwrap();
        let off = p.arch().layer_offset(2);
        let h = &pass.activations[2];
        for r in 0..3 {
            let block = &j.row(r)[off..];
            for c in 0..3 {
                let expect = if c == r { h.clone() } else { vec![0.0; 5] };
                assert_eq!(&block[c * 5..(c + 1) * 5], expect.as_slice());
            }
        }
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let mut rng = RngStream::new(77, 0).generator();
        let mut checked = 0;
        let mut seed = 0;
        while checked < 10 {
            seed += 1;
            let p = random_net(5, 7, 3, 2, seed);
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            if min_abs_preactivation(&p, &x) < 1e-3 {
                continue;
            }
            let y = Label::Class(rng.random_range(0..2));
            let g = per_example_grad(&p, &x, &y, LossKind::CrossEntropyMulti).unwrap();
            let arch = p.arch().clone();
            let fd = finite_diff_gradient(
                |w| {
                    let q = ParamVector::from_flat(&arch, w.to_vec()).unwrap();
                    LossKind::CrossEntropyMulti.value(&forward(&q, &x).unwrap().output, &y)
                },
                p.as_slice(),
                1e-6,
            )
            .unwrap();
            assert!(rel_err(g.as_slice(), &fd) < 1e-5);
            checked += 1;
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = random_net(4, 6, 3, 2, 21);
        let x = [0.7, -0.3, 0.2, 0.9];
        assert!(min_abs_preactivation(&p, &x) > 1e-3);
        let j = output_jacobian(&p, &x).unwrap();
        let arch = p.arch().clone();
        for k in 0..2 {
            let fd = finite_diff_gradient(
                |w| {
                    forward(&ParamVector::from_flat(&arch, w.to_vec()).unwrap(), &x)
                        .unwrap()
                        .output[k]
                },
                p.as_slice(),
                1e-6,
            )
            .unwrap();
            assert!(rel_err(j.row(k), &fd) < 1e-5);
        }
    }

    #[test]
    fn grad_is_jacobian_transpose_residual() {
        let p = random_net(3, 4, 3, 3, 4);
        let x = [0.1, 0.9, -0.4];
        let y = Label::Class(2);
        let g = per_example_grad(&p, &x, &y, LossKind::CrossEntropyMulti).unwrap();
        let j = output_jacobian(&p, &x).unwrap();
        let mut r = vec![0.0; 3];
        LossKind::CrossEntropyMulti.residual(&forward(&p, &x).unwrap().output, &y, &mut r);
        let jt = j.t_matvec(&r).unwrap();
        for (a, b) in g.as_slice().iter().zip(&jt) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn label_mismatch_rejected() {
        let p = random_net(3, 4, 2, 1, 4);
        assert!(per_example_grad(&p, &[0.0; 3], &Label::Class(0), LossKind::LogisticSingle).is_err());
        assert!(per_example_grad(&p, &[0.0; 3], &Label::Sign(1.0), LossKind::CrossEntropyMulti).is_err());
    }

    #[test]
    fn empirical_grad_is_mean() {
        let p = random_net(2, 3, 2, 1, 6);
        let x = Matrix::from_rows(&[[0.5, 1.0], [-1.0, 0.25]]).unwrap();
        let labels = vec![Label::Sign(1.0), Label::Sign(-1.0)];
        let data = Dataset::new(x.clone(), labels.clone()).unwrap();
        let g = empirical_grad(&p, &data, LossKind::LogisticSingle).unwrap();
        let g0 = per_example_grad(&p, x.row(0), &labels[0], LossKind::LogisticSingle).unwrap();
        let g1 = per_example_grad(&p, x.row(1), &labels[1], LossKind::LogisticSingle).unwrap();
        for ((a, b), c) in g.as_slice().iter().zip(g0.as_slice()).zip(g1.as_slice()) {
            assert!((a - 0.5 * (b + c)).abs() < 1e-15);
        }

        let single = Dataset::new(Matrix::from_rows(&[x.row(0)]).unwrap(), vec![labels[0]]).unwrap();
        let doubled = Dataset::new(Matrix::from_rows(&[x.row(0), x.row(0)]).unwrap(), vec![labels[0]; 2]).unwrap();
        let gs = empirical_grad(&p, &single, LossKind::LogisticSingle).unwrap();
        assert_eq!(gs, g0);
        let gd = empirical_grad(&p, &doubled, LossKind::LogisticSingle).unwrap();
        for (a, b) in gd.as_slice().iter().zip(gs.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
