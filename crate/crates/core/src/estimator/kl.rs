use rayon::prelude::*;

use super::config::{Model, TrainConfig, DIVERGENCE_THRESHOLD};
use super::diffs::neighbor_diffs_from_gram;
use super::step::step_in_place;
use crate::data::{Dataset, Neighbor, NeighborSet};
use crate::error::{Error, Result};
use crate::linearized::{build_features, NtkFeatures};
use crate::network::{backward_batch, forward_batch, init_betas, sample_init, Label, LossKind, ParamVector};
use crate::numerics::{Matrix, RngStream};

/// Accumulated KL of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct KlTrace {
    pub run: usize,
    /// Squared drift difference of every neighbor at each executed step.
    pub per_step: Vec<Vec<f64>>,
    /// Steps at which cumulative values were recorded (0 is always first).
    pub record_steps: Vec<usize>,
    /// `max_j` of the cumulative KL at each recorded step.
    pub cumulative_worst: Vec<f64>,
    /// Cumulative KL of each neighbor at each recorded step.
    pub cumulative_per_neighbor: Vec<Vec<f64>>,
    /// Step at which the run was aborted; later records hold `+∞`.
    pub diverged_at: Option<usize>,
}

/// Traces of all runs and their aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct KlEstimate {
    pub neighbors: Vec<Neighbor>,
    pub record_steps: Vec<usize>,
    pub runs: Vec<KlTrace>,
    /// Mean over runs of the worst-case cumulative KL.
    pub mean_worst: Vec<f64>,
    /// Population standard deviation over runs of the same.
    pub std_worst: Vec<f64>,
    /// Mean over runs of each neighbor's cumulative KL.
    pub mean_per_neighbor: Vec<Vec<f64>>,
}

impl KlEstimate {
    pub fn diverged(&self) -> bool {
        self.runs.iter().any(|r| r.diverged_at.is_some())
    }
}

/// Mean gradient on the training rows plus the Gram matrix of the
/// per-example gradients of training and pool rows.
struct StepEval {
    mean_grad: ParamVector,
    gram: Matrix,
}

trait GradientSource {
    fn evaluate(&self, w: &ParamVector) -> Result<StepEval>;
}

struct DnnSource {
    inputs: Matrix,
    labels: Vec<Label>,
    n: usize,
    loss: LossKind,
}

impl GradientSource for DnnSource {
    fn evaluate(&self, w: &ParamVector) -> Result<StepEval> {
        let pass = forward_batch(w, &self.inputs)?;
        if !pass.output.is_finite() {
            return Err(Error::NonFinite("network output"));
        }
        let mut seeds = Matrix::zeros(pass.output.rows(), pass.output.cols());
        for (i, y) in self.labels.iter().enumerate() {
            self.loss.residual(pass.output.row(i), y, seeds.row_mut(i));
        }
        let grads = backward_batch(w, pass, seeds)?;
        Ok(StepEval {
            mean_grad: grads.weighted_sum(&vec![1.0 / self.n as f64; self.n]),
            gram: grads.gram(),
        })
    }
}

struct LinearSource {
    features: NtkFeatures,
    jac_gram: Matrix,
    labels: Vec<Label>,
    n: usize,
    loss: LossKind,
}

impl GradientSource for LinearSource {
    fn evaluate(&self, w: &ParamVector) -> Result<StepEval> {
        let preds = self.features.lin_forward(w)?;
        if !preds.is_finite() {
            return Err(Error::NonFinite("network output"));
        }
        let r = self.features.residuals(&preds, &self.labels, self.loss)?;
        let o = self.features.outputs();
        let total = self.labels.len();
        let mut gram = Matrix::zeros(total, total);
        for i in 0..total {
            for j in 0..=i {
                let mut v = 0.0;
                for a in 0..o {
                    for b in 0..o {
                        v += r[i * o + a] * r[j * o + b] * self.jac_gram[(i * o + a, j * o + b)];
                    }
                }
                gram.as_mut_slice()[i * total + j] = v;
                gram.as_mut_slice()[j * total + i] = v;
            }
        }
        let scale = 1.0 / self.n as f64;
        let coeffs: Vec<f64> = r
            .iter()
            .enumerate()
            .map(|(k, v)| if k / o < self.n { v * scale } else { 0.0 })
            .collect();
        Ok(StepEval {
            mean_grad: self.features.combine_rows(&coeffs)?,
            gram,
        })
    }
}

fn record_points(steps: usize, every: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..=steps).step_by(every).collect();
    if *v.last().expect("contains 0") != steps {
        v.push(steps);
    }
    v
}

/// Trains on `data` with noisy gradient descent and accumulates, for every
/// neighbor, `Σ_k η‖∇L(W_k; D) − ∇L(W_k; D′)‖²/(k_c·σ²)`.
///
/// Run `r` draws its initialization and noise from `RngStream::new(seed, r)`,
/// so results do not depend on how runs are scheduled.
pub fn run_kl_estimation(
    model: &Model,
    data: &Dataset,
    neighbors: &NeighborSet,
    cfg: &TrainConfig,
) -> Result<KlEstimate> {
    cfg.validate()?;
    let arch = model.arch();
    if neighbors.is_empty() {
        return Err(Error::InvalidParameter("neighbor set is empty".into()));
    }
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
    cfg.loss.check_outputs(arch.output_dim())?;
    for y in data.labels() {
        cfg.loss.check_label(y, arch.output_dim())?;
    }
    let all = match neighbors.pool() {
        Some(pool)
            if neighbors
                .neighbors()
                .iter()
                .any(|nb| !matches!(nb, Neighbor::Remove(_))) =>
        {
            for y in pool.labels() {
                cfg.loss.check_label(y, arch.output_dim())?;
            }
            data.concat(pool)?
        }
        _ => data.clone(),
    };
    let betas = init_betas(model.scheme(), arch)?;
    let record_steps = record_points(cfg.steps, cfg.record_every);
    let runs: Vec<KlTrace> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let stream = RngStream::new(cfg.seed, run as u64);
            let w0 = sample_init(arch, &betas, &stream.child(0))?;
            match model {
                Model::Dnn { .. } => {
                    let source = DnnSource {
                        inputs: all.features().clone(),
                        labels: all.labels().to_vec(),
                        n: data.len(),
                        loss: cfg.loss,
                    };
                    train_run(
                        &source,
                        w0,
                        data.len(),
                        neighbors.neighbors(),
                        cfg,
                        &stream,
                        run,
                        &record_steps,
                    )
                }
                Model::Linearized { .. } => {
                    let features = build_features(&w0, &all)?;
                    let source = LinearSource {
                        jac_gram: features.jacobian_gram(),
                        features,
                        labels: all.labels().to_vec(),
                        n: data.len(),
                        loss: cfg.loss,
                    };
                    train_run(
                        &source,
                        w0,
                        data.len(),
                        neighbors.neighbors(),
                        cfg,
                        &stream,
                        run,
                        &record_steps,
                    )
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(aggregate(neighbors.neighbors().to_vec(), record_steps, runs))
}

#[allow(clippy::too_many_arguments)]
fn train_run(
    source: &dyn GradientSource,
    mut w: ParamVector,
    n: usize,
    neighbors: &[Neighbor],
    cfg: &TrainConfig,
    stream: &RngStream,
    run: usize,
    record_steps: &[usize],
) -> Result<KlTrace> {
    let mut rng = stream.child(1).generator();
    let mut noise = Vec::new();
    let mut cumulative = vec![0.0; neighbors.len()];
    let mut trace = KlTrace {
        run,
        per_step: Vec::with_capacity(cfg.steps),
        record_steps: record_steps.to_vec(),
        cumulative_worst: Vec::with_capacity(record_steps.len()),
        cumulative_per_neighbor: Vec::with_capacity(record_steps.len()),
        diverged_at: None,
    };
    let mut next_record = 0;
    let record = |trace: &mut KlTrace, cumulative: &[f64]| {
        trace
            .cumulative_worst
            .push(cumulative.iter().cloned().fold(0.0, f64::max));
        trace.cumulative_per_neighbor.push(cumulative.to_vec());
    };
    record(&mut trace, &cumulative);
    next_record += 1;
    for k in 0..cfg.steps {
        let eval = match source.evaluate(&w) {
            Ok(e) => e,
            Err(Error::NonFinite(_)) => {
                trace.diverged_at = Some(k);
                break;
            }
            Err(e) => return Err(e),
        };
        let grad_norm = eval.mean_grad.norm_sq().sqrt();
        if grad_norm.is_nan() || grad_norm > DIVERGENCE_THRESHOLD || !eval.gram.is_finite() {
            trace.diverged_at = Some(k);
            break;
        }
        let diffs = neighbor_diffs_from_gram(&eval.gram, n, neighbors)?;
        for (c, d) in cumulative.iter_mut().zip(&diffs) {
            *c += cfg.kl_constant.step_kl(cfg.eta, *d, cfg.sigma2);
        }
        trace.per_step.push(diffs);
        step_in_place(
            &mut w,
            &eval.mean_grad,
            cfg.eta,
            cfg.noise_sigma2(),
            &mut rng,
            &mut noise,
        )?;
        if next_record < record_steps.len() && record_steps[next_record] == k + 1 {
            record(&mut trace, &cumulative);
            next_record += 1;
        }
    }
    while trace.cumulative_worst.len() < record_steps.len() {
        trace.cumulative_worst.push(f64::INFINITY);
        trace.cumulative_per_neighbor.push(vec![f64::INFINITY; neighbors.len()]);
    }
    Ok(trace)
}

fn aggregate(neighbors: Vec<Neighbor>, record_steps: Vec<usize>, runs: Vec<KlTrace>) -> KlEstimate {
    let r = runs.len() as f64;
    let points = record_steps.len();
    let mut mean_worst = Vec::with_capacity(points);
    let mut std_worst = Vec::with_capacity(points);
    let mut mean_per_neighbor = Vec::with_capacity(points);
    for t in 0..points {
        let values: Vec<f64> = runs.iter().map(|run| run.cumulative_worst[t]).collect();
        let mean = values.iter().sum::<f64>() / r;
        let var = if mean.is_finite() {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / r
        } else {
            f64::INFINITY
        };
        mean_worst.push(mean);
        std_worst.push(var.sqrt());
        let per: Vec<f64> = (0..neighbors.len())
            .map(|j| runs.iter().map(|run| run.cumulative_per_neighbor[t][j]).sum::<f64>() / r)
            .collect();
        mean_per_neighbor.push(per);
    }
    KlEstimate {
        neighbors,
        record_steps,
        runs,
        mean_worst,
        std_worst,
        mean_per_neighbor,
    }
}
