//! Empirical KL of noisy gradient descent between neighboring datasets.

use langevin_kl::estimator::{run_kl_estimation, KlEstimate, Model, TrainConfig};
use langevin_kl::NeighborSet;

use super::{load_data, loss_for, needs_pool, neighbor_set};
use crate::config::{Command, ModelKind, RunConfig};
use crate::error::CliError;
use crate::output::{Report, Status, Table};

pub fn train_config(cfg: &RunConfig) -> TrainConfig {
    TrainConfig {
        eta: cfg.eta,
        steps: cfg.steps,
        sigma2: cfg.sigma2,
        loss: loss_for(cfg.outputs),
        seed: cfg.seed,
        runs: cfg.runs,
        kl_constant: cfg.kl_constant,
        record_every: cfg.record_every,
        trajectory_sigma2: cfg.trajectory_sigma2,
    }
}

pub fn model(kind: ModelKind, arch: langevin_kl::NetArch, scheme: langevin_kl::InitScheme) -> Model {
    match kind {
        ModelKind::Dnn => Model::Dnn { arch, scheme },
        ModelKind::Linearized => Model::Linearized { arch, scheme },
    }
}

pub fn run(cfg: &mut RunConfig) -> Result<Report, CliError> {
    let scheme = cfg.scheme.single(Command::Estimate)?.clone();
    let data = load_data(cfg, needs_pool(cfg.neighbor))?;
    let arch = cfg.arch()?;
    let neighbors = neighbor_set(cfg, &data)?;
    let est = run_kl_estimation(
        &model(cfg.model, arch, scheme),
        &data.train,
        &neighbors,
        &train_config(cfg),
    )?;

    let mut trace = Table::new(&["epochs", "kl_means", "kl_stds"]);
    for ((step, mean), std) in est.record_steps.iter().zip(&est.mean_worst).zip(&est.std_worst) {
        trace.row(&[step, mean, std]);
    }
    let mut report = Report::new(trace);
    report.details.push(("neighbors", neighbor_table(&est, &neighbors)));
    report.details.push(("runs", run_table(&est)));
    if est.diverged() {
        report.status = Status::Diverged;
        eprintln!(
            "warning: {} of {} runs diverged",
            est.runs.iter().filter(|r| r.diverged_at.is_some()).count(),
            est.runs.len()
        );
    }
    Ok(report)
}

/// Final cumulative KL of each neighbor, averaged over runs.
fn neighbor_table(est: &KlEstimate, neighbors: &NeighborSet) -> Table {
    let mut table = Table::new(&["neighbor", "notion", "kl_mean"]);
    if neighbors.is_capped() {
        table.note(format!(
            "neighbor set subsampled to {} of {}",
            neighbors.len(),
            neighbors.total_before_cap()
        ));
    }
    if let Some(last) = est.mean_per_neighbor.last() {
        for (nb, kl) in est.neighbors.iter().zip(last) {
            table.row(&[nb, &nb.notion(), kl]);
        }
    }
    table
}

/// Worst-case cumulative KL of every run at every recorded step.
fn run_table(est: &KlEstimate) -> Table {
    let mut table = Table::new(&["run", "epoch", "kl_worst", "diverged_at"]);
    for run in &est.runs {
        let diverged = run.diverged_at.map(|s| s.to_string()).unwrap_or_default();
        for (step, kl) in run.record_steps.iter().zip(&run.cumulative_worst) {
            table.row(&[&run.run, step, kl, &diverged]);
        }
    }
    table
}
