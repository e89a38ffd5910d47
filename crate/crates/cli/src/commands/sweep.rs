//! Grid over schemes, widths and depths, in long format.

use rayon::prelude::*;

use langevin_kl::accountant::{gradient_norm_constant, kl_bound_linearized};
use langevin_kl::estimator::run_kl_estimation;
use langevin_kl::network::init_betas;
use langevin_kl::{Dataset, InitScheme, NeighborSet, NetArch};

use super::estimate::{model, train_config};
use super::{load_data, needs_pool, neighbor_set, record_points};
use crate::config::{RunConfig, SweepMetric};
use crate::error::CliError;
use crate::output::{Report, Status, Table};

#[derive(Debug, Clone)]
enum Value {
    Number(f64),
    Error(String),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Number(v) => write!(f, "{v}"),
            Value::Error(m) => f.write_str(m),
        }
    }
}

struct Cell {
    scheme_index: usize,
    scheme: InitScheme,
    width: usize,
    depth: usize,
}

struct CellResult {
    rows: Vec<(usize, &'static str, Value)>,
    diverged: bool,
}

fn evaluate(
    cfg: &RunConfig,
    cell: &Cell,
    data: &Dataset,
    neighbors: Option<&NeighborSet>,
) -> Result<CellResult, langevin_kl::Error> {
    let arch = NetArch::uniform(data.dim(), cell.width, cell.depth, cfg.outputs)?;
    let mut rows = Vec::new();
    let mut diverged = false;
    if cfg.metric != SweepMetric::Empirical {
        let b = gradient_norm_constant(&arch, &init_betas(&cell.scheme, &arch)?)?;
        rows.push((0, "grad_norm_constant", Value::Number(b)));
        for step in record_points(cfg.steps, cfg.record_every) {
            let kl = kl_bound_linearized(b, cfg.eta * step as f64, data.len(), cfg.sigma2)?;
            rows.push((step, "kl_bound", Value::Number(kl)));
        }
    }
    if let Some(neighbors) = neighbors {
        let est = run_kl_estimation(
            &model(cfg.model, arch, cell.scheme.clone()),
            data,
            neighbors,
            &train_config(cfg),
        )?;
        for (i, &step) in est.record_steps.iter().enumerate() {
            rows.push((step, "kl_mean", Value::Number(est.mean_worst[i])));
            rows.push((step, "kl_std", Value::Number(est.std_worst[i])));
        }
        let count = est.runs.iter().filter(|r| r.diverged_at.is_some()).count();
        if count > 0 {
            diverged = true;
            rows.push((cfg.steps, "diverged_runs", Value::Number(count as f64)));
        }
    }
    // Stable sort keeps the metric order within an epoch.
    rows.sort_by_key(|r| r.0);
    Ok(CellResult { rows, diverged })
}

pub fn run(cfg: &mut RunConfig) -> Result<Report, CliError> {
    let empirical = cfg.metric != SweepMetric::Analytic;
    let data = load_data(cfg, empirical && needs_pool(cfg.neighbor))?;
    let neighbors = if empirical {
        Some(neighbor_set(cfg, &data)?)
    } else {
        None
    };
    let mut cells = Vec::new();
    for (scheme_index, scheme) in cfg.scheme.schemes().into_iter().enumerate() {
        for &width in &cfg.width {
            for &depth in &cfg.depth {
                cells.push(Cell {
                    scheme_index,
                    scheme: scheme.clone(),
                    width,
                    depth,
                });
            }
        }
    }

    let results: Vec<Result<CellResult, langevin_kl::Error>> = cells
        .par_iter()
        .map(|cell| evaluate(cfg, cell, &data.train, neighbors.as_ref()))
        .collect();

    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by_key(|&i| (cells[i].scheme_index, cells[i].width, cells[i].depth));
    let mut table = Table::new(&["scheme", "width", "depth", "epoch", "metric", "value"]);
    let mut status = Status::Ok;
    for i in order {
        let cell = &cells[i];
        match &results[i] {
            Ok(result) => {
                if result.diverged {
                    status = Status::Diverged;
                }
                for (epoch, metric, value) in &result.rows {
                    table.row(&[&cell.scheme, &cell.width, &cell.depth, epoch, metric, value]);
                }
            }
            Err(e) => {
                eprintln!(
                    "warning: cell {} width {} depth {} failed: {e}",
                    cell.scheme, cell.width, cell.depth
                );
                let value = Value::Error(e.to_string());
                table.row(&[&cell.scheme, &cell.width, &cell.depth, &0, &"error", &value]);
            }
        }
    }
    let mut report = Report::new(table);
    report.status = status;
    Ok(report)
}
