//! Lazy-training diagnostics of the linearized model at one initialization.

use langevin_kl::accountant::lazy_r_bound;
use langevin_kl::estimator::train_linearized;
use langevin_kl::linearized::{build_features, gram_analysis, lazy_solution};
use langevin_kl::network::{init_betas, sample_init};
use langevin_kl::numerics::DEFAULT_RANK_TOL;
use langevin_kl::{LossKind, RngStream};

use super::load_data;
use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::output::{Report, Status, Table};

pub fn run(cfg: &mut RunConfig) -> Result<Report, CliError> {
    if cfg.outputs != 1 {
        return Err(CliError::Config(format!("lazy needs outputs=1, got {}", cfg.outputs)));
    }
    let scheme = cfg.scheme.single(Command::Lazy)?.clone();
    let data = load_data(cfg, false)?.train;
    let arch = cfg.arch()?;
    let betas = init_betas(&scheme, &arch)?;
    // Same initialization as run 0 of `estimate`.
    let stream = RngStream::new(cfg.seed, 0);
    let w0 = sample_init(&arch, &betas, &stream.child(0))?;
    let features = build_features(&w0, &data)?;
    let gram = gram_analysis(&features, DEFAULT_RANK_TOL)?;
    let sol = lazy_solution(&features, data.labels(), cfg.ridge)?;
    let n = data.len();
    let inv_n2 = 1.0 / (n as f64).powi(2);

    let mut table = Table::new(&["metric", "value"]);
    table.row(&[&"n", &n]);
    table.row(&[&"lambda0", &gram.lambda0]);
    table.row(&[&"rank", &gram.rank]);
    table.row(&[&"r", &sol.r]);
    match lazy_r_bound(&arch, &betas, n) {
        Ok(bound) => table.row(&[&"r_bound", &bound]),
        Err(e) => eprintln!("note: no lazy-training bound: {e}"),
    }
    table.row(&[&"achieved_loss", &sol.achieved_loss]);
    table.row(&[&"inv_n2", &inv_n2]);
    table.row(&[&"below_inv_n2", &(sol.achieved_loss < inv_n2)]);
    table.row(&[&"alpha_gap", &sol.alpha_gap]);

    let mut status = Status::Ok;
    if cfg.steps > 0 {
        let run = train_linearized(
            &features,
            data.labels(),
            LossKind::LogisticSingle,
            cfg.eta,
            cfg.steps,
            cfg.sigma2,
            &stream.child(1),
        )?;
        let time = cfg.eta * cfg.steps as f64;
        let bound = sol.alpha_gap + sol.r / (2.0 * time) + cfg.sigma2 * gram.rank as f64 / 2.0;
        table.row(&[&"average_loss", &run.average_loss]);
        table.row(&[&"last_loss", &run.last_loss]);
        table.row(&[&"risk_bound", &bound]);
        table.row(&[&"within_bound", &(run.average_loss <= bound)]);
        if run.diverged {
            status = Status::Diverged;
        }
    }
    let mut report = Report::new(table);
    report.status = status;
    Ok(report)
}
