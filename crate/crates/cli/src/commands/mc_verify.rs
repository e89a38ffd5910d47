//! Monte Carlo checks of the initialization moments against their closed
//! forms.

use langevin_kl::estimator::{
    mc_grad_norm_at_init, mc_linearized_grad_diff, mc_output_sqnorm, McReport, ReferenceKind,
};
use langevin_kl::numerics::norm_sq;
use langevin_kl::{Label, RngStream};

use super::{data_stream, load_data};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Report, Status, Table};

/// Largest accepted `|z|`.
pub const Z_MAX: f64 = 4.0;

/// Point on the sphere of squared radius `norm_sq`.
fn probe_input(d: usize, norm_sq_target: f64, stream: &RngStream) -> Result<Vec<f64>, CliError> {
    if !(norm_sq_target >= 0.0 && norm_sq_target.is_finite()) {
        return Err(CliError::Config(format!(
            "input_norm_sq must be >= 0, got {norm_sq_target}"
        )));
    }
    let mut x = langevin_kl::numerics::gaussian_matrix(1, d, 1.0, stream)?.into_vec();
    let scale = (norm_sq_target / norm_sq(&x)).sqrt();
    x.iter_mut().for_each(|v| *v *= scale);
    Ok(x)
}

pub fn run(cfg: &mut RunConfig) -> Result<Report, CliError> {
    let n = load_data(cfg, false)?.train.len();
    let arch = cfg.arch()?;
    let d = arch.input_dim();
    let target = cfg.input_norm_sq.unwrap_or(d as f64);
    let root = data_stream(cfg.seed);
    let x = probe_input(d, target, &root.child(4))?;
    let x2 = probe_input(d, target, &root.child(5))?;

    let mut table = Table::new(&["check", "scheme", "mean", "reference", "stderr", "z", "kind", "pass"]);
    let mut status = Status::Ok;
    let mut add = |table: &mut Table, check: &str, scheme: &dyn std::fmt::Display, r: &McReport| {
        let pass = r.passes(Z_MAX);
        if !pass {
            status = Status::Failed;
        }
        let kind = match r.kind {
            ReferenceKind::Equality => "equality",
            ReferenceKind::UpperBound => "upper-bound",
        };
        table.row(&[
            &check,
            scheme,
            &r.mean,
            &r.reference,
            &r.stderr,
            &r.z_score,
            &kind,
            &pass,
        ]);
        eprintln!(
            "{check:<22} {scheme:<8} mean {:<12.6e} reference {:<12.6e} z {:+.3} {}",
            r.mean,
            r.reference,
            r.z_score,
            if pass { "PASS" } else { "FAIL" }
        );
    };
    for (k, scheme) in cfg.scheme.schemes().iter().enumerate() {
        let stream = RngStream::new(cfg.seed, k as u64).child(7);
        let r = mc_grad_norm_at_init(&arch, scheme, &x, cfg.samples, &stream.child(0))?;
        add(&mut table, "grad_norm_init", scheme, &r);
        let r = mc_output_sqnorm(&arch, scheme, &x, cfg.samples, &stream.child(1))?;
        add(&mut table, "output_sqnorm_init", scheme, &r);
        if arch.output_dim() == 1 {
            if target > d as f64 {
                eprintln!("note: skipping the gradient difference check, which needs input_norm_sq <= d");
                continue;
            }
            let r = mc_linearized_grad_diff(
                &arch,
                scheme,
                (&x, Label::Sign(1.0)),
                (&x2, Label::Sign(-1.0)),
                n,
                cfg.samples,
                &stream.child(2),
            )?;
            add(&mut table, "linearized_grad_diff", scheme, &r);
        }
    }
    let mut report = Report::new(table);
    report.status = status;
    Ok(report)
}
