//! Analytic KL bounds: the linearized bound from the gradient-norm constant,
//! and the drift bound when smoothness constants are supplied.

use langevin_kl::accountant::{
    dnn_drift_bound, gradient_norm_constant, gradient_norm_constant_closed_form, kl_bound_linearized, kl_to_dp_delta,
    tradeoff_schedule, DnnBoundInputs, MomentSource,
};
use langevin_kl::network::init_betas;

use super::load_data;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Report, Table};

pub fn run(cfg: &mut RunConfig) -> Result<Report, CliError> {
    let n = load_data(cfg, false)?.train.len();
    let arch = cfg.arch()?;
    let time = cfg.train_time();
    if !(time >= 0.0 && time.is_finite()) {
        return Err(CliError::Config(format!(
            "training time must be finite and >= 0, got {time}"
        )));
    }
    let uniform = arch.hidden_widths().windows(2).all(|w| w[0] == w[1]);
    let drift = match (cfg.c, cfg.beta_smooth, cfg.rank_mt) {
        (Some(c), Some(beta), Some(rank)) => Some((c, beta, rank)),
        (None, None, None) => None,
        _ => {
            return Err(CliError::Config(
                "the drift bound needs all of c, beta_smooth and rank_mt".into(),
            ))
        }
    };

    let mut table = Table::new(&["scheme", "metric", "value"]);
    table.note(format!("n {n}, T {time}, architecture {arch}"));
    for scheme in cfg.scheme.schemes() {
        let betas = init_betas(&scheme, &arch)?;
        let b = gradient_norm_constant(&arch, &betas)?;
        table.row(&[&scheme, &"grad_norm_constant", &b]);
        if uniform {
            let m = arch.hidden_widths()[0];
            if let Some(closed) =
                gradient_norm_constant_closed_form(&scheme, arch.input_dim(), m, arch.depth(), arch.output_dim())
            {
                table.row(&[&scheme, &"closed_form", &closed]);
            }
        }
        let kl = kl_bound_linearized(b, time, n, cfg.sigma2)?;
        table.row(&[&scheme, &"kl_linearized", &kl]);
        table.row(&[&scheme, &"dp_delta", &kl_to_dp_delta(kl)?]);

        if let Some((c, beta_smooth, rank_mt)) = drift {
            // Without measured moments, fall back to the init-time bounds
            // E|grad L|^2 <= B and E|grad L(D) - grad L(D')|^2 <= 4B/n^2.
            let n2 = (n as f64).powi(2);
            let moments = if cfg.e_delta0.is_some() && cfg.e_grad0.is_some() {
                MomentSource::User
            } else {
                MomentSource::Analytic
            };
            let inputs = DnnBoundInputs {
                time,
                n,
                sigma2: cfg.sigma2,
                c,
                beta_smooth,
                rank_mt,
                e_delta0: cfg.e_delta0.unwrap_or(4.0 * b / n2),
                e_grad0: cfg.e_grad0.unwrap_or(b),
                moments,
            };
            let report = dnn_drift_bound(&inputs, cfg.kl_constant)?;
            table.row(&[&scheme, &"drift_kl", &report.value]);
            table.row(&[&scheme, &"drift_integral", &report.integral]);
            table.row(&[&scheme, &"drift_init_difference", &report.terms.init_difference]);
            table.row(&[&scheme, &"drift_fluctuation", &report.terms.fluctuation]);
            table.row(&[&scheme, &"drift_non_smoothness", &report.terms.non_smoothness]);
            table.row(&[
                &scheme,
                &"drift_exponential_regime",
                &u8::from(report.exponential_regime),
            ]);
            table.row(&[&scheme, &"drift_moments", &report.moments]);
        }

        if let (Some(eps), Some(r)) = (cfg.epsilon, cfg.lazy_r) {
            let t = tradeoff_schedule(b, r, eps, n)?;
            table.row(&[&scheme, &"tradeoff_sigma2", &t.sigma2]);
            table.row(&[&scheme, &"tradeoff_time", &t.time]);
            table.row(&[&scheme, &"tradeoff_risk_bound", &t.risk_bound]);
        }
    }
    Ok(Report::new(table))
}
