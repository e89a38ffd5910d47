//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p langevin-kl --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use langevin_kl::accountant::{
    dnn_drift_bound, gradient_norm_constant, kl_bound_linearized, tradeoff_schedule, DnnBoundInputs, KlConvention,
    MomentSource,
};
use langevin_kl::data::{
    enumerate_neighbors, holdout_split, synth_sphere, LabelRule, NeighborNotion, DEFAULT_REPLACE_CAP,
};
use langevin_kl::estimator::{
    mc_grad_norm_at_init, mc_output_sqnorm, run_kl_estimation, train_linearized, Model, TrainConfig,
};
use langevin_kl::linearized::{build_features, lazy_solution};
use langevin_kl::network::{forward, init_betas, per_example_grad, sample_init, InitScheme, Label, LossKind, NetArch};
use langevin_kl::numerics::{norm_sq, RngStream};
use langevin_kl::ParamVector;
use rand::Rng;

type Criterion = (&'static str, fn() -> Outcome, Duration);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs())
    }
}

fn schemes() -> [InitScheme; 4] {
    InitScheme::NAMED
}

/// Uniform-width closed forms of the gradient-norm constant, one per scheme.
fn closed_form(scheme: &InitScheme, d: f64, m: f64, l: f64, o: f64) -> f64 {
    match scheme {
        InitScheme::LeCun => o * m * (l - 1.0 + d / m) / 2f64.powf(l - 1.0),
        InitScheme::He => o * m * (l - 1.0 + d / m),
        InitScheme::Ntk => d * m * ((l - 1.0) / 2.0 + o / m),
        InitScheme::Xavier => {
            o * d * (l - 1.0 + (d + o) / (2.0 * m)) / (2f64.powf(l - 3.0) * (1.0 + d / m) * (1.0 + o / m))
        }
        InitScheme::Custom(_) => unreachable!(),
    }
}

fn c1_table_algebra() -> Outcome {
    let mut worst = 0.0f64;
    for d in [4usize, 16] {
        for m in [8usize, 64] {
            for l in [2usize, 3, 6] {
                for o in [1usize, 3] {
                    let arch = NetArch::uniform(d, m, l, o).unwrap();
                    for s in schemes() {
                        let generic = gradient_norm_constant(&arch, &init_betas(&s, &arch).unwrap()).unwrap();
                        let closed = closed_form(&s, d as f64, m as f64, l as f64, o as f64);
                        worst = worst.max(rel(generic, closed));
                    }
                }
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max rel err {worst:.2e} over 96 cells (tol 1e-12)"),
    )
}

fn sphere_point(d: usize, seed: u64) -> Vec<f64> {
    synth_sphere(1, d, &RngStream::new(seed, 0), &LabelRule::RandomSign)
        .unwrap()
        .input(0)
        .to_vec()
}

fn c2_grad_norm_mc() -> Outcome {
    let arch = NetArch::uniform(8, 32, 4, 3).unwrap();
    let x = sphere_point(8, 20);
    let mut zs = Vec::new();
    let mut pass = (norm_sq(&x) - 8.0).abs() < 1e-12;
    for (k, s) in schemes().iter().enumerate() {
        let r = mc_grad_norm_at_init(&arch, s, &x, 4000, &RngStream::new(200, k as u64)).unwrap();
        pass &= r.z_score.abs() <= 4.0;
        zs.push(format!("{s} z={:+.3}", r.z_score));
    }
    outcome(pass, format!("{} (|z| <= 4)", zs.join(", ")))
}

fn c3_output_norm_mc() -> Outcome {
    let arch = NetArch::uniform(8, 32, 4, 1).unwrap();
    let x = sphere_point(8, 30);
    let mut zs = Vec::new();
    let mut pass = true;
    for (k, s) in schemes().iter().enumerate() {
        let r = mc_output_sqnorm(&arch, s, &x, 4000, &RngStream::new(300, k as u64)).unwrap();
        pass &= r.z_score.abs() <= 4.0;
        zs.push(format!("{s} z={:+.3}", r.z_score));
    }
    outcome(pass, format!("{} (|z| <= 4)", zs.join(", ")))
}

fn central_difference(w: &ParamVector, f: impl Fn(&ParamVector) -> f64, h: f64) -> Vec<f64> {
    let mut probe = w.clone();
    (0..w.len())
        .map(|i| {
            let orig = probe.as_slice()[i];
            probe.as_mut_slice()[i] = orig + h;
            let up = f(&probe);
            probe.as_mut_slice()[i] = orig - h;
            let down = f(&probe);
            probe.as_mut_slice()[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn min_abs_preactivation(w: &ParamVector, x: &[f64]) -> f64 {
    let pass = forward(w, x).unwrap();
    let arch = w.arch();
    let mut min = f64::INFINITY;
    for l in 0..arch.depth() - 1 {
        let pre = w.layer_matrix(l).matvec(&pass.activations[l]).unwrap();
        min = pre.iter().fold(min, |m, v| m.min(v.abs()));
    }
    min
}

fn c4_backprop_vs_fd() -> Outcome {
    let arch = NetArch::uniform(5, 7, 3, 2).unwrap();
    let betas = init_betas(&InitScheme::He, &arch).unwrap();
    let w = sample_init(&arch, &betas, &RngStream::new(400, 0)).unwrap();
    let mut rng = RngStream::new(400, 1).generator();
    let loss = LossKind::CrossEntropyMulti;
    let (mut checked, mut resampled, mut worst) = (0, 0, 0.0f64);
    while checked < 20 {
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.5..1.5)).collect();
        if min_abs_preactivation(&w, &x) < 1e-3 {
            resampled += 1;
            continue;
        }
        let y = Label::Class(rng.random_range(0..2));
        let g = per_example_grad(&w, &x, &y, loss).unwrap();
        let fd = central_difference(&w, |p| loss.value(&forward(p, &x).unwrap().output, &y), 1e-6);
        let err: f64 = g
            .as_slice()
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(err / norm_sq(&fd).sqrt());
        checked += 1;
    }
    outcome(
        worst <= 1e-5,
        format!("max rel err {worst:.2e} over 20 inputs, {resampled} resampled (tol 1e-5)"),
    )
}

/// KL between `N(mu1, diag(v1))` and `N(mu2, diag(v2))`.
fn gaussian_kl(mu1: &[f64], v1: &[f64], mu2: &[f64], v2: &[f64]) -> f64 {
    let k = mu1.len() as f64;
    let trace: f64 = v1.iter().zip(v2).map(|(a, b)| a / b).sum();
    let quad: f64 = mu1.iter().zip(mu2).zip(v2).map(|((a, b), v)| (b - a).powi(2) / v).sum();
    let logdet: f64 = v1.iter().zip(v2).map(|(a, b)| (b / a).ln()).sum();
    0.5 * (trace - k + quad + logdet)
}

fn c5_one_step_oracle() -> Outcome {
    let mut rng = RngStream::new(500, 0).generator();
    let (eta, sigma2) = (0.03, 0.2);
    let mut worst_paper = 0.0f64;
    let mut worst_exact = 0.0f64;
    for _ in 0..50 {
        let w: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
        let h: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
        let diff_sq: f64 = g.iter().zip(&h).map(|(a, b)| (a - b).powi(2)).sum();
        let paper = KlConvention::PaperHalfSigma2.step_kl(eta, diff_sq, sigma2);
        worst_paper = worst_paper.max(rel(paper, eta * diff_sq / (2.0 * sigma2)));
        let mu1: Vec<f64> = w.iter().zip(&g).map(|(w, g)| w - eta * g).collect();
        let mu2: Vec<f64> = w.iter().zip(&h).map(|(w, h)| w - eta * h).collect();
        let var = vec![2.0 * eta * sigma2; 6];
        let exact = KlConvention::ExactGaussianQuarterSigma2.step_kl(eta, diff_sq, sigma2);
        worst_exact = worst_exact.max(rel(exact, gaussian_kl(&mu1, &var, &mu2, &var)));
    }

    // Same contribution through the estimator: one step from the sampled init.
    let arch = NetArch::uniform(4, 8, 3, 1).unwrap();
    let data = synth_sphere(6, 4, &RngStream::new(501, 0), &LabelRule::RandomSign).unwrap();
    let neighbors = enumerate_neighbors(&data, NeighborNotion::RemoveOne, None, 256, &RngStream::new(0, 0)).unwrap();
    let model = Model::Dnn {
        arch: arch.clone(),
        scheme: InitScheme::He,
    };
    let mut worst_run = 0.0f64;
    for convention in [KlConvention::PaperHalfSigma2, KlConvention::ExactGaussianQuarterSigma2] {
        let cfg = TrainConfig {
            eta,
            steps: 1,
            sigma2,
            runs: 1,
            seed: 502,
            kl_constant: convention,
            ..TrainConfig::new(LossKind::LogisticSingle)
        };
        let est = run_kl_estimation(&model, &data, &neighbors, &cfg).unwrap();
        let w0 = sample_init(
            &arch,
            &init_betas(&InitScheme::He, &arch).unwrap(),
            &RngStream::new(502, 0).child(0),
        )
        .unwrap();
        let grads: Vec<Vec<f64>> = data
            .iter()
            .map(|(x, y)| per_example_grad(&w0, x, y, cfg.loss).unwrap().into_vec())
            .collect();
        let n = grads.len() as f64;
        let total: Vec<f64> = (0..w0.len()).map(|k| grads.iter().map(|g| g[k]).sum()).collect();
        for (i, got) in est.mean_per_neighbor[1].iter().enumerate() {
            let diff_sq: f64 = (0..w0.len())
                .map(|k| (total[k] / n - (total[k] - grads[i][k]) / (n - 1.0)).powi(2))
                .sum();
            let denom = if convention == KlConvention::PaperHalfSigma2 {
                2.0
            } else {
                4.0
            };
            worst_run = worst_run.max(rel(*got, eta * diff_sq / (denom * sigma2)));
        }
    }
    let pass = worst_paper <= 4.0 * f64::EPSILON && worst_exact <= 1e-12 && worst_run <= 1e-12;
    outcome(
        pass,
        format!(
            "paper rel {worst_paper:.1e}, exact-vs-Gaussian rel {worst_exact:.1e}, estimator one-step rel {worst_run:.1e}"
        ),
    )
}

fn c6_linearized_diff_bound() -> Outcome {
    let (d, n, m) = (16, 32, 64);
    let arch = NetArch::uniform(d, m, 3, 1).unwrap();
    let all = synth_sphere(n + 8, d, &RngStream::new(600, 0), &LabelRule::RandomSign).unwrap();
    let (data, pool) = holdout_split(&all, 8, &RngStream::new(600, 1)).unwrap();
    let neighbors = enumerate_neighbors(
        &data,
        NeighborNotion::ReplaceOne,
        Some(&pool),
        DEFAULT_REPLACE_CAP,
        &RngStream::new(600, 2),
    )
    .unwrap();
    let cfg = TrainConfig {
        eta: 0.01,
        steps: 100,
        sigma2: 0.01,
        runs: 20,
        seed: 601,
        ..TrainConfig::new(LossKind::LogisticSingle)
    };
    let model = Model::Linearized {
        arch: arch.clone(),
        scheme: InitScheme::LeCun,
    };
    let est = run_kl_estimation(&model, &data, &neighbors, &cfg).unwrap();
    let mut total = 0.0;
    let mut count = 0.0;
    for run in &est.runs {
        for step in &run.per_step {
            total += step.iter().cloned().fold(0.0, f64::max);
            count += 1.0;
        }
    }
    let mean = total / count;
    let b = gradient_norm_constant(&arch, &init_betas(&InitScheme::LeCun, &arch).unwrap()).unwrap();
    let bound = 4.0 * b / (n * n) as f64;
    outcome(
        mean <= 1.2 * bound && !est.diverged(),
        format!(
            "mean worst-case sq diff {mean:.4e} vs 1.2*4B/n^2 = {:.4e} ({} neighbors)",
            1.2 * bound,
            neighbors.len()
        ),
    )
}

fn c7_lazy_solution() -> Outcome {
    let (n, d) = (16, 64);
    let arch = NetArch::uniform(d, 128, 2, 1).unwrap();
    let w0 = sample_init(
        &arch,
        &init_betas(&InitScheme::LeCun, &arch).unwrap(),
        &RngStream::new(700, 0),
    )
    .unwrap();
    let data = synth_sphere(n, d, &RngStream::new(700, 1), &LabelRule::RandomSign).unwrap();
    let f = build_features(&w0, &data).unwrap();
    let sol = lazy_solution(&f, data.labels(), 0.0).unwrap();
    let scale = 2.0 * (n as f64).ln();
    let preds = f.lin_forward(&sol.w_star).unwrap();
    let mut fit = 0.0f64;
    for (i, y) in data.labels().iter().enumerate() {
        let Label::Sign(y) = y else { unreachable!() };
        fit = fit.max(rel(preds.row(i)[0], scale * y));
    }
    let target_loss = (1.0 + 1.0 / (n * n) as f64).ln();
    let loss_err = rel(sol.achieved_loss, target_loss);
    let moved = sol.w_star.difference(&w0).unwrap().norm_sq();
    let r_err = rel(sol.r, moved);
    let below = sol.achieved_loss < 1.0 / (n * n) as f64;
    outcome(
        fit <= 1e-6 && loss_err <= 1e-9 && r_err <= 1e-9 && below,
        format!(
            "fit rel {fit:.1e} (1e-6), loss rel {loss_err:.1e} (1e-9), loss {:.6} < 1/n^2 {below}, R={:.4} consistency {r_err:.1e} (1e-9)",
            sol.achieved_loss, sol.r
        ),
    )
}

fn c8_convergence_bound() -> Outcome {
    let (n, d, m) = (16, 32, 64);
    let (eta, steps, sigma2) = (0.05, 2000, 1e-4);
    let time = eta * steps as f64;
    let arch = NetArch::uniform(d, m, 2, 1).unwrap();
    let betas = init_betas(&InitScheme::LeCun, &arch).unwrap();
    let (mut excess, mut bound) = (0.0, 0.0);
    let seeds = 10;
    for seed in 0..seeds {
        let stream = RngStream::new(800 + seed, 0);
        let data = synth_sphere(n, d, &stream.child(0), &LabelRule::RandomSign).unwrap();
        let w0 = sample_init(&arch, &betas, &stream.child(1)).unwrap();
        let f = build_features(&w0, &data).unwrap();
        let sol = lazy_solution(&f, data.labels(), 0.0).unwrap();
        let rank = langevin_kl::linearized::gram_analysis(&f, langevin_kl::numerics::DEFAULT_RANK_TOL)
            .unwrap()
            .rank;
        let run = train_linearized(
            &f,
            data.labels(),
            LossKind::LogisticSingle,
            eta,
            steps,
            sigma2,
            &stream.child(2),
        )
        .unwrap();
        // The infimum of the logistic loss is 0 on an interpolable sample.
        excess += run.average_loss;
        bound += sol.alpha_gap + sol.r / (2.0 * time) + sigma2 * rank as f64 / 2.0;
    }
    excess /= seeds as f64;
    bound /= seeds as f64;
    outcome(
        excess <= 1.3 * bound,
        format!("mean excess {excess:.4e} vs 1.3 x bound {:.4e}", 1.3 * bound),
    )
}

fn c9_width_and_scheme_trends() -> Outcome {
    let (n, d, depth) = (64, 32, 6);
    let widths = [16usize, 64, 256];
    let stream = RngStream::new(900, 0);
    let teacher = synth_sphere(1, d, &stream.child(0), &LabelRule::RandomSign)
        .unwrap()
        .input(0)
        .to_vec();
    let data = synth_sphere(n, d, &stream.child(1), &LabelRule::LinearTeacher(teacher)).unwrap();
    let neighbors = enumerate_neighbors(&data, NeighborNotion::RemoveOne, None, 256, &stream).unwrap();
    let cfg = TrainConfig {
        eta: 1e-3,
        steps: 200,
        sigma2: 1e-2,
        runs: 6,
        seed: 901,
        record_every: 50,
        ..TrainConfig::new(LossKind::LogisticSingle)
    };
    // (scheme, width) -> (KL at step 50, KL at step 200)
    let mut table = Vec::new();
    for s in schemes() {
        for &m in &widths {
            let arch = NetArch::uniform(d, m, depth, 1).unwrap();
            let est = run_kl_estimation(
                &Model::Dnn {
                    arch,
                    scheme: s.clone(),
                },
                &data,
                &neighbors,
                &cfg,
            )
            .unwrap();
            let at = |step: usize| est.mean_worst[est.record_steps.iter().position(|&k| k == step).unwrap()];
            table.push((s.clone(), m, at(50), at(200)));
        }
    }
    let lookup = |s: &InitScheme, m: usize| table.iter().find(|r| &r.0 == s && r.1 == m).unwrap();
    let mut pass = true;
    let mut notes = Vec::new();
    for s in schemes() {
        let ends: Vec<f64> = widths.iter().map(|&m| lookup(&s, m).3).collect();
        let increasing = ends.windows(2).all(|w| w[0] < w[1]);
        pass &= increasing;
        notes.push(format!(
            "{s} {:.2e}<{:.2e}<{:.2e} {}",
            ends[0],
            ends[1],
            ends[2],
            if increasing { "ok" } else { "NO" }
        ));
    }
    let mut early_ok = true;
    for &m in &widths {
        let he = lookup(&InitScheme::He, m).2;
        early_ok &= lookup(&InitScheme::LeCun, m).2 < he && lookup(&InitScheme::Xavier, m).2 < he;
    }
    pass &= early_ok;
    notes.push(format!("step-50 LeCun,Xavier < He at all widths: {early_ok}"));
    outcome(pass, notes.join("; "))
}

fn c10_tradeoff() -> Outcome {
    let mut rng = RngStream::new(1000, 0).generator();
    let (mut kl_err, mut balance_err, mut risk_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let b = 10f64.powf(rng.random_range(-2.0..3.0));
        let r = 10f64.powf(rng.random_range(-2.0..3.0));
        let eps = 10f64.powf(rng.random_range(-2.0..1.0));
        let n = rng.random_range(1..10_000usize);
        let t = tradeoff_schedule(b, r, eps, n).unwrap();
        let nf = n as f64;
        kl_err = kl_err.max(rel(kl_bound_linearized(b, t.time, n, t.sigma2).unwrap(), eps));
        balance_err = balance_err.max(rel(r / (2.0 * t.time), b * t.time / (eps * nf)));
        risk_err = risk_err.max(rel(t.risk_bound, 1.0 / (nf * nf) + (2.0 * b * r / (eps * nf)).sqrt()));
    }
    outcome(
        kl_err <= 1e-12 && balance_err <= 1e-12 && risk_err <= 1e-12,
        format!("KL=eps rel {kl_err:.1e}, balance rel {balance_err:.1e}, risk rel {risk_err:.1e} (tol 1e-12)"),
    )
}

fn c11_drift_bound() -> Outcome {
    let base = DnnBoundInputs {
        time: 0.0,
        n: 20,
        sigma2: 0.05,
        c: 0.7,
        beta_smooth: 1.3,
        rank_mt: 5,
        e_delta0: 0.4,
        e_grad0: 2.0,
        moments: MomentSource::User,
    };
    let zero = dnn_drift_bound(&base, KlConvention::PaperHalfSigma2).unwrap().value;
    let smooth = DnnBoundInputs {
        time: 3.0,
        beta_smooth: 0.0,
        ..base.clone()
    };
    let got = dnn_drift_bound(&smooth, KlConvention::PaperHalfSigma2)
        .unwrap()
        .integral;
    let n2 = 400.0;
    let closed = 2.0 * 3.0 * 0.4 + 2.0 * 0.49 * 3.0 / n2;
    let smooth_err = rel(got, closed);
    let t = 1e-8;
    let tiny = dnn_drift_bound(&DnnBoundInputs { time: t, ..base }, KlConvention::PaperHalfSigma2).unwrap();
    let limit = 2.0 * 0.4 + 2.0 * 0.49 / n2;
    let slope_err = rel(tiny.integral / t, limit);
    outcome(
        zero == 0.0 && smooth_err <= 2.0 * f64::EPSILON && slope_err <= 1e-6,
        format!("T=0 -> {zero}, beta=0 rel {smooth_err:.1e}, slope rel {slope_err:.1e} (1e-6)"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("table algebra", c1_table_algebra, Duration::from_secs(1)),
        ("gradient norm MC", c2_grad_norm_mc, Duration::from_secs(120)),
        ("output norm MC", c3_output_norm_mc, Duration::from_secs(60)),
        ("backprop vs FD", c4_backprop_vs_fd, Duration::from_secs(5)),
        ("one-step KL", c5_one_step_oracle, Duration::from_secs(1)),
        (
            "linearized diff bound",
            c6_linearized_diff_bound,
            Duration::from_secs(60),
        ),
        ("lazy solution", c7_lazy_solution, Duration::from_secs(30)),
        ("convergence bound", c8_convergence_bound, Duration::from_secs(300)),
        (
            "width/scheme trends",
            c9_width_and_scheme_trends,
            Duration::from_secs(600),
        ),
        ("trade-off schedule", c10_tradeoff, Duration::from_secs(1)),
        ("drift bound", c11_drift_bound, Duration::from_secs(1)),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} [{}] {name}: {} ({:.2}s of {}s)",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
