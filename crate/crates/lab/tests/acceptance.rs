//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; exits non-zero if any fails.

use std::cell::OnceCell;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use dsbm_core::bounds::frobenius_lags;
use dsbm_core::*;
use dsbm_lab::commands::default_smoother;
use dsbm_lab::config::{default_lambdas, ExperimentConfig, MatrixChoice, MatrixKind};
use dsbm_lab::experiment::{generate, run_sweep, summarize, trial_seed, SweepSummary};
use dsbm_lab::verify::{default_weight_smoothers, epsilon_grid, verify_laplacian_inequality, verify_weights};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn balanced(n: usize, k: usize) -> CommunityLabels {
    CommunityLabels::new((0..n).map(|i| i * k / n).collect(), k).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn c1_exact_recovery() -> Outcome {
    let mut failures = Vec::new();
    for (n, k) in [(100, 2), (300, 3), (500, 5)] {
        for tau in [0.0, 0.3] {
            let truth = balanced(n, k);
            let p = build_probability_matrix(&truth, &ConnectivityModel::planted(k, 0.5, tau).unwrap()).unwrap();
            let l = normalized_laplacian(&p, ZeroDegreePolicy::Error).unwrap().matrix;
            for (name, m) in [("P", &p), ("L(P)", &l)] {
                let sc = spectral_cluster(m, k, &SpectralOptions::default()).unwrap();
                let e = misclassification_error(&sc.labels, &truth).unwrap().e_value;
                if e != 0.0 {
                    failures.push(format!("{name} n={n} K={k} tau={tau} E={e}"));
                }
            }
        }
    }
    outcome(failures.is_empty(), format!("12 cases, nonzero E: {failures:?}"))
}

/// Median normalised static errors for the adjacency and the Laplacian at
/// each `n`, 20 trials each.
fn static_concentration() -> Vec<(usize, f64, f64)> {
    let (k, tau, trials) = (3, 0.3, 20);
    [250, 500, 1000, 2000]
        .into_iter()
        .map(|n| {
            let alpha = 3.0 * (n as f64).ln() / n as f64;
            let model = ConnectivityModel::planted(k, alpha, tau).unwrap();
            let truth = balanced(n, k);
            let sizes = truth.sizes();
            let profile =
                effective_sizes(&model, n, *sizes.iter().min().unwrap(), *sizes.iter().max().unwrap()).unwrap();
            let p = build_probability_matrix(&truth, &model).unwrap();
            let lp = normalized_laplacian(&p, ZeroDegreePolicy::Error).unwrap().matrix;
            let errs: Vec<(f64, f64)> = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let a = sample_sbm(&truth, &model, seed::derive(0xC2, &[n as u64, trial])).unwrap().to_matrix();
                    let la = normalized_laplacian(&a, ZeroDegreePolicy::ZeroRow).unwrap().matrix;
                    let adj = spectral_norm(&a.sub(&p).unwrap()).unwrap();
                    let lap = spectral_norm(&la.sub(&lp).unwrap()).unwrap();
                    (adj, lap)
                })
                .collect();
            let nf = n as f64;
            let adj = median(errs.iter().map(|e| e.0).collect()) / (nf * alpha).sqrt();
            let lap = median(errs.iter().map(|e| e.1).collect()) * profile.nbar_min * alpha.sqrt()
                / (profile.mu_b * nf.sqrt());
            (n, adj, lap)
        })
        .collect()
}

fn c2_adjacency_scaling(rows: &[(usize, f64, f64)]) -> Outcome {
    let ratio = rows[3].1 / rows[0].1;
    let values: Vec<String> = rows.iter().map(|(n, a, _)| format!("n={n}:{a:.4}")).collect();
    outcome((1.0 / 1.5..=1.5).contains(&ratio), format!("{} ratio(2000/250)={ratio:.4} limit 1.5", values.join(" ")))
}

fn c3_laplacian_scaling(rows: &[(usize, f64, f64)]) -> Outcome {
    let ratios: Vec<f64> = rows.windows(2).map(|w| w[1].2 / w[0].2).collect();
    let ok = ratios.iter().all(|r| (0.5..=2.0).contains(r));
    let values: Vec<String> = rows.iter().map(|(n, _, l)| format!("n={n}:{l:.4}")).collect();
    outcome(ok, format!("{} doubling ratios={ratios:.4?} limit 2", values.join(" ")))
}

fn c4_smoothing_helps() -> Outcome {
    let base =
        ExperimentConfig { epsilon: 0.005, matrix: MatrixChoice::Adjacency, cluster: false, ..Default::default() };
    let smoother = default_smoother(&base, base.horizon).unwrap();
    let lambda = match smoother {
        SmootherKind::Exponential { lambda } => lambda,
        other => panic!("unexpected default smoother {other:?}"),
    };
    let cfg = ExperimentConfig { lambdas: vec![lambda, 1.0], windows: vec![], ..base };
    let s = summarize(&cfg, &run_sweep(&cfg).unwrap()).unwrap();
    let err = |l: f64| s.point(SmootherKind::Exponential { lambda: l }, MatrixKind::Adjacency).unwrap().median_spec_err;
    let (smoothed, single) = (err(lambda), err(1.0));
    outcome(
        smoothed < 0.8 * single,
        format!(
            "lambda=rho_n={lambda:.4} smoothed={smoothed:.4} static={single:.4} ratio={:.4} limit 0.8",
            smoothed / single
        ),
    )
}

fn c5_lambda_scaling() -> Outcome {
    let mut cells = Vec::new();
    let mut ok = true;
    for scale in [2.0, 3.0, 5.0] {
        for epsilon in [0.002, 0.005, 0.01] {
            let cfg = ExperimentConfig {
                alpha_scale: scale,
                epsilon,
                lambdas: default_lambdas(),
                windows: vec![],
                matrix: MatrixChoice::Adjacency,
                cluster: false,
                ..Default::default()
            };
            let s = summarize(&cfg, &run_sweep(&cfg).unwrap()).unwrap();
            let norm = s.lambda_star_norm(MatrixKind::Adjacency).unwrap();
            ok &= (0.2..=5.0).contains(&norm);
            cells.push(format!("c={scale},eps={epsilon}:{norm:.3}"));
        }
    }
    outcome(ok, format!("lambda*/sqrt(alpha n eps) {} range [0.2, 5]", cells.join(" ")))
}

fn preset_summary() -> SweepSummary {
    let cfg = ExperimentConfig::default();
    summarize(&cfg, &run_sweep(&cfg).unwrap()).unwrap()
}

fn best_ari(s: &SweepSummary, kind: &str, m: MatrixKind) -> f64 {
    s.best_for(kind, m).unwrap().best_ari
}

fn c6_laplacian_quality(s: &SweepSummary) -> Outcome {
    let lap = best_ari(s, "lambda", MatrixKind::Laplacian);
    let adj = best_ari(s, "lambda", MatrixKind::Adjacency);
    outcome(lap >= adj - 0.02, format!("best median ARI laplacian={lap:.4} adjacency={adj:.4} slack 0.02"))
}

fn c7_uniform_parity(s: &SweepSummary) -> Outcome {
    let unif = best_ari(s, "window", MatrixKind::Adjacency);
    let exp = best_ari(s, "lambda", MatrixKind::Adjacency);
    outcome(
        (unif - exp).abs() <= 0.03,
        format!("best median ARI uniform={unif:.4} exponential={exp:.4} gap={:.4} limit 0.03", (unif - exp).abs()),
    )
}

fn c8_weight_conditions() -> Outcome {
    let rep = verify_weights(&default_weight_smoothers(), &epsilon_grid()).unwrap();
    let violations: Vec<&String> = rep.lines.iter().filter(|l| l.starts_with("violation")).collect();
    let uniform = violations.iter().filter(|l| l.contains("Uniform")).count();
    let tail_only = violations
        .iter()
        .filter(|l| {
            l.contains("Exponential")
                && l.contains("bound_ok=false")
                && !l.contains("sum_ok=false")
                && !l.contains("square_ok=false")
                && !l.contains("decay_ok=false")
        })
        .count();
    let first = violations.first().map(|l| l.as_str()).unwrap_or("none");
    outcome(
        rep.failures == 0,
        format!(
            "{} checks, {} failures (uniform {uniform}, exponential max-weight only {tail_only}); first: {first}",
            rep.checks, rep.failures
        ),
    )
}

fn c9_laplacian_inequality() -> Outcome {
    let rep = verify_laplacian_inequality(1000, 30, 0xC9).unwrap();
    outcome(rep.failures == 0 && rep.checks == 1000, format!("{} instances, {} violations", rep.checks, rep.failures))
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

fn c10_assignment_oracle() -> Outcome {
    let mut rng = seed::rng(0xC10);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=6);
        let n = rng.random_range(1..100);
        let a = CommunityLabels::new((0..n).map(|_| rng.random_range(0..k)).collect(), k).unwrap();
        let b = CommunityLabels::new((0..n).map(|_| rng.random_range(0..k)).collect(), k).unwrap();
        let truth = b.one_hot();
        let brute = permutations(k)
            .iter()
            .map(|q| a.relabelled(q).unwrap().one_hot().iter().zip(&truth).filter(|(x, y)| x != y).count())
            .min()
            .unwrap() as f64
            / n as f64;
        if misclassification_error(&a, &b).unwrap().e_value != brute {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("1000 pairs, {mismatches} mismatches"))
}

fn c11_frobenius_bias() -> Outcome {
    let cfg = ExperimentConfig::default();
    let model = cfg.model().unwrap();
    let nbar_max = cfg.size_profile().unwrap().nbar_max;
    let (checked, violations, worst) = (0..50)
        .into_par_iter()
        .map(|trial| {
            let (m, _) = generate(&cfg, trial_seed(0xC11, trial)).unwrap();
            let (mut checked, mut violations, mut worst) = (0usize, 0usize, 0f64);
            for t in 0..=cfg.horizon {
                for lag in frobenius_lags(&m, &model, t, cfg.changes(), nbar_max).unwrap() {
                    checked += 1;
                    violations += usize::from(!lag.holds());
                    if lag.bound > 0.0 {
                        worst = worst.max(lag.value / lag.bound);
                    }
                }
            }
            (checked, violations, worst)
        })
        .reduce(|| (0, 0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2.max(b.2)));
    outcome(
        violations == 0,
        format!("50 sequences, {checked} (t, k) pairs, {violations} violations, max value/bound={worst:.4}"),
    )
}

fn c12_sparse_payoff() -> Outcome {
    let n = 2000;
    let base = ExperimentConfig {
        n,
        k: 2,
        alpha: Some(8.0 / n as f64),
        epsilon: 1.0 / (n as f64).ln().powi(2),
        horizon: 20,
        matrix: MatrixChoice::Adjacency,
        ..Default::default()
    };
    let lambda = match default_smoother(&base, base.horizon).unwrap() {
        SmootherKind::Exponential { lambda } => lambda,
        other => panic!("unexpected default smoother {other:?}"),
    };
    let cfg = ExperimentConfig { lambdas: vec![lambda, 1.0], windows: vec![], ..base };
    let s = summarize(&cfg, &run_sweep(&cfg).unwrap()).unwrap();
    let ari = |l: f64| s.point(SmootherKind::Exponential { lambda: l }, MatrixKind::Adjacency).unwrap().median_ari;
    let (smoothed, single) = (ari(lambda), ari(1.0));
    outcome(
        smoothed - single >= 0.2,
        format!(
            "lambda=rho_n={lambda:.4} median ARI smoothed={smoothed:.4} static={single:.4} gain={:.4} need 0.2",
            smoothed - single
        ),
    )
}

fn main() -> ExitCode {
    // `cargo test` passes libtest flags; a name filter that excludes this
    // target skips it.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return ExitCode::SUCCESS;
    }
    let statics = OnceCell::new();
    let preset = OnceCell::new();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("C1 exact recovery on noiseless input", Box::new(c1_exact_recovery)),
        (
            "C2 static adjacency concentration scaling",
            Box::new(|| c2_adjacency_scaling(statics.get_or_init(static_concentration))),
        ),
        (
            "C3 static Laplacian concentration scaling",
            Box::new(|| c3_laplacian_scaling(statics.get_or_init(static_concentration))),
        ),
        ("C4 smoothing improves concentration", Box::new(c4_smoothing_helps)),
        ("C5 optimal forgetting factor scaling", Box::new(c5_lambda_scaling)),
        (
            "C6 Laplacian at least as good as adjacency",
            Box::new(|| c6_laplacian_quality(preset.get_or_init(preset_summary))),
        ),
        ("C7 uniform and exponential parity", Box::new(|| c7_uniform_parity(preset.get_or_init(preset_summary)))),
        ("C8 weight conditions with certified constants", Box::new(c8_weight_conditions)),
        ("C9 Laplacian perturbation inequality", Box::new(c9_laplacian_inequality)),
        ("C10 assignment equals brute force", Box::new(c10_assignment_oracle)),
        ("C11 Frobenius drift inequality", Box::new(c11_frobenius_bias)),
        ("C12 sparse-regime smoothing payoff", Box::new(c12_sparse_payoff)),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run();
        failed += usize::from(!o.passed);
        println!(
            "{} {name} ({:.1}s): {}",
            if o.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
