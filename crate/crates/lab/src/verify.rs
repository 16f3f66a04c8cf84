//! Checks behind `dsbm-lab verify`. Hard checks count failures; statistical
//! checks only report quantiles.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use dsbm_core::bounds::{
    degree_deviation_stats, expected_degrees, frobenius_lags, laplacian_perturbation_check, rate_card,
    smoothing_bias_check, Dynamics, RegimeInputs,
};
use dsbm_core::matrix::SymmetricMatrix;
use dsbm_core::model::build_probability_matrix;
use dsbm_core::seed;
use dsbm_core::smoothing::{t_min_weights, tuning_profile, validate_weights, weights_of, SmootherKind};

use crate::config::{ExperimentConfig, Mode};
use crate::error::{LabError, Result};
use crate::experiment::{generate, median, trial_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub name: &'static str,
    pub checks: usize,
    pub failures: usize,
    /// Only hard checks can fail the report.
    pub hard: bool,
    pub lines: Vec<String>,
}

impl VerifyReport {
    fn new(name: &'static str, hard: bool) -> Self {
        Self { name, checks: 0, failures: 0, hard, lines: Vec::new() }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            self.lines.push(format!("violation {}", detail()));
        }
    }

    fn line(&mut self, key: &str, value: impl fmt::Display) {
        self.lines.push(format!("{key}={value}"));
    }

    pub fn passed(&self) -> bool {
        !self.hard || self.failures == 0
    }

    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(LabError::Verification(format!("{}: {} of {} checks failed", self.name, self.failures, self.checks)))
        }
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if !self.hard {
            "REPORT"
        } else if self.failures == 0 {
            "PASS"
        } else {
            "FAIL"
        };
        writeln!(f, "check={}", self.name)?;
        writeln!(f, "status={status}")?;
        writeln!(f, "checks={}", self.checks)?;
        writeln!(f, "failures={}", self.failures)?;
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}

/// `1·10^e, 2·10^e, 5·10^e` from `1e-4` up to `0.5`.
pub fn epsilon_grid() -> Vec<f64> {
    let mut v = Vec::new();
    for e in -4..0 {
        for m in [1.0, 2.0, 5.0] {
            v.push(m * 10f64.powi(e));
        }
    }
    v
}

/// `0.05, 0.10, …, 1.00`.
pub fn lambda_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 * 0.05).collect()
}

/// Weight conditions with the certified constants. Uniform windows are
/// checked with the shortest and a longer history; exponential weights at
/// `t = ⌈t_min⌉`.
pub fn verify_weights(smoothers: &[SmootherKind], epsilons: &[f64]) -> Result<VerifyReport> {
    let mut rep = VerifyReport::new("weights", true);
    for &kind in smoothers {
        for &eps in epsilons {
            let times = match kind {
                SmootherKind::Uniform { window } => vec![window - 1, 2 * window],
                SmootherKind::Exponential { lambda } => {
                    vec![t_min_weights(lambda, eps).ceil() as usize]
                }
            };
            for t in times {
                let w = weights_of(kind, t)?;
                let r = validate_weights(&w, eps, w.certified);
                rep.record(r.passed(), || {
                    format!(
                        "{kind:?} eps={eps} t={t} sum_ok={} bound_ok={} square_ok={} decay_ok={} max={} sum_sq={} decay_sum={}",
                        r.sum_ok, r.bound_ok, r.square_ok, r.decay_ok, r.max, r.sum_sq, r.decay_sum
                    )
                });
            }
        }
    }
    Ok(rep)
}

pub fn default_weight_smoothers() -> Vec<SmootherKind> {
    let mut v: Vec<SmootherKind> = (1..=64).map(|window| SmootherKind::Uniform { window }).collect();
    v.extend(lambda_grid().into_iter().map(|lambda| SmootherKind::Exponential { lambda }));
    v
}

/// Random symmetric pairs with entries uniform on `[0.1, 1]`.
pub fn verify_laplacian_inequality(instances: usize, n: usize, base_seed: u64) -> Result<VerifyReport> {
    let mut rep = VerifyReport::new("laplacian-ineq", true);
    let results: Vec<_> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(seed::derive(base_seed, &[i as u64]));
            let a = SymmetricMatrix::from_fn(n, |_, _| rng.random_range(0.1..=1.0));
            let p = SymmetricMatrix::from_fn(n, |_, _| rng.random_range(0.1..=1.0));
            laplacian_perturbation_check(&a, &p)
        })
        .collect::<std::result::Result<_, _>>()?;
    let mut worst: f64 = 0.0;
    for (i, c) in results.iter().enumerate() {
        worst = worst.max(c.lhs / c.rhs);
        rep.record(c.holds, || format!("instance={i} lhs={} rhs={}", c.lhs, c.rhs));
    }
    rep.line("instances", instances);
    rep.line("holds", instances - rep.failures);
    rep.line("max_lhs_over_rhs", worst);
    Ok(rep)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

/// Smoothed-degree deviation at the last step over the configured trials,
/// with the uniform window set to `⌈1/ρ_n⌉`.
pub fn verify_degrees(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    cfg.validate_model()?;
    let mut rep = VerifyReport::new("degrees", false);
    let alpha = cfg.resolved_alpha();
    let profile = cfg.size_profile()?;
    let model = cfg.model()?;
    let tuning = tuning_profile(cfg.n, alpha, cfg.epsilon, cfg.drift_scale()?);
    let r = tuning.optimal_window.min(cfg.horizon + 1);
    let w = weights_of(SmootherKind::Uniform { window: r }, cfg.horizon)?;
    let devs: Vec<(f64, f64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<(f64, f64)> {
            let (memberships, snapshots) = generate(cfg, trial_seed(cfg.seed, trial))?;
            let expected = memberships
                .thetas()
                .iter()
                .map(|th| Ok(expected_degrees(&build_probability_matrix(th, &model)?)))
                .collect::<Result<Vec<_>>>()?;
            let d = degree_deviation_stats(&snapshots, &w, &expected, alpha, profile.nbar_min)?;
            Ok((d.normalized_by_n_alpha, d.normalized_by_nbar_alpha))
        })
        .collect::<Result<_>>()?;
    let mut by_n: Vec<f64> = devs.iter().map(|d| d.0).collect();
    let mut by_nbar: Vec<f64> = devs.iter().map(|d| d.1).collect();
    by_n.sort_by(f64::total_cmp);
    by_nbar.sort_by(f64::total_cmp);
    rep.checks = devs.len();
    rep.line("window", r);
    for (name, v) in [("by_n_alpha", &by_n), ("by_nbar_min_alpha", &by_nbar)] {
        rep.line(&format!("{name}.median"), median(v.iter().copied()));
        rep.line(&format!("{name}.q95"), quantile(v, 0.95));
        rep.line(&format!("{name}.max"), v[v.len() - 1]);
        rep.line(&format!("{name}.fraction_below_1"), v.iter().filter(|&&c| c < 1.0).count() as f64 / v.len() as f64);
    }
    Ok(rep)
}

/// Frobenius drift bound for every `t` and lag on `cfg.trials` deterministic
/// sequences, and the bias chain at the last step for `λ = ρ_n`.
pub fn verify_bias(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    cfg.validate_model()?;
    if cfg.mode != Mode::Deterministic {
        return Err(LabError::Usage("bias verification needs mode=deterministic".into()));
    }
    let mut rep = VerifyReport::new("bias", true);
    let model = cfg.model()?;
    let profile = cfg.size_profile()?;
    let changes = cfg.changes();
    let eps = changes as f64 / cfg.n as f64;
    let lambda = tuning_profile(cfg.n, model.alpha(), eps, profile.nbar_max).optimal_lambda;
    let weights =
        if lambda > 0.0 { Some(weights_of(SmootherKind::Exponential { lambda }, cfg.horizon)?) } else { None };
    let chain_expected = cfg.horizon as f64 >= t_min_weights(lambda, eps);
    let mut lags_checked = 0;
    let mut worst_ratio: f64 = 0.0;
    for trial in 0..cfg.trials {
        let (memberships, _) = generate(cfg, trial_seed(cfg.seed, trial))?;
        for t in 0..=cfg.horizon {
            for lag in frobenius_lags(&memberships, &model, t, changes, profile.nbar_max)? {
                lags_checked += 1;
                if lag.bound > 0.0 {
                    worst_ratio = worst_ratio.max(lag.value / lag.bound);
                }
                rep.record(lag.holds(), || {
                    format!("trial={trial} t={t} k={} value={} bound={}", lag.k, lag.value, lag.bound)
                });
            }
        }
        if let Some(w) = &weights {
            let b = smoothing_bias_check(&memberships, &model, w, changes, profile.nbar_max)?;
            if chain_expected {
                rep.record(b.chain_holds(), || {
                    format!("trial={trial} lhs={} chain={} rhs={}", b.lhs_norm, b.frobenius_chain, b.rhs_bound)
                });
            }
            if trial == 0 {
                rep.line("lambda", lambda);
                rep.line("trial0.lhs_norm", b.lhs_norm);
                rep.line("trial0.frobenius_chain", b.frobenius_chain);
                rep.line("trial0.rhs_bound", b.rhs_bound);
            }
        }
    }
    rep.line("sequences", cfg.trials);
    rep.line("lags_checked", lags_checked);
    rep.line("max_value_over_bound", worst_ratio);
    rep.line("chain_asserted", chain_expected);
    Ok(rep)
}

pub fn regime_inputs(cfg: &ExperimentConfig) -> Result<RegimeInputs> {
    let profile = cfg.size_profile()?;
    let dynamics = match cfg.mode {
        Mode::Deterministic => Dynamics::Deterministic,
        Mode::Markov => Dynamics::Markov,
    };
    Ok(RegimeInputs::from_profile(&profile, cfg.k, cfg.resolved_alpha(), cfg.epsilon, Some(cfg.tau))
        .with_dynamics(dynamics))
}

/// Rate card of the configuration, plus the `ρ_n = 1` reduction.
pub fn verify_rates(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    let mut rep = VerifyReport::new("rates", true);
    let inp = regime_inputs(cfg)?;
    let card = rate_card(&inp)?;
    let rates = [card.adj_dyn_rate, card.adj_static_rate, card.lap_dyn_rate, card.lap_static_rate];
    rep.record(rates.iter().all(|r| r.is_finite() && *r >= 0.0), || format!("rates {rates:?}"));
    rep.record(card.reduction_ok(), || "reduction at configured rho".into());
    let full = rate_card(&RegimeInputs { epsilon: 1.0, ..inp.clone() })?;
    let reduced = full.rho_n == 1.0 && full.reduction_ok();
    rep.record(reduced, || format!("rho_n={} adj {} vs {}", full.rho_n, full.adj_dyn_rate, full.adj_static_rate));
    rep.line("reduction", if reduced { "ok" } else { "broken" });
    for l in card.to_string().lines() {
        rep.lines.push(l.to_string());
    }
    Ok(rep)
}
