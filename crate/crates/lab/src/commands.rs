//! Subcommand bodies. Each writes its human-readable output to `out` and its
//! files under the configured output directory.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use dsbm_core::bounds::rate_card;
use dsbm_core::dsbm::{read_sequence_dir, write_sequence_dir, MembershipSequence, SnapshotSequence};
use dsbm_core::smoothing::{tuning_profile, SmootherKind};

use crate::config::{ExperimentConfig, Mode};
use crate::error::Result;
use crate::experiment::{
    evaluate_smoother, generate, param_kind, param_value, run_sweep, summarize, write_runs_csv, RunRecord,
};
use crate::verify::{
    default_weight_smoothers, epsilon_grid, regime_inputs, verify_bias, verify_degrees, verify_laplacian_inequality,
    verify_rates, verify_weights, VerifyReport,
};

/// Manifest keys computed from the configuration rather than set by it.
pub const DERIVED_PREFIX: &str = "derived.";

pub fn manifest(cfg: &ExperimentConfig) -> Result<Vec<(String, String)>> {
    let mut m = cfg.echo();
    let (n_min, n_max) = cfg.size_bounds();
    let profile = cfg.size_profile()?;
    let changes = cfg.changes();
    let eps = match cfg.mode {
        Mode::Deterministic => changes as f64 / cfg.n as f64,
        Mode::Markov => cfg.epsilon,
    };
    let tuning = tuning_profile(cfg.n, cfg.resolved_alpha(), eps, cfg.drift_scale()?);
    let derived: [(&str, String); 10] = [
        // Moves per step; for Markov sequences the expected number.
        ("changes", changes.to_string()),
        ("epsilon_effective", eps.to_string()),
        ("n_min", n_min.to_string()),
        ("n_max", n_max.to_string()),
        ("nbar_min", profile.nbar_min.to_string()),
        ("nbar_max", profile.nbar_max.to_string()),
        ("rho_n", tuning.rho_n.to_string()),
        ("t_min", tuning.t_min.to_string()),
        ("optimal_lambda", tuning.optimal_lambda.to_string()),
        ("optimal_window", tuning.optimal_window.to_string()),
    ];
    m.extend(derived.into_iter().map(|(k, v)| (format!("{DERIVED_PREFIX}{k}"), v)));
    Ok(m)
}

/// Draw one sequence with `cfg.seed` and persist it under `cfg.out`.
pub fn cmd_generate(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<()> {
    cfg.validate_model()?;
    let (memberships, snapshots) = generate(cfg, cfg.seed)?;
    write_sequence_dir(&cfg.out, &memberships, &snapshots, &manifest(cfg)?)?;
    let edges: usize = snapshots.snapshots().iter().map(|s| s.edge_count()).sum();
    writeln!(out, "dir={}", cfg.out.display())?;
    writeln!(out, "steps={}", snapshots.len())?;
    writeln!(out, "edges_total={edges}")?;
    Ok(())
}

/// Configuration stored in a sequence directory's manifest.
pub fn config_from_manifest(entries: &[(String, String)]) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    for (i, (k, v)) in entries.iter().enumerate() {
        if !k.starts_with(DERIVED_PREFIX) {
            cfg.set(k, v, i + 1)?;
        }
    }
    Ok(cfg)
}

pub struct ClusterRequest<'a> {
    /// Persisted sequence; when absent one is drawn from the configuration.
    pub input: Option<&'a Path>,
    pub smoother: Option<SmootherKind>,
    pub labels_out: Option<&'a Path>,
    pub metrics_out: Option<&'a Path>,
}

/// The configured smoother defaults to `λ = ρ_n`, or to a window over the whole
/// history when `ρ_n = 0`.
pub fn default_smoother(cfg: &ExperimentConfig, horizon: usize) -> Result<SmootherKind> {
    let eps = match cfg.mode {
        Mode::Deterministic => cfg.changes() as f64 / cfg.n as f64,
        Mode::Markov => cfg.epsilon,
    };
    let rho = tuning_profile(cfg.n, cfg.resolved_alpha(), eps, cfg.drift_scale()?).rho_n;
    Ok(if rho > 0.0 {
        SmootherKind::Exponential { lambda: rho }
    } else {
        SmootherKind::Uniform { window: horizon + 1 }
    })
}

pub fn cmd_cluster(cfg: &ExperimentConfig, req: &ClusterRequest, out: &mut dyn Write) -> Result<Vec<RunRecord>> {
    let (cfg, memberships, snapshots): (ExperimentConfig, MembershipSequence, SnapshotSequence) = match req.input {
        Some(dir) => {
            let (entries, m, s) = read_sequence_dir(dir)?;
            let mut stored = config_from_manifest(&entries)?;
            stored.matrix = cfg.matrix;
            stored.restarts = cfg.restarts;
            (stored, m, s)
        }
        None => {
            cfg.validate_model()?;
            let (m, s) = generate(cfg, cfg.seed)?;
            (cfg.clone(), m, s)
        }
    };
    let cfg = ExperimentConfig { cluster: true, ..cfg };
    let smoother = match req.smoother {
        Some(s) => s,
        None => default_smoother(&cfg, memberships.horizon())?,
    };
    smoother.validate()?;
    let results = evaluate_smoother(&cfg, 0, cfg.seed, &memberships, &snapshots, smoother)?;
    let mut labels_w = match req.labels_out {
        Some(p) => Some(BufWriter::new(fs::File::create(p)?)),
        None => None,
    };
    let mut records = Vec::new();
    for (r, sc) in results {
        let sc = sc.expect("clustering is always on here");
        let eigenvalues: Vec<String> = sc.eigen.values.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(
            out,
            "matrix={} t={} {}={} ari={} e_value={} spec_err={} kmeans_cost={} eigengap={} eigenvalues={} degenerate={}",
            r.matrix.name(),
            r.t,
            param_kind(r.smoother),
            param_value(r.smoother),
            r.ari,
            r.e_value,
            r.spec_err,
            r.kmeans_cost,
            r.eigengap,
            eigenvalues.join(","),
            sc.degenerate
        )?;
        if let Some(w) = labels_w.as_mut() {
            let row: Vec<String> = sc.labels.as_slice().iter().map(|l| l.to_string()).collect();
            writeln!(w, "{},{}", r.matrix.name(), row.join(","))?;
        }
        records.push(r);
    }
    if let Some(mut w) = labels_w {
        w.flush()?;
    }
    if let Some(p) = req.metrics_out {
        let mut w = BufWriter::new(fs::File::create(p)?);
        write_runs_csv(&cfg, &records, &mut w)?;
        w.flush()?;
    }
    Ok(records)
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Runs every trial and writes `runs.csv`, `summary.txt` and the two plot
/// files under `cfg.out`.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<()> {
    let rows = run_sweep(cfg)?;
    let summary = summarize(cfg, &rows)?;
    fs::create_dir_all(&cfg.out)?;
    write_file(&cfg.out.join("runs.csv"), |w| write_runs_csv(cfg, &rows, w))?;
    write_file(&cfg.out.join("summary.txt"), |w| summary.write_text(w))?;
    write_file(&cfg.out.join("plot_fig1_ari.csv"), |w| summary.write_ari_plot(w))?;
    write_file(&cfg.out.join("plot_fig2_lambda.csv"), |w| summary.write_lambda_plot(w))?;
    writeln!(out, "rows={}", rows.len())?;
    summary.write_text(out)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyTarget {
    Weights,
    LaplacianIneq,
    Degrees,
    Bias,
    Rates,
}

pub struct VerifyRequest {
    pub target: VerifyTarget,
    pub instances: usize,
    pub size: usize,
    /// Restricts the weight check to one smoother.
    pub smoother: Option<SmootherKind>,
}

/// Prints the report; a failed hard check becomes a verification error after
/// the report is written.
pub fn cmd_verify(cfg: &ExperimentConfig, req: &VerifyRequest, out: &mut dyn Write) -> Result<VerifyReport> {
    let rep = match req.target {
        VerifyTarget::Weights => {
            let smoothers = match req.smoother {
                Some(s) => vec![s],
                None => default_weight_smoothers(),
            };
            verify_weights(&smoothers, &epsilon_grid())?
        }
        VerifyTarget::LaplacianIneq => verify_laplacian_inequality(req.instances, req.size, cfg.seed)?,
        VerifyTarget::Degrees => verify_degrees(cfg)?,
        VerifyTarget::Bias => verify_bias(cfg)?,
        VerifyTarget::Rates => verify_rates(cfg)?,
    };
    write!(out, "{rep}")?;
    rep.into_result()
}

pub fn cmd_rates(cfg: &ExperimentConfig, csv: bool, out: &mut dyn Write) -> Result<()> {
    let inp = regime_inputs(cfg)?;
    let card = rate_card(&inp)?;
    if csv {
        writeln!(out, "{}", dsbm_core::bounds::RateCard::csv_header())?;
        writeln!(out, "{}", card.csv_row())?;
        return Ok(());
    }
    write!(out, "{card}")?;
    let tuning = tuning_profile(cfg.n, inp.alpha, inp.epsilon, inp.drift_scale());
    write!(out, "{tuning}")?;
    Ok(())
}
