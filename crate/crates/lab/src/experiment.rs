//! Monte Carlo sweeps over smoothers, and their CSV and summary outputs.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use dsbm_core::dsbm::{gen_deterministic_sequence, gen_markov_sequence, sample_snapshot_sequence};
use dsbm_core::dsbm::{DeterministicDsbmConfig, MarkovDsbmConfig, MembershipSequence, SnapshotSequence};
use dsbm_core::eigen::{spectral_norm, EigenOptions};
use dsbm_core::kmeans::KMeansOptions;
use dsbm_core::labels::CommunityLabels;
use dsbm_core::laplacian::{normalized_laplacian, ZeroDegreePolicy};
use dsbm_core::matrix::SymmetricMatrix;
use dsbm_core::metrics::{adjusted_rand_index, misclassification_error};
use dsbm_core::model::build_probability_matrix;
use dsbm_core::seed::{self, stream};
use dsbm_core::smoothing::{smooth, SmootherKind};
use dsbm_core::spectral::{spectral_cluster, SpectralClustering, SpectralOptions};

use crate::config::{ExperimentConfig, MatrixKind, Mode};
use crate::error::Result;

pub const CSV_SCHEMA: &str = "# dsbm-lab runs v1";
pub const CSV_COLUMNS: &str =
    "trial,t,grid_param_kind,grid_param_value,matrix_kind,spec_err,ari,e_value,kmeans_cost,eigengap,seed,elapsed_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub trial: usize,
    pub t: usize,
    pub smoother: SmootherKind,
    pub matrix: MatrixKind,
    /// `‖M − M(P_t)‖` for the smoothed matrix `M` and its noiseless target.
    pub spec_err: f64,
    pub ari: f64,
    pub e_value: f64,
    pub kmeans_cost: f64,
    pub eigengap: f64,
    /// Seed of the trial's sequence, as accepted by `generate --seed`.
    pub seed: u64,
    pub elapsed_ms: f64,
}

pub fn param_kind(kind: SmootherKind) -> &'static str {
    match kind {
        SmootherKind::Exponential { .. } => "lambda",
        SmootherKind::Uniform { .. } => "window",
    }
}

pub fn param_value(kind: SmootherKind) -> f64 {
    match kind {
        SmootherKind::Exponential { lambda } => lambda,
        SmootherKind::Uniform { window } => window as f64,
    }
}

impl RunRecord {
    fn sort_key(&self) -> (usize, &'static str, u64, MatrixKind) {
        (self.trial, param_kind(self.smoother), param_value(self.smoother).to_bits(), self.matrix)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:.3}",
            self.trial,
            self.t,
            param_kind(self.smoother),
            param_value(self.smoother),
            self.matrix.name(),
            self.spec_err,
            self.ari,
            self.e_value,
            self.kmeans_cost,
            self.eigengap,
            self.seed,
            self.elapsed_ms
        )
    }
}

pub fn trial_seed(base: u64, trial: usize) -> u64 {
    seed::derive(base, &[stream::TRIAL, trial as u64])
}

/// Memberships and snapshots of one sequence drawn with `seq_seed`.
pub fn generate(cfg: &ExperimentConfig, seq_seed: u64) -> Result<(MembershipSequence, SnapshotSequence)> {
    let model = cfg.model()?;
    let memberships = match cfg.mode {
        Mode::Deterministic => {
            let (n_min, n_max) = cfg.size_bounds();
            gen_deterministic_sequence(&DeterministicDsbmConfig {
                n: cfg.n,
                model: model.clone(),
                horizon: cfg.horizon,
                changes: cfg.changes(),
                n_min,
                n_max,
                seed: seq_seed,
            })?
        }
        Mode::Markov => gen_markov_sequence(&MarkovDsbmConfig {
            n: cfg.n,
            model: model.clone(),
            horizon: cfg.horizon,
            epsilon: cfg.epsilon,
            seed: seq_seed,
        })?,
    };
    let snapshots = sample_snapshot_sequence(&memberships, &model, seq_seed)?;
    Ok((memberships, snapshots))
}

pub fn spectral_options(seq_seed: u64, restarts: usize) -> SpectralOptions {
    SpectralOptions {
        eigen: EigenOptions { seed: seed::derive(seq_seed, &[stream::EIGEN]), ..EigenOptions::default() },
        kmeans: KMeansOptions { seed: seed::derive(seq_seed, &[stream::KMEANS]), restarts, ..KMeansOptions::default() },
    }
}

/// Matrix fed to clustering: the smoothed adjacency or its Laplacian, with
/// isolated nodes kept as zero rows.
pub fn matrix_of(kind: MatrixKind, a: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    Ok(match kind {
        MatrixKind::Adjacency => a.clone(),
        MatrixKind::Laplacian => normalized_laplacian(a, ZeroDegreePolicy::ZeroRow)?.matrix,
    })
}

/// One smoother evaluated at the last step for every configured matrix kind,
/// with the clustering when enabled.
pub fn evaluate_smoother(
    cfg: &ExperimentConfig,
    trial: usize,
    seq_seed: u64,
    memberships: &MembershipSequence,
    snapshots: &SnapshotSequence,
    smoother: SmootherKind,
) -> Result<Vec<(RunRecord, Option<SpectralClustering>)>> {
    let target = Targets::new(cfg, memberships)?;
    target.evaluate(cfg, trial, seq_seed, snapshots, smoother)
}

/// Noiseless matrices at the last step, built once per sequence.
struct Targets<'a> {
    truth: &'a CommunityLabels,
    t: usize,
    kinds: Vec<MatrixKind>,
    matrices: Vec<SymmetricMatrix>,
}

impl<'a> Targets<'a> {
    fn new(cfg: &ExperimentConfig, memberships: &'a MembershipSequence) -> Result<Self> {
        let t = memberships.horizon();
        let truth = memberships.at(t);
        let p = build_probability_matrix(truth, &cfg.model()?)?;
        let kinds = cfg.matrix.kinds();
        let matrices = kinds.iter().map(|&k| matrix_of(k, &p)).collect::<Result<_>>()?;
        Ok(Self { truth, t, kinds, matrices })
    }

    fn evaluate(
        &self,
        cfg: &ExperimentConfig,
        trial: usize,
        seq_seed: u64,
        snapshots: &SnapshotSequence,
        smoother: SmootherKind,
    ) -> Result<Vec<(RunRecord, Option<SpectralClustering>)>> {
        let opts = spectral_options(seq_seed, cfg.restarts);
        let start = Instant::now();
        let a = smooth(&snapshots.snapshots()[..=self.t], smoother)?;
        let smooth_ms = start.elapsed().as_secs_f64() * 1e3;
        let mut out = Vec::with_capacity(self.kinds.len());
        for (&matrix, target) in self.kinds.iter().zip(&self.matrices) {
            let start = Instant::now();
            let m = matrix_of(matrix, &a)?;
            let spec_err = spectral_norm(&m.sub(target)?)?;
            let mut record = RunRecord {
                trial,
                t: self.t,
                smoother,
                matrix,
                spec_err,
                ari: f64::NAN,
                e_value: f64::NAN,
                kmeans_cost: f64::NAN,
                eigengap: f64::NAN,
                seed: seq_seed,
                elapsed_ms: 0.0,
            };
            let clustering = if cfg.cluster {
                let sc = spectral_cluster(&m, cfg.k, &opts)?;
                if self.truth.len() >= 2 {
                    record.ari = adjusted_rand_index(&sc.labels, self.truth)?;
                }
                record.e_value = misclassification_error(&sc.labels, self.truth)?.e_value;
                record.kmeans_cost = sc.kmeans_cost();
                record.eigengap = sc.eigen.eigengap().unwrap_or(f64::NAN);
                Some(sc)
            } else {
                None
            };
            record.elapsed_ms = smooth_ms + start.elapsed().as_secs_f64() * 1e3;
            out.push((record, clustering));
        }
        Ok(out)
    }
}

/// Evaluate every grid point and matrix kind at the last step of a sequence.
pub fn evaluate_sequence(
    cfg: &ExperimentConfig,
    trial: usize,
    seq_seed: u64,
    memberships: &MembershipSequence,
    snapshots: &SnapshotSequence,
    grid: &[SmootherKind],
) -> Result<Vec<RunRecord>> {
    let targets = Targets::new(cfg, memberships)?;
    let mut out = Vec::new();
    for &smoother in grid {
        out.extend(targets.evaluate(cfg, trial, seq_seed, snapshots, smoother)?.into_iter().map(|(r, _)| r));
    }
    Ok(out)
}

pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<Vec<RunRecord>> {
    let seq_seed = trial_seed(cfg.seed, trial);
    let (memberships, snapshots) = generate(cfg, seq_seed)?;
    evaluate_sequence(cfg, trial, seq_seed, &memberships, &snapshots, &cfg.grid())
}

/// All trials on the current rayon pool, rows sorted by
/// `(trial, grid kind, grid value, matrix kind)`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let per_trial: Vec<Vec<RunRecord>> =
        (0..cfg.trials).into_par_iter().map(|i| run_trial(cfg, i)).collect::<Result<_>>()?;
    let mut rows: Vec<RunRecord> = per_trial.into_iter().flatten().collect();
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(rows)
}

pub fn write_runs_csv<W: Write>(cfg: &ExperimentConfig, rows: &[RunRecord], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_SCHEMA}")?;
    let echo: Vec<String> = cfg.echo().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(w, "# config {}", echo.join(" "))?;
    writeln!(w, "{CSV_COLUMNS}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Median of the non-NaN values; NaN when there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPointSummary {
    pub smoother: SmootherKind,
    pub matrix: MatrixKind,
    pub median_spec_err: f64,
    pub median_ari: f64,
    pub median_e: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestPoint {
    pub param_kind: &'static str,
    pub matrix: MatrixKind,
    /// Grid argmin of the median spectral error.
    pub best_by_error: SmootherKind,
    pub best_error: f64,
    /// Grid argmax of the median ARI.
    pub best_by_ari: SmootherKind,
    pub best_ari: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub points: Vec<GridPointSummary>,
    pub best: Vec<BestPoint>,
    /// `√(α n ε)`, the normalisation of the forgetting factor.
    pub lambda_scale: f64,
    /// `√(n α ρ_n)`, the adjacency rate with unit constant.
    pub adj_rate: f64,
    /// `μ_B √(n ρ_n/(n̄_min² α))`, the Laplacian rate with unit constant.
    pub lap_rate: f64,
}

type PointKey = (&'static str, u64, MatrixKind);

pub fn summarize(cfg: &ExperimentConfig, rows: &[RunRecord]) -> Result<SweepSummary> {
    let mut groups: BTreeMap<PointKey, Vec<&RunRecord>> = BTreeMap::new();
    for r in rows {
        groups.entry((param_kind(r.smoother), param_value(r.smoother).to_bits(), r.matrix)).or_default().push(r);
    }
    let mut points: Vec<GridPointSummary> = groups
        .values()
        .map(|g| GridPointSummary {
            smoother: g[0].smoother,
            matrix: g[0].matrix,
            median_spec_err: median(g.iter().map(|r| r.spec_err)),
            median_ari: median(g.iter().map(|r| r.ari)),
            median_e: median(g.iter().map(|r| r.e_value)),
            trials: g.len(),
        })
        .collect();
    points.sort_by(|a, b| {
        (param_kind(a.smoother), a.matrix)
            .cmp(&(param_kind(b.smoother), b.matrix))
            .then(param_value(a.smoother).total_cmp(&param_value(b.smoother)))
    });

    let mut best = Vec::new();
    for kind in ["lambda", "window"] {
        for matrix in cfg.matrix.kinds() {
            let sel: Vec<&GridPointSummary> =
                points.iter().filter(|p| param_kind(p.smoother) == kind && p.matrix == matrix).collect();
            if sel.is_empty() {
                continue;
            }
            // First grid point wins ties; NaN never wins.
            let by_err = sel.iter().fold(sel[0], |b, p| if p.median_spec_err < b.median_spec_err { p } else { b });
            let by_ari = sel.iter().fold(sel[0], |b, p| if p.median_ari > b.median_ari { p } else { b });
            best.push(BestPoint {
                param_kind: kind,
                matrix,
                best_by_error: by_err.smoother,
                best_error: by_err.median_spec_err,
                best_by_ari: by_ari.smoother,
                best_ari: by_ari.median_ari,
            });
        }
    }

    let alpha = cfg.resolved_alpha();
    let n = cfg.n as f64;
    let profile = cfg.size_profile()?;
    let rho = (cfg.drift_scale()? * alpha * cfg.epsilon).sqrt().min(1.0);
    Ok(SweepSummary {
        points,
        best,
        lambda_scale: (alpha * n * cfg.epsilon).sqrt(),
        adj_rate: (n * alpha * rho).sqrt(),
        lap_rate: profile.mu_b * (n * rho / (profile.nbar_min * profile.nbar_min * alpha)).sqrt(),
    })
}

impl SweepSummary {
    pub fn point(&self, smoother: SmootherKind, matrix: MatrixKind) -> Option<&GridPointSummary> {
        self.points.iter().find(|p| p.smoother == smoother && p.matrix == matrix)
    }

    pub fn best_for(&self, kind: &str, matrix: MatrixKind) -> Option<&BestPoint> {
        self.best.iter().find(|b| b.param_kind == kind && b.matrix == matrix)
    }

    /// `λ*/√(α n ε)` for the error-minimising forgetting factor.
    pub fn lambda_star_norm(&self, matrix: MatrixKind) -> Option<f64> {
        self.best_for("lambda", matrix).map(|b| param_value(b.best_by_error) / self.lambda_scale)
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lambda_scale={}", self.lambda_scale)?;
        writeln!(w, "adj_rate={}", self.adj_rate)?;
        writeln!(w, "lap_rate={}", self.lap_rate)?;
        for b in &self.best {
            let prefix = format!("{}.{}", b.param_kind, b.matrix.name());
            let rate = match b.matrix {
                MatrixKind::Adjacency => self.adj_rate,
                MatrixKind::Laplacian => self.lap_rate,
            };
            writeln!(w, "{prefix}.best_by_error={}", param_value(b.best_by_error))?;
            writeln!(w, "{prefix}.best_error={}", b.best_error)?;
            writeln!(w, "{prefix}.best_by_ari={}", param_value(b.best_by_ari))?;
            writeln!(w, "{prefix}.best_ari={}", b.best_ari)?;
            // Empirical constant in front of the unit-constant rate.
            writeln!(w, "{prefix}.fitted_constant={}", b.best_error / rate)?;
            if b.param_kind == "lambda" {
                writeln!(w, "{prefix}.lambda_star_norm={}", param_value(b.best_by_error) / self.lambda_scale)?;
                writeln!(w, "{prefix}.lambda_ari_norm={}", param_value(b.best_by_ari) / self.lambda_scale)?;
            }
        }
        Ok(())
    }

    /// Median ARI against the grid parameter, one row per grid point.
    pub fn write_ari_plot<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "grid_param_kind,grid_param_value,matrix_kind,median_ari,median_e")?;
        for p in &self.points {
            writeln!(
                w,
                "{},{},{},{},{}",
                param_kind(p.smoother),
                param_value(p.smoother),
                p.matrix.name(),
                p.median_ari,
                p.median_e
            )?;
        }
        Ok(())
    }

    /// Spectral error and ARI against the normalised forgetting factor.
    pub fn write_lambda_plot<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lambda,lambda_norm,matrix_kind,median_spec_err,median_ari")?;
        for p in self.points.iter().filter(|p| param_kind(p.smoother) == "lambda") {
            let l = param_value(p.smoother);
            writeln!(w, "{l},{},{},{},{}", l / self.lambda_scale, p.matrix.name(), p.median_spec_err, p.median_ari)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n: 60,
            k: 2,
            alpha: Some(0.3),
            horizon: 6,
            trials: 3,
            lambdas: vec![0.3, 1.0],
            windows: vec![1, 4],
            restarts: 3,
            ..Default::default()
        }
    }

    #[test]
    fn median_handles_parity_and_nan() {
        assert_eq!(median([3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median([4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median([f64::NAN, 5.0]), 5.0);
        assert!(median(std::iter::empty()).is_nan());
    }

    #[test]
    fn sweep_rows_are_complete_and_sorted() {
        let cfg = small();
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 3 * 4 * 2);
        assert!(rows.windows(2).all(|w| w[0].sort_key() <= w[1].sort_key()));
        assert!(rows.iter().all(|r| r.t == 6 && r.spec_err >= 0.0));
    }

    #[test]
    fn lambda_one_equals_window_one() {
        let rows = run_sweep(&small()).unwrap();
        for trial in 0..3 {
            for m in [MatrixKind::Adjacency, MatrixKind::Laplacian] {
                let pick = |s: SmootherKind| {
                    rows.iter().find(|r| r.trial == trial && r.matrix == m && r.smoother == s).unwrap()
                };
                let a = pick(SmootherKind::Exponential { lambda: 1.0 });
                let b = pick(SmootherKind::Uniform { window: 1 });
                assert_eq!((a.spec_err, a.ari, a.e_value), (b.spec_err, b.ari, b.e_value));
            }
        }
    }

    #[test]
    fn single_point_summary_is_that_point() {
        let cfg = ExperimentConfig { lambdas: vec![0.5], windows: vec![], trials: 1, ..small() };
        let rows = run_sweep(&cfg).unwrap();
        let s = summarize(&cfg, &rows).unwrap();
        for m in [MatrixKind::Adjacency, MatrixKind::Laplacian] {
            let row = rows.iter().find(|r| r.matrix == m).unwrap();
            let b = s.best_for("lambda", m).unwrap();
            assert_eq!(b.best_error, row.spec_err);
            assert_eq!(b.best_ari, row.ari);
        }
    }

    #[test]
    fn csv_has_schema_and_one_line_per_row() {
        let cfg = small();
        let rows = run_sweep(&cfg).unwrap();
        let mut buf = Vec::new();
        write_runs_csv(&cfg, &rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_SCHEMA);
        assert!(lines[1].starts_with("# config mode=deterministic"));
        assert_eq!(lines[2], CSV_COLUMNS);
        assert_eq!(lines.len(), 3 + rows.len());
        assert!(lines[3..].iter().all(|l| l.split(',').count() == 12));
    }
}
