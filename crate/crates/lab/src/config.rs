//! Experiment configuration: flat `key=value` text with `#` comments, with
//! later assignments overriding earlier ones.

use std::fmt;
use std::path::{Path, PathBuf};

use dsbm_core::dsbm::changes_from_epsilon;
use dsbm_core::model::{effective_sizes, ConnectivityModel, SizeProfile};
use dsbm_core::smoothing::SmootherKind;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Deterministic,
    Markov,
}

/// How `α` scales with `n` when it is not given directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaLaw {
    /// `α = c · log n / n`.
    Log,
    /// `α = c / n`.
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixChoice {
    Adjacency,
    Laplacian,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MatrixKind {
    Adjacency,
    Laplacian,
}

impl MatrixKind {
    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::Adjacency => "adjacency",
            MatrixKind::Laplacian => "laplacian",
        }
    }
}

impl MatrixChoice {
    pub fn kinds(self) -> Vec<MatrixKind> {
        match self {
            MatrixChoice::Adjacency => vec![MatrixKind::Adjacency],
            MatrixChoice::Laplacian => vec![MatrixKind::Laplacian],
            MatrixChoice::Both => vec![MatrixKind::Adjacency, MatrixKind::Laplacian],
        }
    }
}

/// Twelve forgetting factors log-spaced on `[0.01, 1]`.
pub fn default_lambdas() -> Vec<f64> {
    log_grid(0.01, 1.0, 12)
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points).map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub n: usize,
    pub k: usize,
    /// Explicit `α`; takes precedence over the scale law when set.
    pub alpha: Option<f64>,
    pub alpha_scale: f64,
    pub alpha_law: AlphaLaw,
    pub epsilon: f64,
    pub tau: f64,
    pub horizon: usize,
    pub lambdas: Vec<f64>,
    pub windows: Vec<usize>,
    pub matrix: MatrixChoice,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Deterministic size bounds are `⌊(1−slack)n/K⌋` and `⌈(1+slack)n/K⌉`.
    pub size_slack: f64,
    /// Run clustering; when off only spectral errors are recorded.
    pub cluster: bool,
    pub restarts: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Deterministic,
            n: 500,
            k: 3,
            alpha: None,
            alpha_scale: 3.0,
            alpha_law: AlphaLaw::Log,
            epsilon: 0.01,
            tau: 0.3,
            horizon: 60,
            lambdas: default_lambdas(),
            windows: vec![1, 2, 3, 5, 8, 12, 20, 32],
            matrix: MatrixChoice::Both,
            trials: 20,
            seed: 0,
            out: PathBuf::from("out"),
            size_slack: 0.2,
            cluster: true,
            restarts: 20,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.trim().parse().map_err(|_| LabError::Config { line, msg: format!("cannot parse {key}={value}") })
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<Vec<T>> {
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_num(key, s, line)).collect()
}

fn list_string<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Apply one assignment; `line` is only used in error messages.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "mode" => {
                self.mode = match value {
                    "deterministic" => Mode::Deterministic,
                    "markov" => Mode::Markov,
                    _ => return Err(LabError::Config { line, msg: format!("unknown mode {value}") }),
                }
            }
            "n" => self.n = parse_num(key, value, line)?,
            "k" | "K" => self.k = parse_num(key, value, line)?,
            "alpha" => self.alpha = Some(parse_num(key, value, line)?),
            "alpha_scale" => {
                self.alpha_scale = parse_num(key, value, line)?;
                self.alpha = None;
            }
            "alpha_law" => {
                self.alpha_law = match value {
                    "log" => AlphaLaw::Log,
                    "inverse" => AlphaLaw::Inverse,
                    _ => return Err(LabError::Config { line, msg: format!("unknown alpha_law {value}") }),
                }
            }
            "epsilon" => self.epsilon = parse_num(key, value, line)?,
            "tau" => self.tau = parse_num(key, value, line)?,
            "horizon" | "T" => self.horizon = parse_num(key, value, line)?,
            "lambdas" => self.lambdas = parse_list(key, value, line)?,
            "windows" => self.windows = parse_list(key, value, line)?,
            "matrix" => {
                self.matrix = match value {
                    "adjacency" => MatrixChoice::Adjacency,
                    "laplacian" => MatrixChoice::Laplacian,
                    "both" => MatrixChoice::Both,
                    _ => return Err(LabError::Config { line, msg: format!("unknown matrix {value}") }),
                }
            }
            "trials" => self.trials = parse_num(key, value, line)?,
            "seed" => self.seed = parse_num(key, value, line)?,
            "out" => self.out = PathBuf::from(value),
            "size_slack" => self.size_slack = parse_num(key, value, line)?,
            "cluster" => self.cluster = parse_num(key, value, line)?,
            "restarts" => self.restarts = parse_num(key, value, line)?,
            other => return Err(LabError::Config { line, msg: format!("unknown key {other}") }),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| LabError::Config { line: i + 1, msg: format!("expected key=value, got {line}") })?;
            self.set(key, value, i + 1)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    /// Apply `key=value` overrides, as given on the command line.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (key, value) =
                o.split_once('=').ok_or_else(|| LabError::Usage(format!("override {o} is not key=value")))?;
            self.set(key, value, 0)?;
        }
        Ok(())
    }

    pub fn resolved_alpha(&self) -> f64 {
        self.alpha.unwrap_or_else(|| {
            let n = self.n as f64;
            match self.alpha_law {
                AlphaLaw::Log => self.alpha_scale * n.ln() / n,
                AlphaLaw::Inverse => self.alpha_scale / n,
            }
        })
    }

    pub fn model(&self) -> Result<ConnectivityModel> {
        Ok(ConnectivityModel::planted(self.k, self.resolved_alpha(), self.tau)?)
    }

    pub fn changes(&self) -> usize {
        changes_from_epsilon(self.epsilon, self.n)
    }

    pub fn size_bounds(&self) -> (usize, usize) {
        let share = self.n as f64 / self.k as f64;
        let lo = ((1.0 - self.size_slack) * share).floor().max(1.0) as usize;
        let hi = ((1.0 + self.size_slack) * share).ceil() as usize;
        (lo, hi.min(self.n))
    }

    pub fn size_profile(&self) -> Result<SizeProfile> {
        let (lo, hi) = self.size_bounds();
        Ok(effective_sizes(&self.model()?, self.n, lo, hi)?)
    }

    /// `n̄_max` for the deterministic mode and `n` for the Markov mode.
    pub fn drift_scale(&self) -> Result<f64> {
        Ok(match self.mode {
            Mode::Deterministic => self.size_profile()?.nbar_max,
            Mode::Markov => self.n as f64,
        })
    }

    pub fn grid(&self) -> Vec<SmootherKind> {
        let mut g: Vec<SmootherKind> =
            self.lambdas.iter().map(|&lambda| SmootherKind::Exponential { lambda }).collect();
        g.extend(self.windows.iter().map(|&window| SmootherKind::Uniform { window }));
        g
    }

    /// Everything but the smoother grid.
    pub fn validate_model(&self) -> Result<()> {
        let usage = |m: String| Err(LabError::Usage(m));
        if self.trials == 0 {
            return usage("trials must be at least 1".into());
        }
        if self.k < 1 || self.n < self.k.max(2) {
            return usage(format!("need 1 ≤ K ≤ n and n ≥ 2, got n={} K={}", self.n, self.k));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return usage(format!("epsilon {} must lie in [0, 1]", self.epsilon));
        }
        if !(0.0..1.0).contains(&self.size_slack) {
            return usage(format!("size_slack {} must lie in [0, 1)", self.size_slack));
        }
        self.model()?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() && self.windows.is_empty() {
            return Err(LabError::Usage("smoother grid is empty".into()));
        }
        for kind in self.grid() {
            kind.validate()?;
            if let SmootherKind::Uniform { window } = kind {
                if window > self.horizon + 1 {
                    return Err(LabError::Usage(format!(
                        "window {window} exceeds the {} available snapshots",
                        self.horizon + 1
                    )));
                }
            }
        }
        self.validate_model()
    }

    /// Every parameter as `(key, value)`, in the file syntax.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mode = match self.mode {
            Mode::Deterministic => "deterministic",
            Mode::Markov => "markov",
        };
        let law = match self.alpha_law {
            AlphaLaw::Log => "log",
            AlphaLaw::Inverse => "inverse",
        };
        let matrix = match self.matrix {
            MatrixChoice::Adjacency => "adjacency",
            MatrixChoice::Laplacian => "laplacian",
            MatrixChoice::Both => "both",
        };
        vec![
            ("mode".into(), mode.into()),
            ("n".into(), self.n.to_string()),
            ("k".into(), self.k.to_string()),
            ("alpha_scale".into(), self.alpha_scale.to_string()),
            ("alpha_law".into(), law.into()),
            ("alpha".into(), self.resolved_alpha().to_string()),
            ("epsilon".into(), self.epsilon.to_string()),
            ("tau".into(), self.tau.to_string()),
            ("horizon".into(), self.horizon.to_string()),
            ("lambdas".into(), list_string(&self.lambdas)),
            ("windows".into(), list_string(&self.windows)),
            ("matrix".into(), matrix.into()),
            ("trials".into(), self.trials.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("size_slack".into(), self.size_slack.to_string()),
            ("cluster".into(), self.cluster.to_string()),
            ("restarts".into(), self.restarts.to_string()),
        ]
    }
}
