//! Temporally smoothed adjacency estimators.
//!
//! Both estimators are weighted sums `Σ_k β_k A_{t−k}` over the history. The
//! sliding window puts `1/r` on the last `r` snapshots; exponential forgetting
//! puts `λ(1−λ)^k` on lag `k < t` and the remaining `(1−λ)^t` on `A_0`, and can
//! be maintained with one dense state and an O(n²) update per step.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::graph::AdjacencySnapshot;
use crate::matrix::SymmetricMatrix;

/// Absolute slack used when checking weight conditions.
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmootherKind {
    Uniform { window: usize },
    Exponential { lambda: f64 },
}

impl SmootherKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SmootherKind::Uniform { window } if window == 0 => Err(invalid("window size must be at least 1")),
            SmootherKind::Exponential { lambda } if !(lambda > 0.0 && lambda <= 1.0) => {
                Err(invalid(format!("forgetting factor {lambda} must lie in (0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

/// What to do when a window is longer than the available history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HistoryPolicy {
    #[default]
    Error,
    Truncate,
}

/// Constants `(β_max, C_β, C'_β)` of the weight conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightConstants {
    pub beta_max: f64,
    pub c_beta: f64,
    pub c_beta_prime: f64,
}

/// Weight sequence indexed by lag: `betas[k]` multiplies `A_{t−k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingWeights {
    pub betas: Vec<f64>,
    /// Constants the weight family is known to satisfy.
    pub certified: WeightConstants,
}

impl SmoothingWeights {
    pub fn horizon(&self) -> usize {
        self.betas.len() - 1
    }
}

/// Exact weights of `kind` over a history of `t + 1` snapshots.
pub fn weights_of(kind: SmootherKind, t: usize) -> Result<SmoothingWeights> {
    kind.validate()?;
    match kind {
        SmootherKind::Uniform { window } => {
            if window > t + 1 {
                return Err(Error::WindowExceedsHistory { window, available: t + 1 });
            }
            let mut betas = vec![0.0; t + 1];
            betas[..window].iter_mut().for_each(|b| *b = 1.0 / window as f64);
            let beta_max = 1.0 / window as f64;
            Ok(SmoothingWeights { betas, certified: WeightConstants { beta_max, c_beta: 1.0, c_beta_prime: 1.0 } })
        }
        SmootherKind::Exponential { lambda } => {
            let mut betas: Vec<f64> = (0..t).map(|k| lambda * (1.0 - lambda).powi(k as i32)).collect();
            betas.push((1.0 - lambda).powi(t as i32));
            Ok(SmoothingWeights {
                betas,
                certified: WeightConstants { beta_max: lambda, c_beta: 1.5, c_beta_prime: 2.0 },
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightReport {
    pub sum: f64,
    pub max: f64,
    pub sum_sq: f64,
    /// `Σ_k β_k min(1, √(kε))`.
    pub decay_sum: f64,
    pub claimed: WeightConstants,
    pub sum_ok: bool,
    pub bound_ok: bool,
    pub square_ok: bool,
    pub decay_ok: bool,
    /// Smallest constants satisfying the conditions given the claimed `β_max`.
    pub tight: WeightConstants,
}

impl WeightReport {
    pub fn passed(&self) -> bool {
        self.sum_ok && self.bound_ok && self.square_ok && self.decay_ok
    }
}

/// Evaluate the four weight conditions
/// `Σβ = 1`, `β_k ≤ β_max`, `Σβ² ≤ C_β β_max` and
/// `Σβ_k min(1, √(kε)) ≤ C'_β √(ε/β_max)`.
pub fn validate_weights(w: &SmoothingWeights, epsilon: f64, claimed: WeightConstants) -> WeightReport {
    let sum: f64 = w.betas.iter().sum();
    let max = w.betas.iter().copied().fold(0.0, f64::max);
    let sum_sq: f64 = w.betas.iter().map(|b| b * b).sum();
    let decay_sum: f64 = w.betas.iter().enumerate().map(|(k, b)| b * (k as f64 * epsilon).sqrt().min(1.0)).sum();
    let decay_scale = (epsilon / claimed.beta_max).sqrt();
    WeightReport {
        sum,
        max,
        sum_sq,
        decay_sum,
        claimed,
        sum_ok: (sum - 1.0).abs() <= WEIGHT_TOL,
        bound_ok: max <= claimed.beta_max + WEIGHT_TOL,
        square_ok: sum_sq <= claimed.c_beta * claimed.beta_max + WEIGHT_TOL,
        decay_ok: decay_sum <= claimed.c_beta_prime * decay_scale + WEIGHT_TOL,
        tight: WeightConstants {
            beta_max: max,
            c_beta: sum_sq / claimed.beta_max,
            c_beta_prime: decay_sum / decay_scale,
        },
    }
}

/// Weighted sum `Σ_k β_k A_{t−k}` where `t` is the last snapshot.
pub fn weighted_sum(snapshots: &[AdjacencySnapshot], betas: &[f64]) -> Result<SymmetricMatrix> {
    let last = snapshots.last().ok_or_else(|| invalid("no snapshots"))?;
    if betas.len() > snapshots.len() {
        return Err(Error::WindowExceedsHistory { window: betas.len(), available: snapshots.len() });
    }
    let mut out = SymmetricMatrix::zeros(last.n());
    for (lag, &beta) in betas.iter().enumerate() {
        let snap = &snapshots[snapshots.len() - 1 - lag];
        if snap.n() != last.n() {
            return Err(Error::DimensionMismatch { expected: last.n(), found: snap.n() });
        }
        if beta != 0.0 {
            for (i, j) in snap.edges() {
                out.add_to(i, j, beta);
            }
        }
    }
    Ok(out)
}

/// Mean of the last `window` snapshots.
pub fn uniform_smooth(
    snapshots: &[AdjacencySnapshot],
    window: usize,
    policy: HistoryPolicy,
) -> Result<SymmetricMatrix> {
    SmootherKind::Uniform { window }.validate()?;
    let window = match policy {
        HistoryPolicy::Error if window > snapshots.len() => {
            return Err(Error::WindowExceedsHistory { window, available: snapshots.len() })
        }
        HistoryPolicy::Error => window,
        HistoryPolicy::Truncate => window.min(snapshots.len()),
    };
    weighted_sum(snapshots, &vec![1.0 / window as f64; window])
}

/// One step of exponential forgetting: `state ← (1 − λ)·state + λ·A_t`.
pub fn exp_smooth_update(state: &mut SymmetricMatrix, a_t: &AdjacencySnapshot, lambda: f64) -> Result<()> {
    SmootherKind::Exponential { lambda }.validate()?;
    if state.dim() != a_t.n() {
        return Err(Error::DimensionMismatch { expected: state.dim(), found: a_t.n() });
    }
    state.scale(1.0 - lambda);
    for (i, j) in a_t.edges() {
        state.add_to(i, j, lambda);
    }
    Ok(())
}

/// Streaming exponential smoother holding only the current estimate.
#[derive(Debug, Clone)]
pub struct ExpSmoother {
    lambda: f64,
    state: Option<SymmetricMatrix>,
    steps: usize,
}

impl ExpSmoother {
    pub fn new(lambda: f64) -> Result<Self> {
        SmootherKind::Exponential { lambda }.validate()?;
        Ok(Self { lambda, state: None, steps: 0 })
    }

    /// Feed the next snapshot. The first one initialises the state as `A_0`.
    pub fn push(&mut self, a_t: &AdjacencySnapshot) -> Result<&SymmetricMatrix> {
        match &mut self.state {
            None => self.state = Some(a_t.to_matrix()),
            Some(state) => exp_smooth_update(state, a_t, self.lambda)?,
        }
        self.steps += 1;
        Ok(self.state.as_ref().expect("state set above"))
    }

    pub fn state(&self) -> Option<&SymmetricMatrix> {
        self.state.as_ref()
    }

    pub fn into_state(self) -> Option<SymmetricMatrix> {
        self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

/// Exponentially smoothed estimate after the whole history.
pub fn exp_smooth(snapshots: &[AdjacencySnapshot], lambda: f64) -> Result<SymmetricMatrix> {
    let mut smoother = ExpSmoother::new(lambda)?;
    for a in snapshots {
        smoother.push(a)?;
    }
    smoother.into_state().ok_or_else(|| invalid("no snapshots"))
}

/// Smoothed estimate for any kind over the full history.
pub fn smooth(snapshots: &[AdjacencySnapshot], kind: SmootherKind) -> Result<SymmetricMatrix> {
    match kind {
        SmootherKind::Uniform { window } => uniform_smooth(snapshots, window, HistoryPolicy::Error),
        SmootherKind::Exponential { lambda } => exp_smooth(snapshots, lambda),
    }
}

/// Minimum history for the exponential weights to meet the weight conditions
/// with `β_max = λ`: `min(log(ε/β), log β) / (2 log(1 − β))`, clamped at 0.
pub fn t_min_weights(beta_max: f64, epsilon: f64) -> f64 {
    if beta_max >= 1.0 {
        return 0.0;
    }
    let num = (epsilon / beta_max).ln().min(beta_max.ln());
    (num / (2.0 * (1.0 - beta_max).ln())).max(0.0)
}

/// Minimum history for the adjacency rate: `log(ρ/(αn)) / (2 log(1 − ρ))`,
/// clamped at 0.
pub fn t_min_rate(rho: f64, alpha: f64, n: usize) -> f64 {
    if rho >= 1.0 {
        return 0.0;
    }
    ((rho / (alpha * n as f64)).ln() / (2.0 * (1.0 - rho).ln())).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningProfile {
    /// `min(1, √(n̄_max α ε))`.
    pub rho_n: f64,
    /// `min(1, √(n α ε))`.
    pub rho_pz: f64,
    pub t_min_rate: f64,
    pub t_min_weights: f64,
    /// Larger of the two history requirements.
    pub t_min: f64,
    pub optimal_window: usize,
    pub optimal_lambda: f64,
}

pub fn tuning_profile(n: usize, alpha: f64, epsilon: f64, nbar_max: f64) -> TuningProfile {
    let rho_n = (nbar_max * alpha * epsilon).sqrt().min(1.0);
    let rho_pz = (n as f64 * alpha * epsilon).sqrt().min(1.0);
    let t_rate = t_min_rate(rho_n, alpha, n);
    let t_weights = t_min_weights(rho_n, epsilon);
    let optimal_window = if rho_n > 0.0 { (1.0 / rho_n).ceil().min(usize::MAX as f64) as usize } else { usize::MAX };
    TuningProfile {
        rho_n,
        rho_pz,
        t_min_rate: t_rate,
        t_min_weights: t_weights,
        t_min: t_rate.max(t_weights),
        optimal_window: optimal_window.max(1),
        optimal_lambda: rho_n,
    }
}

impl fmt::Display for TuningProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rho_n={}", self.rho_n)?;
        writeln!(f, "rho_pz={}", self.rho_pz)?;
        writeln!(f, "t_min_rate={}", self.t_min_rate)?;
        writeln!(f, "t_min_weights={}", self.t_min_weights)?;
        writeln!(f, "t_min={}", self.t_min)?;
        writeln!(f, "optimal_r={}", self.optimal_window)?;
        writeln!(f, "optimal_lambda={}", self.optimal_lambda)
    }
}
