//! Membership dynamics and snapshot sequences.
//!
//! Two dynamics are supported. In the deterministic model exactly `s` nodes
//! change community between consecutive steps while every community stays
//! within `[n_min, n_max]`. In the Markov model each node independently keeps
//! its label with probability `1 − ε` and otherwise jumps to one of the other
//! `K − 1` communities uniformly.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::{sample_sbm, AdjacencySnapshot};
use crate::labels::CommunityLabels;
use crate::model::ConnectivityModel;
use crate::seed::{self, stream};

/// Number of moving nodes per step for a relative rate `ε`: `round(ε·n)`.
pub fn changes_from_epsilon(epsilon: f64, n: usize) -> usize {
    (epsilon * n as f64).round() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicDsbmConfig {
    pub n: usize,
    pub model: ConnectivityModel,
    pub horizon: usize,
    /// Nodes changing community at every step.
    pub changes: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub seed: u64,
}

impl DeterministicDsbmConfig {
    pub fn epsilon(&self) -> f64 {
        self.changes as f64 / self.n as f64
    }

    fn validate(&self) -> Result<()> {
        let k = self.model.k();
        if self.changes > self.n {
            return Err(invalid(format!("{} changes per step exceed n = {}", self.changes, self.n)));
        }
        if self.n_min > self.n_max || k * self.n_min > self.n || k * self.n_max < self.n {
            return Err(invalid(format!(
                "size bounds [{}, {}] infeasible for n = {} and K = {k}",
                self.n_min, self.n_max, self.n
            )));
        }
        let (lo, hi) = (self.n / k, self.n.div_ceil(k));
        if lo < self.n_min || hi > self.n_max {
            return Err(invalid("balanced initial sizes violate the size bounds"));
        }
        if self.changes > 0 && k == 1 {
            return Err(Error::Generation("nodes cannot change community when K = 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovDsbmConfig {
    pub n: usize,
    pub model: ConnectivityModel,
    pub horizon: usize,
    pub epsilon: f64,
    pub seed: u64,
}

/// Memberships `Θ_0, …, Θ_T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipSequence {
    thetas: Vec<CommunityLabels>,
}

impl MembershipSequence {
    pub fn new(thetas: Vec<CommunityLabels>) -> Result<Self> {
        let first = thetas.first().ok_or_else(|| invalid("membership sequence is empty"))?;
        let (n, k) = (first.len(), first.k());
        if thetas.iter().any(|t| t.len() != n || t.k() != k) {
            return Err(invalid("all labelings must share n and K"));
        }
        Ok(Self { thetas })
    }

    pub fn thetas(&self) -> &[CommunityLabels] {
        &self.thetas
    }

    pub fn at(&self, t: usize) -> &CommunityLabels {
        &self.thetas[t]
    }

    pub fn last(&self) -> &CommunityLabels {
        self.thetas.last().expect("non-empty by construction")
    }

    pub fn n(&self) -> usize {
        self.thetas[0].len()
    }

    pub fn k(&self) -> usize {
        self.thetas[0].k()
    }

    /// Index of the final step `T`.
    pub fn horizon(&self) -> usize {
        self.thetas.len() - 1
    }

    pub fn write_labels_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for theta in &self.thetas {
            let row: Vec<String> = theta.as_slice().iter().map(|l| l.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_labels_csv<R: BufRead>(r: R, k: usize) -> Result<Self> {
        let mut thetas = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let labels = line
                .split(',')
                .map(|s| s.trim().parse::<usize>().map_err(|e| Error::Parse { line: idx + 1, msg: e.to_string() }))
                .collect::<Result<Vec<_>>>()?;
            thetas.push(CommunityLabels::new(labels, k)?);
        }
        Self::new(thetas)
    }
}

fn balanced_shuffled(n: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    labels.shuffle(rng);
    labels
}

/// Deterministic dynamics: exactly `changes` distinct nodes move per step.
///
/// Each step draws candidate nodes uniformly among those not yet moved in the
/// step and a uniform target community different from the current one. A
/// candidate move that would push a community outside the size bounds is
/// rejected and redrawn, up to `100 · changes` rejections per step.
pub fn gen_deterministic_sequence(cfg: &DeterministicDsbmConfig) -> Result<MembershipSequence> {
    cfg.validate()?;
    let (n, k, s) = (cfg.n, cfg.model.k(), cfg.changes);
    let mut rng = seed::rng(seed::derive(cfg.seed, &[stream::MEMBERSHIP, 0]));
    let mut current = CommunityLabels::new(balanced_shuffled(n, k, &mut rng), k)?;
    let mut sizes = current.sizes();
    let mut thetas = Vec::with_capacity(cfg.horizon + 1);
    thetas.push(current.clone());

    for t in 1..=cfg.horizon {
        let mut rng = seed::rng(seed::derive(cfg.seed, &[stream::MEMBERSHIP, t as u64]));
        let mut pool: Vec<usize> = (0..n).collect();
        let mut moved = 0;
        let mut rejections = 0;
        while moved < s {
            if pool.is_empty() {
                return Err(Error::Generation(format!("step {t}: ran out of movable nodes")));
            }
            let slot = rng.random_range(0..pool.len());
            let node = pool[slot];
            let from = current.get(node);
            let mut to = rng.random_range(0..k - 1);
            if to >= from {
                to += 1;
            }
            if sizes[from] > cfg.n_min && sizes[to] < cfg.n_max {
                pool.swap_remove(slot);
                current.set(node, to);
                sizes[from] -= 1;
                sizes[to] += 1;
                moved += 1;
            } else {
                rejections += 1;
                if rejections > 100 * s {
                    return Err(Error::Generation(format!(
                        "step {t}: no admissible move set found after {rejections} rejections"
                    )));
                }
            }
        }
        thetas.push(current.clone());
    }
    MembershipSequence::new(thetas)
}

/// Markov dynamics with i.i.d. uniform initial labels.
pub fn gen_markov_sequence(cfg: &MarkovDsbmConfig) -> Result<MembershipSequence> {
    if !(0.0..=1.0).contains(&cfg.epsilon) {
        return Err(invalid(format!("epsilon = {} must lie in [0, 1]", cfg.epsilon)));
    }
    let (n, k) = (cfg.n, cfg.model.k());
    let mut rng = seed::rng(seed::derive(cfg.seed, &[stream::MEMBERSHIP, 0]));
    let mut current = CommunityLabels::new((0..n).map(|_| rng.random_range(0..k)).collect(), k)?;
    let mut thetas = Vec::with_capacity(cfg.horizon + 1);
    thetas.push(current.clone());
    for t in 1..=cfg.horizon {
        let mut rng = seed::rng(seed::derive(cfg.seed, &[stream::MEMBERSHIP, t as u64]));
        for i in 0..n {
            if k > 1 && rng.random_bool(cfg.epsilon) {
                let from = current.get(i);
                let mut to = rng.random_range(0..k - 1);
                if to >= from {
                    to += 1;
                }
                current.set(i, to);
            }
        }
        thetas.push(current.clone());
    }
    MembershipSequence::new(thetas)
}

/// Snapshots `A_0, …, A_T`, each drawn from its own `Θ_t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotSequence {
    snapshots: Vec<AdjacencySnapshot>,
}

impl SnapshotSequence {
    pub fn new(snapshots: Vec<AdjacencySnapshot>) -> Result<Self> {
        let first = snapshots.first().ok_or_else(|| invalid("snapshot sequence is empty"))?;
        if snapshots.iter().any(|s| s.n() != first.n()) {
            return Err(invalid("all snapshots must share n"));
        }
        Ok(Self { snapshots })
    }

    pub fn snapshots(&self) -> &[AdjacencySnapshot] {
        &self.snapshots
    }

    pub fn at(&self, t: usize) -> &AdjacencySnapshot {
        &self.snapshots[t]
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

pub fn snapshot_seed(seed: u64, t: usize) -> u64 {
    seed::derive(seed, &[stream::SNAPSHOT, t as u64])
}

pub fn sample_snapshot_sequence(
    seq: &MembershipSequence,
    model: &ConnectivityModel,
    seed: u64,
) -> Result<SnapshotSequence> {
    let snapshots = seq
        .thetas()
        .iter()
        .enumerate()
        .map(|(t, theta)| sample_sbm(theta, model, snapshot_seed(seed, t)))
        .collect::<Result<Vec<_>>>()?;
    SnapshotSequence::new(snapshots)
}

fn snapshot_file(t: usize) -> String {
    format!("snapshot_{t:04}.edges")
}

/// Persist a sequence as `labels.csv`, `manifest.txt` and one edge-list file
/// per step.
pub fn write_sequence_dir(
    dir: &Path,
    memberships: &MembershipSequence,
    snapshots: &SnapshotSequence,
    manifest: &[(String, String)],
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("manifest.txt"))?);
    for (key, value) in manifest {
        writeln!(w, "{key}={value}")?;
    }
    w.flush()?;
    let mut w = BufWriter::new(fs::File::create(dir.join("labels.csv"))?);
    memberships.write_labels_csv(&mut w)?;
    w.flush()?;
    for (t, snap) in snapshots.snapshots().iter().enumerate() {
        let mut w = BufWriter::new(fs::File::create(dir.join(snapshot_file(t)))?);
        snap.write_edge_list(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

/// Flat `key=value` lines; `#` starts a comment.
pub fn read_key_values<R: BufRead>(r: R) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: idx + 1, msg: format!("expected key=value, got {line:?}") })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Load a directory written by [`write_sequence_dir`]; `k` comes from the
/// manifest entry `k`.
pub fn read_sequence_dir(dir: &Path) -> Result<(Vec<(String, String)>, MembershipSequence, SnapshotSequence)> {
    let manifest = read_key_values(BufReader::new(fs::File::open(dir.join("manifest.txt"))?))?;
    let k: usize = manifest
        .iter()
        .find(|(key, _)| key == "k")
        .and_then(|(_, v)| v.parse().ok())
        .ok_or_else(|| invalid("manifest lacks an integer `k` entry"))?;
    let memberships = MembershipSequence::read_labels_csv(BufReader::new(fs::File::open(dir.join("labels.csv"))?), k)?;
    let snapshots = (0..=memberships.horizon())
        .map(|t| AdjacencySnapshot::read_edge_list(BufReader::new(fs::File::open(dir.join(snapshot_file(t)))?)))
        .collect::<Result<Vec<_>>>()?;
    let snapshots = SnapshotSequence::new(snapshots)?;
    if snapshots.at(0).n() != memberships.n() {
        return Err(Error::DimensionMismatch { expected: memberships.n(), found: snapshots.at(0).n() });
    }
    Ok((manifest, memberships, snapshots))
}
