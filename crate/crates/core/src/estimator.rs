//! Position estimation: k-nearest-neighbor search in signal space over the
//! fingerprint database, plain or reciprocal-distance weighted.
//!
//! A query vector is compared against every trained entry using the
//! Chebyshev or Euclidean norm of the RSSI difference, restricted to the
//! anchors both sides actually observed. The k entries with the smallest
//! signal distance are combined into a position: an unweighted centroid
//! (kNN) or a convex combination weighted by reciprocal signal distance
//! (wkNN). An exact fingerprint match (signal distance below
//! `zero_distance_epsilon`, or exactly zero) short-circuits to the matched
//! training position in either mode; for wkNN this realizes the limit of
//! the reciprocal weight instead of dividing by a vanishing distance.
//!
//! Weights are reciprocals of the signal-space norm in dBm, not of a
//! physical distance derived through the path-loss model.
//!
//! Ties are always broken by ascending entry index, so identical inputs
//! yield bit-identical results.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::fingerprint::FingerprintDb;
use crate::types::{Point, RssiMap};

/// Signal-space norm applied to the RSSI difference vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    /// Maximum absolute componentwise difference.
    Chebyshev,
    /// Root-sum-square difference.
    Euclidean,
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::Chebyshev => "chebyshev",
            Norm::Euclidean => "euclidean",
        })
    }
}

impl FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "chebyshev" => Ok(Norm::Chebyshev),
            "euclidean" => Ok(Norm::Euclidean),
            other => Err(format!("unknown norm {other:?} (chebyshev|euclidean)")),
        }
    }
}

/// Neighbor combination mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Unweighted centroid of the k nearest entries.
    Knn,
    /// Reciprocal-signal-distance weighted combination.
    Wknn,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Knn => "knn",
            Mode::Wknn => "wknn",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "knn" => Ok(Mode::Knn),
            "wknn" => Ok(Mode::Wknn),
            other => Err(format!("unknown mode {other:?} (knn|wknn)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub k: usize,
    pub norm: Norm,
    pub mode: Mode,
    /// An entry is only comparable when it shares at least this many
    /// anchors with the query.
    pub min_common_anchors: usize,
    /// Signal distances below this snap to the matched entry's position.
    pub zero_distance_epsilon: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            k: 3,
            norm: Norm::Chebyshev,
            mode: Mode::Wknn,
            min_common_anchors: 3,
            zero_distance_epsilon: 1e-9,
        }
    }
}

/// One selected neighbor: which entry, how far in signal space, and the
/// weight it contributed to the estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub entry_index: usize,
    pub signal_distance_dbm: f64,
    pub weight: f64,
}

/// An estimated position with the neighbors that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub position: Point,
    /// Exactly k neighbors, sorted by (signal distance, entry index).
    /// Weights are non-negative and sum to one.
    pub neighbors: Vec<Neighbor>,
    pub norm: Norm,
    pub mode: Mode,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EstimateError {
    /// Too little shared signal to compare: for a single pair of RSSI
    /// vectors, `have`/`need` count common anchors; for a whole query,
    /// they count comparable database entries against k.
    #[error("insufficient overlap: have {have}, need {need}")]
    InsufficientOverlap { have: usize, need: usize },
    #[error("database has {available} entries, need {required}")]
    NotEnoughEntries { available: usize, required: usize },
    #[error("k = {k} exceeds the number of candidates ({len})")]
    KTooLarge { k: usize, len: usize },
    #[error("invalid estimator config: {reason}")]
    InvalidConfig { reason: &'static str },
}

/// Distance between two RSSI vectors over their common anchors.
///
/// At least one common anchor is always required, even when
/// `min_common_anchors` is zero.
pub fn signal_distance(
    a: &RssiMap,
    b: &RssiMap,
    norm: Norm,
    min_common_anchors: usize,
) -> Result<f64, EstimateError> {
    let mut common = 0usize;
    let mut max_abs: f64 = 0.0;
    let mut sum_sq: f64 = 0.0;
    for (id, &va) in a {
        if let Some(&vb) = b.get(id) {
            common += 1;
            let d = va - vb;
            max_abs = max_abs.max(d.abs());
            sum_sq += d * d;
        }
    }
    let need = min_common_anchors.max(1);
    if common < need {
        return Err(EstimateError::InsufficientOverlap { have: common, need });
    }
    Ok(match norm {
        Norm::Chebyshev => max_abs,
        Norm::Euclidean => sum_sq.sqrt(),
    })
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    distance: f64,
    index: usize,
}

impl Candidate {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_key(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_key(other)
    }
}

/// Indices of the k smallest distances, ties broken by ascending index.
///
/// Runs a bounded max-heap of size k over the candidates rather than a full
/// sort. The result is sorted ascending by (distance, index). `k = 0`
/// yields an empty selection.
pub fn knn_select(distances: &[f64], k: usize) -> Result<Vec<usize>, EstimateError> {
    if k > distances.len() {
        return Err(EstimateError::KTooLarge {
            k,
            len: distances.len(),
        });
    }
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
    for (index, &distance) in distances.iter().enumerate() {
        heap.push(Candidate { distance, index });
        if heap.len() > k {
            heap.pop();
        }
    }
    let mut kept = heap.into_vec();
    kept.sort_unstable();
    Ok(kept.into_iter().map(|c| c.index).collect())
}

/// Estimate a position for `query` against the trained database.
pub fn estimate(
    db: &FingerprintDb,
    query: &RssiMap,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult, EstimateError> {
    if cfg.k == 0 {
        return Err(EstimateError::InvalidConfig {
            reason: "k must be at least 1",
        });
    }
    if cfg.zero_distance_epsilon.is_nan() || cfg.zero_distance_epsilon < 0.0 {
        return Err(EstimateError::InvalidConfig {
            reason: "zero_distance_epsilon must be non-negative",
        });
    }
    let entries = db.entries();
    if entries.len() < cfg.k {
        return Err(EstimateError::NotEnoughEntries {
            available: entries.len(),
            required: cfg.k,
        });
    }

    // Pairwise distances to every comparable entry, in index order.
    let mut eligible: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (index, entry) in entries.iter().enumerate() {
        match signal_distance(query, &entry.rssi_by_anchor, cfg.norm, cfg.min_common_anchors) {
            Ok(d) => eligible.push((index, d)),
            Err(EstimateError::InsufficientOverlap { .. }) => {}
            Err(other) => return Err(other),
        }
    }
    if eligible.len() < cfg.k {
        return Err(EstimateError::InsufficientOverlap {
            have: eligible.len(),
            need: cfg.k,
        });
    }

    let distances: Vec<f64> = eligible.iter().map(|&(_, d)| d).collect();
    let selected: Vec<(usize, f64)> = knn_select(&distances, cfg.k)
        .expect("k <= eligible checked above")
        .into_iter()
        .map(|i| eligible[i])
        .collect();

    // Exact-match snap, both modes: lowest entry index among near-zero
    // hits. A distance of exactly zero snaps even when the epsilon is
    // zero, since the reciprocal weight is singular there.
    let snap = selected
        .iter()
        .filter(|&&(_, d)| d < cfg.zero_distance_epsilon || d == 0.0)
        .map(|&(index, _)| index)
        .min();
    if let Some(snap_index) = snap {
        let neighbors = selected
            .iter()
            .map(|&(entry_index, signal_distance_dbm)| Neighbor {
                entry_index,
                signal_distance_dbm,
                weight: if entry_index == snap_index { 1.0 } else { 0.0 },
            })
            .collect();
        return Ok(EstimateResult {
            position: entries[snap_index].position,
            neighbors,
            norm: cfg.norm,
            mode: cfg.mode,
        });
    }

    let weights: Vec<f64> = match cfg.mode {
        Mode::Knn => vec![1.0 / cfg.k as f64; cfg.k],
        Mode::Wknn => {
            let inverses: Vec<f64> = selected.iter().map(|&(_, d)| 1.0 / d).collect();
            let total: f64 = inverses.iter().sum();
            inverses.into_iter().map(|inv| inv / total).collect()
        }
    };
    let mut x = 0.0;
    let mut y = 0.0;
    for (&(index, _), &w) in selected.iter().zip(&weights) {
        x += w * entries[index].position.x;
        y += w * entries[index].position.y;
    }
    // The combination is convex; nudge rounding overshoot back into the
    // neighbor bounding box.
    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for &(index, _) in &selected {
        let p = entries[index].position;
        x_lo = x_lo.min(p.x);
        x_hi = x_hi.max(p.x);
        y_lo = y_lo.min(p.y);
        y_hi = y_hi.max(p.y);
    }
    let position = Point::new(x.clamp(x_lo, x_hi), y.clamp(y_lo, y_hi));

    let neighbors = selected
        .iter()
        .zip(&weights)
        .map(|(&(entry_index, signal_distance_dbm), &weight)| Neighbor {
            entry_index,
            signal_distance_dbm,
            weight,
        })
        .collect();
    Ok(EstimateResult {
        position,
        neighbors,
        norm: cfg.norm,
        mode: cfg.mode,
    })
}
