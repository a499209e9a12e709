//! Shared domain types: planar positions, anchor identities and RSSI vectors.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A point in the room plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Planar Euclidean distance to `other`, in meters.
    pub fn distance_to(&self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Opaque identifier of a fixed beacon.
///
/// Ordered so that per-anchor maps iterate deterministically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnchorId(String);

impl AnchorId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AnchorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AnchorId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for AnchorId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// A fixed beacon at a known position. Height is carried as deployment
/// metadata; all distances are computed in the room plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub id: AnchorId,
    pub position: Point,
    pub height_m: f64,
}

impl Anchor {
    pub fn new(id: impl Into<AnchorId>, x: f64, y: f64, height_m: f64) -> Self {
        Self {
            id: id.into(),
            position: Point::new(x, y),
            height_m,
        }
    }
}

/// Per-anchor RSSI vector in dBm, keyed by anchor id.
///
/// A `BTreeMap` keeps iteration order fixed, which in turn keeps every
/// computation over these vectors bit-reproducible.
pub type RssiMap = BTreeMap<AnchorId, f64>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_is_planar_euclidean() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(3.0, 4.0);
        assert_eq!(a.distance_to(b), 5.0);
        assert_eq!(b.distance_to(a), 5.0);
        assert_eq!(a.distance_to(a), 0.0);
    }

    #[test]
    fn anchor_ids_order_lexicographically() {
        let mut map = RssiMap::new();
        map.insert(AnchorId::new("B2"), -50.0);
        map.insert(AnchorId::new("B1"), -40.0);
        let keys: Vec<&str> = map.keys().map(|k| k.as_str()).collect();
        assert_eq!(keys, ["B1", "B2"]);
    }
}
