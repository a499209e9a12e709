//! Shared input builders for the pipeline benchmarks.

use std::collections::BTreeMap;

use beaconloc::fingerprint::{FingerprintDb, FingerprintEntry};
use beaconloc::sim::SimRng;
use beaconloc::{Anchor, AnchorId, Point, RssiMap};

/// A dense synthetic database: `n_entries` positions on a line, every
/// entry covering all `n_anchors` anchors.
pub fn synthetic_db(n_entries: usize, n_anchors: usize, seed: u64) -> (FingerprintDb, RssiMap) {
    let mut rng = SimRng::new(seed);
    let ids: Vec<AnchorId> = (0..n_anchors)
        .map(|i| AnchorId::new(format!("B{i}")))
        .collect();
    let anchors: Vec<Anchor> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| Anchor {
            id: id.clone(),
            position: Point::new(i as f64, 0.0),
            height_m: 1.8,
        })
        .collect();
    let draw = |rng: &mut SimRng| -90.0 + rng.next_f64() * 60.0;
    let entries: Vec<FingerprintEntry> = (0..n_entries)
        .map(|i| {
            let rssi_by_anchor: RssiMap =
                ids.iter().map(|id| (id.clone(), draw(&mut rng))).collect();
            let sample_count_by_anchor: BTreeMap<AnchorId, u64> =
                ids.iter().map(|id| (id.clone(), 10)).collect();
            FingerprintEntry {
                position: Point::new(i as f64 * 0.5, (i % 7) as f64),
                rssi_by_anchor,
                sample_count_by_anchor,
            }
        })
        .collect();
    let query: RssiMap = ids.iter().map(|id| (id.clone(), draw(&mut rng))).collect();
    (FingerprintDb::new(anchors, entries).unwrap(), query)
}
