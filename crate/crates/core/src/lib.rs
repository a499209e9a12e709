//! RSSI-fingerprint indoor localization over BLE beacons.
//!
//! The pipeline, end to end:
//!
//! 1. [`ibeacon`] — bit-exact codec for the advertising payloads the
//!    anchors broadcast.
//! 2. [`path_loss`] — the log-distance signal model and its calibration.
//! 3. [`ingest`] — observation records (NDJSON) cut into scan windows and
//!    collapsed to per-anchor mean RSSI query vectors.
//! 4. [`fingerprint`] — the trained database of reference positions.
//! 5. [`estimator`] — kNN / weighted-kNN position estimation in signal
//!    space under the Chebyshev or Euclidean norm.
//! 6. [`sim`] — a deterministic synthetic-room generator for closed-loop
//!    runs without hardware.
//! 7. [`eval`] — error statistics and norm / anchor-subset sweeps.

pub mod estimator;
pub mod eval;
pub mod fingerprint;
pub mod ibeacon;
pub mod ingest;
pub mod path_loss;
pub mod sim;
pub mod types;

pub use types::{Anchor, AnchorId, Point, RssiMap};
