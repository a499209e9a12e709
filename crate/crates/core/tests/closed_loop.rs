//! Library-level closed loop: simulate a room, train fingerprints from the
//! simulated stream, then query at the training positions.

use beaconloc::estimator::{estimate, EstimatorConfig, Mode, Norm};
use beaconloc::fingerprint::{build_entry, FingerprintDb};
use beaconloc::ingest::{window_stream, window_to_query};
use beaconloc::sim::{reference_scenario, simulate, GroundTruthTrace, SimScenario};
use beaconloc::Point;

fn train(scenario: &SimScenario, positions: &[Point], dwell_ms: u64) -> FingerprintDb {
    let mut scenario = scenario.clone();
    let mut entries = Vec::new();
    for (i, &position) in positions.iter().enumerate() {
        scenario.seed = 100 + i as u64;
        let trace = GroundTruthTrace::new(vec![(0, position)]).unwrap();
        let observations = simulate(&scenario, &trace, dwell_ms).unwrap();
        let windows = window_stream(observations, 1000).unwrap();
        entries.push(build_entry(position, &windows).unwrap());
    }
    FingerprintDb::new(scenario.anchors.clone(), entries).unwrap()
}

#[test]
fn zero_noise_queries_snap_back_to_their_training_position() {
    let (mut scenario, positions) = reference_scenario();
    scenario.noise_sigma_db = 0.0;
    scenario.packet_loss_p = 0.0;
    let db = train(&scenario, &positions, 5000);

    let cfg = EstimatorConfig::default(); // k = 3, chebyshev, wknn
    for (i, &position) in positions.iter().enumerate() {
        scenario.seed = 500 + i as u64;
        let trace = GroundTruthTrace::new(vec![(0, position)]).unwrap();
        let observations = simulate(&scenario, &trace, 3000).unwrap();
        for window in window_stream(observations, 1000).unwrap() {
            let query = window_to_query(&window);
            let result = estimate(&db, &query, &cfg).unwrap();
            let error = result.position.distance_to(position);
            assert!(
                error < 0.1,
                "query at {position} estimated {} ({error} m off)",
                result.position
            );
        }
    }
}

#[test]
fn noisy_queries_stay_close_under_every_mode_and_norm() {
    let (scenario, positions) = reference_scenario(); // sigma 2 dB, loss 5%
    let db = train(&scenario, &positions, 20_000);

    for norm in [Norm::Chebyshev, Norm::Euclidean] {
        for mode in [Mode::Knn, Mode::Wknn] {
            let cfg = EstimatorConfig {
                norm,
                mode,
                ..EstimatorConfig::default()
            };
            let mut total = 0.0;
            let mut count = 0usize;
            let mut query_scenario = scenario.clone();
            for (i, &position) in positions.iter().enumerate() {
                query_scenario.seed = 900 + i as u64;
                let trace = GroundTruthTrace::new(vec![(0, position)]).unwrap();
                let observations = simulate(&query_scenario, &trace, 10_000).unwrap();
                for window in window_stream(observations, 1000).unwrap() {
                    let query = window_to_query(&window);
                    let result = estimate(&db, &query, &cfg).unwrap();
                    total += result.position.distance_to(position);
                    count += 1;
                }
            }
            let mean = total / count as f64;
            // loose sanity band; the tighter published-style band lives in
            // the acceptance suite
            assert!(
                mean < 1.5,
                "{norm}/{mode}: mean error {mean} m over {count} queries"
            );
        }
    }
}
