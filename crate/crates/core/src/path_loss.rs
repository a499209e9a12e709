//! Log-distance path-loss model: forward RSSI prediction, inverse distance
//! estimation and least-squares calibration.
//!
//! The model is
//!
//! ```text
//! rssi(d) = rssi(d0) - 10 n log10(d / d0)
//! ```
//!
//! Signal strength decays linearly in log-distance; the slope is set by the
//! path-loss exponent `n` of the environment. Because the model is linear in
//! `log10(d)`, calibration reduces to an exact ordinary-least-squares fit.

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PathLossError {
    #[error("distance must be positive, got {distance_m} m")]
    NonPositiveDistance { distance_m: f64 },
    #[error("path-loss exponent is zero; the model cannot be inverted")]
    DegenerateExponent,
    #[error("calibration needs at least two samples at distinct distances")]
    InsufficientData,
    #[error("invalid model parameter: {reason}")]
    InvalidParams { reason: String },
    #[error("calibration CSV line {line}: {reason}")]
    Csv { line: u64, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parameters of the log-distance model: the reference RSSI at distance
/// `d0_m`, and the environment's path-loss exponent `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    pub rssi_at_d0_dbm: f64,
    pub d0_m: f64,
    pub n: f64,
}

impl PathLossParams {
    pub fn new(rssi_at_d0_dbm: f64, d0_m: f64, n: f64) -> Result<Self, PathLossError> {
        let params = Self {
            rssi_at_d0_dbm,
            d0_m,
            n,
        };
        params.validate()?;
        Ok(params)
    }

    /// Take an iBeacon `measured_power` byte as the reference RSSI. The
    /// field is defined as the calibrated RSSI at one meter, so `d0` is 1 m.
    pub fn from_measured_power(measured_power: i8, n: f64) -> Self {
        Self {
            rssi_at_d0_dbm: f64::from(measured_power),
            d0_m: 1.0,
            n,
        }
    }

    pub fn validate(&self) -> Result<(), PathLossError> {
        if !self.d0_m.is_finite() || self.d0_m <= 0.0 {
            return Err(PathLossError::InvalidParams {
                reason: format!("reference distance d0 = {} m must be positive", self.d0_m),
            });
        }
        if !self.rssi_at_d0_dbm.is_finite() {
            return Err(PathLossError::InvalidParams {
                reason: "reference RSSI must be finite".into(),
            });
        }
        if !self.n.is_finite() {
            return Err(PathLossError::InvalidParams {
                reason: "path-loss exponent must be finite".into(),
            });
        }
        Ok(())
    }

    /// Expected RSSI at `distance_m` meters.
    pub fn predict_rssi(&self, distance_m: f64) -> Result<f64, PathLossError> {
        if distance_m.is_nan() || distance_m <= 0.0 {
            return Err(PathLossError::NonPositiveDistance { distance_m });
        }
        Ok(self.rssi_at_d0_dbm - 10.0 * self.n * (distance_m / self.d0_m).log10())
    }

    /// Distance at which the model predicts `rssi_dbm`. Exact inverse of
    /// [`predict_rssi`](Self::predict_rssi); undefined when `n` is zero.
    pub fn estimate_distance(&self, rssi_dbm: f64) -> Result<f64, PathLossError> {
        if self.n == 0.0 {
            return Err(PathLossError::DegenerateExponent);
        }
        Ok(self.d0_m * 10f64.powf((self.rssi_at_d0_dbm - rssi_dbm) / (10.0 * self.n)))
    }
}

/// Fit `(rssi_at_d0, n)` to measured `(distance_m, rssi_dbm)` pairs by
/// ordinary least squares on the regressor `x = log10(d / d0)`.
///
/// Needs at least two samples at distinct distances, all positive.
pub fn calibrate(samples: &[(f64, f64)], d0_m: f64) -> Result<PathLossParams, PathLossError> {
    if !d0_m.is_finite() || d0_m <= 0.0 {
        return Err(PathLossError::InvalidParams {
            reason: format!("reference distance d0 = {d0_m} m must be positive"),
        });
    }
    if samples.len() < 2 {
        return Err(PathLossError::InsufficientData);
    }
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    for &(distance_m, rssi_dbm) in samples {
        if distance_m.is_nan() || distance_m <= 0.0 || !distance_m.is_finite() {
            return Err(PathLossError::NonPositiveDistance { distance_m });
        }
        if !rssi_dbm.is_finite() {
            return Err(PathLossError::InvalidParams {
                reason: format!("non-finite RSSI sample at {distance_m} m"),
            });
        }
        xs.push((distance_m / d0_m).log10());
        ys.push(rssi_dbm);
    }
    let count = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / count;
    let y_mean = ys.iter().sum::<f64>() / count;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    if sxx == 0.0 {
        // all samples at the same distance: the slope is unidentifiable
        return Err(PathLossError::InsufficientData);
    }
    let slope = sxy / sxx;
    PathLossParams::new(y_mean - slope * x_mean, d0_m, -slope / 10.0)
}

/// Header of the calibration sample file.
pub const CALIBRATION_CSV_HEADER: &str = "distance_m,rssi_dbm";

/// Read `(distance_m, rssi_dbm)` samples from CSV. Blank lines are skipped;
/// anything else malformed is an error with its line number.
pub fn read_calibration_csv(reader: impl BufRead) -> Result<Vec<(f64, f64)>, PathLossError> {
    let mut samples = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx as u64 + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !saw_header {
            if trimmed != CALIBRATION_CSV_HEADER {
                return Err(PathLossError::Csv {
                    line: line_no,
                    reason: format!("expected header {CALIBRATION_CSV_HEADER:?}"),
                });
            }
            saw_header = true;
            continue;
        }
        let mut fields = trimmed.split(',');
        let (d, rssi) = match (fields.next(), fields.next(), fields.next()) {
            (Some(d), Some(r), None) => (d, r),
            _ => {
                return Err(PathLossError::Csv {
                    line: line_no,
                    reason: "expected exactly two comma-separated fields".into(),
                })
            }
        };
        let parse = |s: &str, what: &str| {
            s.trim().parse::<f64>().map_err(|_| PathLossError::Csv {
                line: line_no,
                reason: format!("cannot parse {what} from {s:?}"),
            })
        };
        samples.push((parse(d, "distance_m")?, parse(rssi, "rssi_dbm")?));
    }
    if !saw_header {
        return Err(PathLossError::Csv {
            line: 1,
            reason: format!("missing header {CALIBRATION_CSV_HEADER:?}"),
        });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::SimRng;
    use proptest::prelude::*;

    fn reference() -> PathLossParams {
        PathLossParams::new(-40.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn rssi_at_reference_distance_is_reference_rssi() {
        assert_eq!(reference().predict_rssi(1.0).unwrap(), -40.0);
    }

    #[test]
    fn rssi_one_decade_out() {
        assert_eq!(reference().predict_rssi(10.0).unwrap(), -60.0);
    }

    #[test]
    fn zero_distance_is_rejected() {
        assert!(matches!(
            reference().predict_rssi(0.0),
            Err(PathLossError::NonPositiveDistance { .. })
        ));
        assert!(matches!(
            reference().predict_rssi(-2.0),
            Err(PathLossError::NonPositiveDistance { .. })
        ));
    }

    #[test]
    fn distance_from_rssi_inverts_the_model() {
        let d = reference().estimate_distance(-60.0).unwrap();
        assert!((d - 10.0).abs() < 1e-12);
        let d = reference().estimate_distance(-40.0).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_exponent_cannot_be_inverted() {
        let params = PathLossParams::new(-40.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            params.estimate_distance(-50.0),
            Err(PathLossError::DegenerateExponent)
        ));
    }

    #[test]
    fn noiseless_calibration_recovers_parameters_exactly() {
        let truth = PathLossParams::new(-45.0, 1.0, 2.5).unwrap();
        let samples: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&d| (d, truth.predict_rssi(d).unwrap()))
            .collect();
        let fitted = calibrate(&samples, 1.0).unwrap();
        assert!((fitted.rssi_at_d0_dbm - -45.0).abs() < 1e-9);
        assert!((fitted.n - 2.5).abs() < 1e-9);
    }

    #[test]
    fn repeated_distance_is_insufficient() {
        let samples = [(2.0, -50.0), (2.0, -51.0)];
        assert!(matches!(
            calibrate(&samples, 1.0),
            Err(PathLossError::InsufficientData)
        ));
        assert!(matches!(
            calibrate(&samples[..1], 1.0),
            Err(PathLossError::InsufficientData)
        ));
    }

    #[test]
    fn noisy_calibration_recovers_the_exponent() {
        // Zero-mean uniform noise of 0.5 dB amplitude over 20 distances.
        // With seed 7 the fit lands at n = 2.0045; the asserted band is
        // several times wider than that attained error.
        let truth = PathLossParams::new(-40.0, 1.0, 2.0).unwrap();
        let mut rng = SimRng::new(7);
        let samples: Vec<(f64, f64)> = (1..=20)
            .map(|i| {
                let d = 0.5 * i as f64;
                let noise = (rng.next_f64() - 0.5) * 1.0;
                (d, truth.predict_rssi(d).unwrap() + noise)
            })
            .collect();
        let fitted = calibrate(&samples, 1.0).unwrap();
        assert!(
            (fitted.n - 2.0).abs() <= 0.15,
            "n = {} drifted more than 0.15 from 2.0",
            fitted.n
        );
    }

    #[test]
    fn csv_reader_parses_and_reports_line_numbers() {
        let input = "distance_m,rssi_dbm\n1.0,-45\n2.0,-52.5\n";
        let samples = read_calibration_csv(input.as_bytes()).unwrap();
        assert_eq!(samples, vec![(1.0, -45.0), (2.0, -52.5)]);

        let bad = "distance_m,rssi_dbm\n1.0,-45\noops\n";
        match read_calibration_csv(bad.as_bytes()) {
            Err(PathLossError::Csv { line: 3, .. }) => {}
            other => panic!("expected CSV error on line 3, got {other:?}"),
        }

        let no_header = "1.0,-45\n";
        assert!(matches!(
            read_calibration_csv(no_header.as_bytes()),
            Err(PathLossError::Csv { line: 1, .. })
        ));
    }

    proptest! {
        /// Inverse composition: estimate_distance(predict_rssi(d)) = d.
        #[test]
        fn predict_then_estimate_recovers_distance(
            rssi0 in -90.0f64..-20.0,
            n in 0.5f64..6.0,
            d0 in 0.1f64..5.0,
            d in 0.01f64..100.0,
        ) {
            let params = PathLossParams::new(rssi0, d0, n).unwrap();
            let rssi = params.predict_rssi(d).unwrap();
            let back = params.estimate_distance(rssi).unwrap();
            prop_assert!(((back - d) / d).abs() < 1e-9);
        }

        /// For n > 0 the predicted RSSI strictly decreases with distance.
        #[test]
        fn rssi_decreases_with_distance(
            n in 0.1f64..6.0,
            d1 in 0.01f64..100.0,
            factor in 1.001f64..10.0,
        ) {
            let params = PathLossParams::new(-40.0, 1.0, n).unwrap();
            let near = params.predict_rssi(d1).unwrap();
            let far = params.predict_rssi(d1 * factor).unwrap();
            prop_assert!(far < near);
        }

        /// Calibration is a fixed point on noiseless model output.
        #[test]
        fn calibration_fixed_point(
            rssi0 in -90.0f64..-20.0,
            n in -2.0f64..6.0,
            seed in any::<u64>(),
        ) {
            let truth = PathLossParams::new(rssi0, 1.0, n).unwrap();
            let mut rng = SimRng::new(seed);
            let samples: Vec<(f64, f64)> = (0..8)
                .map(|_| {
                    let d = 0.2 + rng.next_f64() * 30.0;
                    (d, truth.predict_rssi(d).unwrap())
                })
                .collect();
            // distances are continuous draws, collisions are not a concern
            let fitted = calibrate(&samples, 1.0).unwrap();
            prop_assert!((fitted.rssi_at_d0_dbm - rssi0).abs() < 1e-9);
            prop_assert!((fitted.n - n).abs() < 1e-9);
        }

        /// Shifting every RSSI by c shifts the intercept by c and leaves n alone.
        #[test]
        fn calibration_is_shift_equivariant(shift in -30.0f64..30.0) {
            let truth = PathLossParams::new(-45.0, 1.0, 2.5).unwrap();
            let base: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0, 16.0]
                .iter()
                .map(|&d| (d, truth.predict_rssi(d).unwrap()))
                .collect();
            let shifted: Vec<(f64, f64)> = base.iter().map(|&(d, r)| (d, r + shift)).collect();
            let f0 = calibrate(&base, 1.0).unwrap();
            let f1 = calibrate(&shifted, 1.0).unwrap();
            prop_assert!((f1.rssi_at_d0_dbm - (f0.rssi_at_d0_dbm + shift)).abs() < 1e-9);
            prop_assert!((f1.n - f0.n).abs() < 1e-9);
        }
    }
}
