//! Observation stream parsing and scan windowing.
//!
//! Receivers forward one record per received advertisement as
//! newline-delimited JSON: `{"t_ms":120,"anchor":"B1","rssi":-63}`. The same
//! format is used for file replay and for the live socket path. A stream is
//! cut into fixed-duration tumbling windows; the per-anchor mean RSSI of a
//! window is the query vector handed to the estimator.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{AnchorId, RssiMap};

/// Lowest RSSI a record may carry, in dBm.
pub const WIRE_RSSI_MIN: i64 = -127;
/// Highest RSSI a record may carry, in dBm.
pub const WIRE_RSSI_MAX: i64 = 20;

/// One received advertisement: when it arrived, which anchor sent it, and
/// the RSSI the radio reported.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Milliseconds since the stream epoch.
    pub t_ms: u64,
    pub anchor: AnchorId,
    /// dBm. Integer-valued on the wire; kept real-valued here so window
    /// means never round.
    pub rssi_dbm: f64,
}

/// A single malformed observation record.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("byte {offset}: {reason}")]
pub struct ObservationParseError {
    /// Byte offset of the problem within the line (0 when the problem is
    /// semantic rather than syntactic).
    pub offset: usize,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {source}")]
    Parse {
        line: u64,
        #[source]
        source: ObservationParseError,
    },
    #[error("out-of-order timestamp {t_ms} ms after {prev_t_ms} ms")]
    OutOfOrder { t_ms: u64, prev_t_ms: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How the stream reader treats malformed lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// First malformed line aborts the stream.
    Strict,
    /// Malformed lines are counted and skipped.
    #[default]
    Lenient,
}

#[derive(Debug, Deserialize)]
struct WireObservation {
    t_ms: i64,
    anchor: String,
    rssi: i64,
}

#[derive(Debug, Serialize)]
struct WireObservationOut<'a> {
    t_ms: u64,
    anchor: &'a str,
    rssi: i64,
}

/// Parse one NDJSON observation record.
pub fn parse_observation_line(line: &str) -> Result<Observation, ObservationParseError> {
    if line.trim().is_empty() {
        return Err(ObservationParseError {
            offset: 0,
            reason: "blank line".into(),
        });
    }
    let wire: WireObservation =
        serde_json::from_str(line).map_err(|e| ObservationParseError {
            offset: e.column().saturating_sub(1),
            reason: e.to_string(),
        })?;
    if wire.t_ms < 0 {
        return Err(ObservationParseError {
            offset: 0,
            reason: format!("negative timestamp {}", wire.t_ms),
        });
    }
    if wire.anchor.is_empty() {
        return Err(ObservationParseError {
            offset: 0,
            reason: "empty anchor id".into(),
        });
    }
    if !(WIRE_RSSI_MIN..=WIRE_RSSI_MAX).contains(&wire.rssi) {
        return Err(ObservationParseError {
            offset: 0,
            reason: format!(
                "rssi {} outside [{WIRE_RSSI_MIN}, {WIRE_RSSI_MAX}] dBm",
                wire.rssi
            ),
        });
    }
    Ok(Observation {
        t_ms: wire.t_ms as u64,
        anchor: AnchorId::new(wire.anchor),
        rssi_dbm: wire.rssi as f64,
    })
}

/// Write one observation in the NDJSON wire format (RSSI as integer dBm).
pub fn write_observation_ndjson(
    mut w: impl Write,
    obs: &Observation,
) -> Result<(), std::io::Error> {
    let wire = WireObservationOut {
        t_ms: obs.t_ms,
        anchor: obs.anchor.as_str(),
        rssi: obs.rssi_dbm.round() as i64,
    };
    serde_json::to_writer(&mut w, &wire)?;
    writeln!(w)
}

/// Iterator over observation records from a line-oriented reader.
#[derive(Debug)]
pub struct ObservationReader<R> {
    reader: R,
    mode: ParseMode,
    line_no: u64,
    skipped: u64,
}

impl<R: BufRead> ObservationReader<R> {
    pub fn new(reader: R, mode: ParseMode) -> Self {
        Self {
            reader,
            mode,
            line_no: 0,
            skipped: 0,
        }
    }

    /// Number of malformed lines skipped so far (lenient mode only).
    pub fn skipped_lines(&self) -> u64 {
        self.skipped
    }
}

impl<R: BufRead> Iterator for ObservationReader<R> {
    type Item = Result<Observation, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let mut line = String::new();
            match self.reader.read_line(&mut line) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(IngestError::Io(e))),
            }
            self.line_no += 1;
            match parse_observation_line(line.trim_end_matches(['\n', '\r'])) {
                Ok(obs) => return Some(Ok(obs)),
                Err(source) => match self.mode {
                    ParseMode::Strict => {
                        return Some(Err(IngestError::Parse {
                            line: self.line_no,
                            source,
                        }))
                    }
                    ParseMode::Lenient => {
                        self.skipped += 1;
                        continue;
                    }
                },
            }
        }
    }
}

/// A fixed-duration time bucket of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanWindow {
    pub start_ms: u64,
    pub duration_ms: u64,
    pub observations: Vec<Observation>,
}

impl ScanWindow {
    pub fn end_ms(&self) -> u64 {
        self.start_ms.saturating_add(self.duration_ms)
    }
}

/// Incremental tumbling-window builder over a time-ordered stream.
///
/// Windows are aligned to the first observation's timestamp and cover
/// `[start, start + window_ms)`. Gaps emit empty windows so downstream
/// timing is preserved. Timestamp regressions beyond the tolerance
/// (default 0 ms) abort the stream; regressions within the tolerance that
/// land before the open window are dropped and counted.
#[derive(Debug)]
pub struct WindowStream {
    window_ms: u64,
    tolerance_ms: u64,
    started: bool,
    current_start: u64,
    current: Vec<Observation>,
    last_t: u64,
    late_dropped: u64,
}

impl WindowStream {
    pub fn new(window_ms: u64) -> Self {
        Self::with_tolerance(window_ms, 0)
    }

    pub fn with_tolerance(window_ms: u64, tolerance_ms: u64) -> Self {
        assert!(window_ms > 0, "window duration must be positive");
        Self {
            window_ms,
            tolerance_ms,
            started: false,
            current_start: 0,
            current: Vec::new(),
            last_t: 0,
            late_dropped: 0,
        }
    }

    /// Feed one observation; returns every window completed by it.
    pub fn push(&mut self, obs: Observation) -> Result<Vec<ScanWindow>, IngestError> {
        if !self.started {
            self.started = true;
            self.current_start = obs.t_ms;
            self.last_t = obs.t_ms;
            self.current.push(obs);
            return Ok(Vec::new());
        }
        if obs.t_ms < self.last_t {
            if self.last_t - obs.t_ms > self.tolerance_ms {
                return Err(IngestError::OutOfOrder {
                    t_ms: obs.t_ms,
                    prev_t_ms: self.last_t,
                });
            }
            if obs.t_ms < self.current_start {
                // tolerated regression, but its window is already closed
                self.late_dropped += 1;
                return Ok(Vec::new());
            }
        }
        self.last_t = self.last_t.max(obs.t_ms);
        let mut completed = Vec::new();
        // saturating arithmetic keeps timestamps near u64::MAX from
        // wrapping; the final window simply absorbs everything beyond
        while obs.t_ms >= self.current_start.saturating_add(self.window_ms)
            && self.current_start.checked_add(self.window_ms).is_some()
        {
            completed.push(ScanWindow {
                start_ms: self.current_start,
                duration_ms: self.window_ms,
                observations: std::mem::take(&mut self.current),
            });
            self.current_start += self.window_ms;
        }
        self.current.push(obs);
        Ok(completed)
    }

    /// Close the stream, yielding the trailing window if one was open.
    pub fn finish(self) -> Option<ScanWindow> {
        self.started.then_some(ScanWindow {
            start_ms: self.current_start,
            duration_ms: self.window_ms,
            observations: self.current,
        })
    }

    /// Tolerated-but-late observations dropped so far.
    pub fn late_dropped(&self) -> u64 {
        self.late_dropped
    }
}

/// Cut a complete observation sequence into tumbling windows.
pub fn window_stream(
    observations: impl IntoIterator<Item = Observation>,
    window_ms: u64,
) -> Result<Vec<ScanWindow>, IngestError> {
    let mut stream = WindowStream::new(window_ms);
    let mut out = Vec::new();
    for obs in observations {
        out.extend(stream.push(obs)?);
    }
    out.extend(stream.finish());
    Ok(out)
}

/// Collapse a window into its query vector: per-anchor arithmetic mean of
/// the window's samples. Anchors unseen in the window are simply absent.
pub fn window_to_query(window: &ScanWindow) -> RssiMap {
    let mut sums: BTreeMap<AnchorId, (f64, u64)> = BTreeMap::new();
    for obs in &window.observations {
        let slot = sums.entry(obs.anchor.clone()).or_insert((0.0, 0));
        slot.0 += obs.rssi_dbm;
        slot.1 += 1;
    }
    sums.into_iter()
        .map(|(id, (sum, count))| (id, sum / count as f64))
        .collect()
}
