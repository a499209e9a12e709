//! Positioning error statistics and configuration sweeps.
//!
//! Errors are planar Euclidean distances between true and estimated
//! positions. Reports aggregate mean, maximum and minimum over a run and
//! serialize to CSV; sweep runs evaluate one cell per (estimator config,
//! anchor subset) over identical query windows.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::estimator::{estimate, EstimateError, EstimatorConfig, Mode, Norm};
use crate::fingerprint::FingerprintDb;
use crate::types::{AnchorId, Point, RssiMap};

/// Header of the aggregate report CSV.
pub const REPORT_CSV_HEADER: &str = "config_id,norm,k,mode,anchors,mean_m,max_m,min_m,n_queries";
/// Header of the per-query CSV.
pub const PER_QUERY_CSV_HEADER: &str = "t_ms,true_x,true_y,est_x,est_y,err_m";

/// Mean positioning error of the original hardware deployment this
/// simulator mirrors (wkNN, k = 3, Chebyshev norm, four anchors in a
/// 7.2 m x 7.2 m room). Report CSVs print these as a comparison baseline.
pub const REFERENCE_MEAN_ERROR_M: f64 = 0.704;
/// Worst-case error of the same deployment.
pub const REFERENCE_MAX_ERROR_M: f64 = 2.5;
/// Best-case error of the same deployment.
pub const REFERENCE_MIN_ERROR_M: f64 = 0.27;
/// Sample count behind the reference numbers.
pub const REFERENCE_QUERY_COUNT: u64 = 1000;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no query results to aggregate")]
    EmptyRun,
    #[error("cell {config_id}: {source}")]
    Cell {
        config_id: String,
        #[source]
        source: EstimateError,
    },
    #[error("positions CSV line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Identification of the configuration a report was computed under.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportConfig {
    pub config_id: String,
    pub norm: Norm,
    pub mode: Mode,
    pub k: usize,
    /// Number of anchors available to the estimator; 0 when not recorded.
    pub anchor_count: usize,
}

/// One evaluated query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub t_ms: u64,
    pub true_position: Point,
    pub estimated_position: Point,
    pub error_m: f64,
}

/// Error statistics over one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub config: ReportConfig,
    pub per_query: Vec<QueryRecord>,
    pub mean_error_m: f64,
    pub max_error_m: f64,
    pub min_error_m: f64,
}

impl ErrorReport {
    pub fn query_count(&self) -> usize {
        self.per_query.len()
    }
}

/// Aggregate `(true position, estimated position, t_ms)` triples into an
/// error report. Input order is preserved in `per_query`.
pub fn evaluate(
    pairs: &[(Point, Point, u64)],
    config: ReportConfig,
) -> Result<ErrorReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyRun);
    }
    let per_query: Vec<QueryRecord> = pairs
        .iter()
        .map(|&(true_position, estimated_position, t_ms)| QueryRecord {
            t_ms,
            true_position,
            estimated_position,
            error_m: true_position.distance_to(estimated_position),
        })
        .collect();
    let sum: f64 = per_query.iter().map(|q| q.error_m).sum();
    let max = per_query.iter().map(|q| q.error_m).fold(f64::NEG_INFINITY, f64::max);
    let min = per_query.iter().map(|q| q.error_m).fold(f64::INFINITY, f64::min);
    Ok(ErrorReport {
        config,
        mean_error_m: sum / per_query.len() as f64,
        max_error_m: max,
        min_error_m: min,
        per_query,
    })
}

/// A query window with its ground truth attached.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledQuery {
    pub t_ms: u64,
    pub true_position: Point,
    pub rssi: RssiMap,
}

/// One cell of a sweep: the configuration it ran under and its outcome.
/// Estimator failures stay local to their cell.
#[derive(Debug)]
pub struct SweepCell {
    pub config: ReportConfig,
    pub anchor_ids: Vec<AnchorId>,
    pub outcome: Result<ErrorReport, EvalError>,
}

/// Evaluate every (config, anchor subset) cell over the same queries.
/// Cells are emitted in `configs x subsets` order; the same input windows
/// feed every cell.
pub fn sweep(
    db: &FingerprintDb,
    queries: &[LabeledQuery],
    configs: &[EstimatorConfig],
    subsets: &[Vec<AnchorId>],
) -> Vec<SweepCell> {
    let mut cells = Vec::with_capacity(configs.len() * subsets.len());
    for (ci, cfg) in configs.iter().enumerate() {
        for (si, subset) in subsets.iter().enumerate() {
            let cell_index = ci * subsets.len() + si;
            let config_id = format!(
                "c{cell_index:02}_{}_k{}_{}_{}a",
                cfg.norm,
                cfg.k,
                cfg.mode,
                subset.len()
            );
            let config = ReportConfig {
                config_id: config_id.clone(),
                norm: cfg.norm,
                mode: cfg.mode,
                k: cfg.k,
                anchor_count: subset.len(),
            };
            let sub_db = db.restrict_to_anchors(subset);
            let mut pairs = Vec::with_capacity(queries.len());
            let mut failure = None;
            for query in queries {
                let restricted: RssiMap = query
                    .rssi
                    .iter()
                    .filter(|(id, _)| subset.contains(id))
                    .map(|(id, v)| (id.clone(), *v))
                    .collect();
                match estimate(&sub_db, &restricted, cfg) {
                    Ok(result) => pairs.push((query.true_position, result.position, query.t_ms)),
                    Err(source) => {
                        failure = Some(EvalError::Cell {
                            config_id: config_id.clone(),
                            source,
                        });
                        break;
                    }
                }
            }
            let outcome = match failure {
                Some(err) => Err(err),
                None => evaluate(&pairs, config.clone()),
            };
            cells.push(SweepCell {
                config,
                anchor_ids: subset.clone(),
                outcome,
            });
        }
    }
    cells
}

/// The baseline row emitted alongside every report CSV.
pub fn reference_report_row() -> String {
    format!(
        "reference,chebyshev,3,wknn,4,{REFERENCE_MEAN_ERROR_M},{REFERENCE_MAX_ERROR_M},{REFERENCE_MIN_ERROR_M},{REFERENCE_QUERY_COUNT}"
    )
}

/// Write the aggregate report CSV; `include_reference` appends the
/// baseline row for side-by-side comparison.
pub fn write_report_csv(
    mut w: impl Write,
    reports: &[&ErrorReport],
    include_reference: bool,
) -> Result<(), EvalError> {
    writeln!(w, "{REPORT_CSV_HEADER}")?;
    for report in reports {
        let c = &report.config;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            c.config_id,
            c.norm,
            c.k,
            c.mode,
            c.anchor_count,
            report.mean_error_m,
            report.max_error_m,
            report.min_error_m,
            report.query_count()
        )?;
    }
    if include_reference {
        writeln!(w, "{}", reference_report_row())?;
    }
    Ok(())
}

/// Write the per-query CSV for one report.
pub fn write_per_query_csv(mut w: impl Write, report: &ErrorReport) -> Result<(), EvalError> {
    writeln!(w, "{PER_QUERY_CSV_HEADER}")?;
    for q in &report.per_query {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            q.t_ms,
            q.true_position.x,
            q.true_position.y,
            q.estimated_position.x,
            q.estimated_position.y,
            q.error_m
        )?;
    }
    Ok(())
}

/// Header of position streams (`locate` output).
pub const POSITIONS_CSV_HEADER: &str = "t_ms,x_m,y_m";

/// Read a `t_ms,x_m,y_m` position stream, as written by `locate`.
pub fn read_positions_csv(reader: impl BufRead) -> Result<Vec<(u64, Point)>, EvalError> {
    let mut out = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx as u64 + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !saw_header {
            if trimmed != POSITIONS_CSV_HEADER {
                return Err(EvalError::Parse {
                    line: line_no,
                    reason: format!("expected header {POSITIONS_CSV_HEADER:?}"),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 {
            return Err(EvalError::Parse {
                line: line_no,
                reason: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let t: u64 = fields[0].trim().parse().map_err(|_| EvalError::Parse {
            line: line_no,
            reason: format!("cannot parse t_ms from {:?}", fields[0]),
        })?;
        let parse = |s: &str, what: &str| {
            s.trim().parse::<f64>().map_err(|_| EvalError::Parse {
                line: line_no,
                reason: format!("cannot parse {what} from {s:?}"),
            })
        };
        out.push((
            t,
            Point::new(parse(fields[1], "x_m")?, parse(fields[2], "y_m")?),
        ));
    }
    if !saw_header {
        return Err(EvalError::Parse {
            line: 1,
            reason: format!("missing header {POSITIONS_CSV_HEADER:?}"),
        });
    }
    Ok(out)
}
