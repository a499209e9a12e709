//! Single binary exposing the localization pipeline: codec, calibration,
//! simulation, fingerprint training, live/replay localization and
//! evaluation sweeps.
//!
//! Data goes to stdout, diagnostics to stderr; the two never share a
//! stream. Exit codes: 0 success, 1 data/IO failure, 2 usage error.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use beaconloc::estimator::{estimate, EstimateError, EstimatorConfig, Mode, Norm};
use beaconloc::eval::{
    evaluate, read_positions_csv, sweep, write_per_query_csv, write_report_csv, EvalError,
    ReportConfig, LabeledQuery, POSITIONS_CSV_HEADER,
};
use beaconloc::fingerprint::{
    build_entry, read_anchors_csv, write_anchors_csv, FingerprintDb, FingerprintError,
};
use beaconloc::ibeacon::{
    decode_ibeacon_bytes, encode_ibeacon, format_uuid, parse_uuid, CodecError, IBeaconPayload,
};
use beaconloc::ingest::{
    window_stream, window_to_query, IngestError, Observation, ObservationReader, ParseMode,
    ScanWindow, WindowStream, write_observation_ndjson,
};
use beaconloc::path_loss::{calibrate, read_calibration_csv, PathLossError};
use beaconloc::sim::{
    dwell_trace, reference_scenario, simulate, GroundTruthTrace, ScenarioFile, SimError,
};
use beaconloc::{AnchorId, Point};

#[derive(Parser)]
#[command(
    name = "beaconloc",
    version,
    about = "RSSI-fingerprint indoor localization toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode or decode iBeacon advertising payloads as hex.
    Codec {
        #[command(subcommand)]
        op: CodecCmd,
    },
    /// Fit path-loss parameters from a distance/RSSI sample CSV.
    Calibrate {
        /// CSV with header `distance_m,rssi_dbm`.
        samples: PathBuf,
        /// Reference distance in meters.
        #[arg(long, default_value_t = 1.0)]
        d0: f64,
    },
    /// Generate a synthetic observation stream plus ground-truth sidecar.
    Simulate(SimulateArgs),
    /// Fingerprint database operations.
    Fingerprint {
        #[command(subcommand)]
        op: FingerprintCmd,
    },
    /// Estimate positions from an observation stream (file, stdin or socket).
    Locate(LocateArgs),
    /// Compare estimated positions against ground truth.
    Evaluate(EvaluateArgs),
    /// Run the estimator across norms and anchor subsets.
    Sweep(SweepArgs),
}

#[derive(Subcommand)]
enum CodecCmd {
    /// Encode payload fields into 30 bytes of advertising data (hex out).
    #[command(allow_negative_numbers = true)]
    Encode {
        /// Proximity UUID, with or without dashes.
        #[arg(long)]
        uuid: String,
        #[arg(long)]
        major: u16,
        #[arg(long)]
        minor: u16,
        /// Calibrated RSSI at 1 m, dBm.
        #[arg(long)]
        power: i8,
    },
    /// Decode hex advertising data given as an argument or on stdin.
    Decode { hex: Option<String> },
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario TOML file, or the literal `reference` for the built-in
    /// 7.2 m x 7.2 m room.
    scenario: String,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the shadowing standard deviation, dB.
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Override the packet-loss probability.
    #[arg(long)]
    packet_loss: Option<f64>,
    /// Dwell per training position when using the built-in reference trace, ms.
    #[arg(long, default_value_t = 5000, value_parser = clap::value_parser!(u64).range(1..))]
    dwell_ms: u64,
    /// Observation NDJSON output; '-' for stdout.
    #[arg(long, default_value = "-")]
    out_obs: String,
    /// Ground-truth sidecar CSV output path.
    #[arg(long)]
    out_truth: PathBuf,
    /// Also write the scenario's anchor table here.
    #[arg(long)]
    out_anchors: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FingerprintCmd {
    /// Aggregate an observation stream into fingerprint entries, grouping
    /// observations by the ground-truth position at their timestamp.
    Build {
        /// Anchor table CSV.
        #[arg(long)]
        anchors: PathBuf,
        /// Ground-truth trace CSV (`t_ms,true_x_m,true_y_m`).
        #[arg(long)]
        truth: PathBuf,
        /// Observation NDJSON; '-' for stdin.
        #[arg(long)]
        obs: String,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        window_ms: u64,
        /// Entries CSV output; '-' for stdout.
        #[arg(long, default_value = "-")]
        out_entries: String,
        /// Abort on the first malformed observation line.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Args)]
struct LocateArgs {
    /// Fingerprint entries CSV.
    #[arg(long)]
    db: PathBuf,
    /// Anchor table CSV.
    #[arg(long)]
    anchors: PathBuf,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, default_value = "chebyshev")]
    norm: Norm,
    #[arg(long, default_value = "wknn")]
    mode: Mode,
    /// Entries must share at least this many anchors with a query.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    min_common: u64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    window_ms: u64,
    /// Listen for observation lines on this TCP port (0 = OS-assigned;
    /// the bound address is reported on stderr). Serves one connection.
    #[arg(long, conflicts_with = "input")]
    listen: Option<u16>,
    /// Abort on the first malformed observation line.
    #[arg(long)]
    strict: bool,
    /// Observation NDJSON to replay; '-' for stdin.
    #[arg(required_unless_present = "listen")]
    input: Option<String>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ground-truth trace CSV.
    #[arg(long)]
    truth: PathBuf,
    /// Position CSV as produced by `locate`; '-' for stdin.
    #[arg(long)]
    estimates: String,
    /// Anchor table CSV; only used to record the anchor count.
    #[arg(long)]
    anchors: Option<PathBuf>,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, default_value = "chebyshev")]
    norm: Norm,
    #[arg(long, default_value = "wknn")]
    mode: Mode,
    /// Also write the per-query CSV here.
    #[arg(long)]
    per_query: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Fingerprint entries CSV.
    #[arg(long)]
    db: PathBuf,
    /// Anchor table CSV.
    #[arg(long)]
    anchors: PathBuf,
    /// Ground-truth trace CSV.
    #[arg(long)]
    truth: PathBuf,
    /// Observation NDJSON; '-' for stdin.
    #[arg(long)]
    obs: String,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    window_ms: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, default_value = "wknn")]
    mode: Mode,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    min_common: u64,
    /// Norms to sweep.
    #[arg(long, value_delimiter = ',', default_value = "chebyshev,euclidean")]
    norms: Vec<Norm>,
    /// Anchor subset: comma-separated ids, or `all`. Repeatable; defaults
    /// to one cell over all anchors.
    #[arg(long = "subset")]
    subsets: Vec<String>,
    /// Abort on the first malformed observation line.
    #[arg(long)]
    strict: bool,
}

/// Operational failure, classified for the one-line stderr report.
enum CliError {
    Data(String),
    Io(String),
}

impl CliError {
    fn category(&self) -> &'static str {
        match self {
            CliError::Data(_) => "data",
            CliError::Io(_) => "io",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Data(msg) | CliError::Io(msg) => f.write_str(msg),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<PathLossError> for CliError {
    fn from(e: PathLossError) -> Self {
        match e {
            PathLossError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<FingerprintError> for CliError {
    fn from(e: FingerprintError) -> Self {
        match e {
            FingerprintError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.category(), e);
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Codec { op } => run_codec(op),
        Command::Calibrate { samples, d0 } => run_calibrate(&samples, d0),
        Command::Simulate(args) => run_simulate(args),
        Command::Fingerprint {
            op:
                FingerprintCmd::Build {
                    anchors,
                    truth,
                    obs,
                    window_ms,
                    out_entries,
                    strict,
                },
        } => run_fingerprint_build(&anchors, &truth, &obs, window_ms, &out_entries, strict),
        Command::Locate(args) => run_locate(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Sweep(args) => run_sweep(args),
    }
}

fn open_input(source: &str) -> Result<Box<dyn BufRead>, CliError> {
    if source == "-" {
        Ok(Box::new(BufReader::new(io::stdin())))
    } else {
        let file = File::open(source)
            .map_err(|e| CliError::Io(format!("cannot open {source}: {e}")))?;
        Ok(Box::new(BufReader::new(file)))
    }
}

fn open_file(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))
}

fn create_output(dest: &str) -> Result<Box<dyn Write>, CliError> {
    if dest == "-" {
        Ok(Box::new(io::stdout()))
    } else {
        let file = File::create(dest)
            .map_err(|e| CliError::Io(format!("cannot create {dest}: {e}")))?;
        Ok(Box::new(BufWriter::new(file)))
    }
}

fn create_file(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

fn parse_mode(strict: bool) -> ParseMode {
    if strict {
        ParseMode::Strict
    } else {
        ParseMode::Lenient
    }
}

fn run_codec(op: CodecCmd) -> Result<(), CliError> {
    match op {
        CodecCmd::Encode {
            uuid,
            major,
            minor,
            power,
        } => {
            let payload = IBeaconPayload {
                proximity_uuid: parse_uuid(&uuid)?,
                major,
                minor,
                measured_power: power,
            };
            let bytes = encode_ibeacon(&payload);
            let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
            println!("{hex}");
            Ok(())
        }
        CodecCmd::Decode { hex } => {
            let text = match hex {
                Some(h) => h,
                None => {
                    let mut buf = String::new();
                    io::stdin().read_to_string(&mut buf)?;
                    buf
                }
            };
            let clean: String = text.chars().filter(|c| !c.is_whitespace()).collect();
            if !clean.len().is_multiple_of(2) {
                return Err(CliError::Data("odd number of hex digits".into()));
            }
            let bytes: Vec<u8> = (0..clean.len())
                .step_by(2)
                .map(|i| u8::from_str_radix(&clean[i..i + 2], 16))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Data(format!("invalid hex: {e}")))?;
            let payload = decode_ibeacon_bytes(&bytes)?;
            println!("uuid,major,minor,measured_power_dbm");
            println!(
                "{},{},{},{}",
                format_uuid(&payload.proximity_uuid),
                payload.major,
                payload.minor,
                payload.measured_power
            );
            Ok(())
        }
    }
}

fn run_calibrate(samples: &Path, d0: f64) -> Result<(), CliError> {
    let data = read_calibration_csv(open_file(samples)?)?;
    let params = calibrate(&data, d0)?;
    println!("rssi_at_d0_dbm,n,d0_m");
    println!("{},{},{}", params.rssi_at_d0_dbm, params.n, params.d0_m);
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let (mut scenario, trace, duration_ms) = if args.scenario == "reference" {
        let (scenario, positions) = reference_scenario();
        let (trace, duration_ms) = dwell_trace(&positions, args.dwell_ms)?;
        (scenario, trace, duration_ms)
    } else {
        let text = std::fs::read_to_string(&args.scenario)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.scenario)))?;
        ScenarioFile::parse(&text)?.into_parts()?
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(sigma) = args.noise_sigma {
        scenario.noise_sigma_db = sigma;
    }
    if let Some(p) = args.packet_loss {
        scenario.packet_loss_p = p;
    }

    let observations = simulate(&scenario, &trace, duration_ms)?;
    let mut out = create_output(&args.out_obs)?;
    for obs in &observations {
        write_observation_ndjson(&mut out, obs)?;
    }
    out.flush()?;

    let mut truth_out = create_file(&args.out_truth)?;
    trace.write_csv(&mut truth_out)?;
    truth_out.flush()?;

    if let Some(path) = &args.out_anchors {
        let mut anchors_out = create_file(path)?;
        write_anchors_csv(&scenario.anchors, &mut anchors_out)?;
        anchors_out.flush()?;
    }
    eprintln!(
        "simulated {} observations over {} ms",
        observations.len(),
        duration_ms
    );
    Ok(())
}

fn run_fingerprint_build(
    anchors: &Path,
    truth: &Path,
    obs: &str,
    window_ms: u64,
    out_entries: &str,
    strict: bool,
) -> Result<(), CliError> {
    let anchor_list = read_anchors_csv(open_file(anchors)?)?;
    let trace = GroundTruthTrace::read_csv(open_file(truth)?)?;

    // Group observations by the true position at their timestamp, keeping
    // first-appearance order of positions.
    let mut reader = ObservationReader::new(open_input(obs)?, parse_mode(strict));
    let mut groups: Vec<(Point, Vec<Observation>)> = Vec::new();
    let mut index: std::collections::BTreeMap<(u64, u64), usize> = std::collections::BTreeMap::new();
    for item in &mut reader {
        let observation = item?;
        let position = trace.position_at(observation.t_ms);
        let key = (position.x.to_bits(), position.y.to_bits());
        let slot = *index.entry(key).or_insert_with(|| {
            groups.push((position, Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push(observation);
    }
    let skipped = reader.skipped_lines();

    let mut entries = Vec::with_capacity(groups.len());
    for (position, observations) in groups {
        let windows = window_stream(observations, window_ms)?;
        entries.push(build_entry(position, &windows)?);
    }
    let db = FingerprintDb::new(anchor_list, entries)?;

    let mut out = create_output(out_entries)?;
    db.write_entries_csv(&mut out)?;
    out.flush()?;
    if skipped > 0 {
        eprintln!("skipped {skipped} malformed observation lines");
    }
    eprintln!("built {} fingerprint entries", db.entries().len());
    Ok(())
}

fn run_locate(args: LocateArgs) -> Result<(), CliError> {
    let db = FingerprintDb::read_csv(open_file(&args.anchors)?, open_file(&args.db)?)?;
    let cfg = EstimatorConfig {
        k: args.k as usize,
        norm: args.norm,
        mode: args.mode,
        min_common_anchors: args.min_common as usize,
        ..EstimatorConfig::default()
    };
    if db.entries().len() < cfg.k {
        // fail before touching the observation source or socket
        return Err(CliError::Data(format!(
            "database has {} entries, k = {} needs at least that many",
            db.entries().len(),
            cfg.k
        )));
    }

    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "{POSITIONS_CSV_HEADER}")?;
    out.flush()?;

    match args.listen {
        Some(port) => {
            let listener = TcpListener::bind(("0.0.0.0", port))?;
            eprintln!("listening: {}", listener.local_addr()?);
            let (stream, peer) = listener.accept()?;
            eprintln!("connection: {peer}");
            locate_stream(
                BufReader::new(stream),
                &db,
                &cfg,
                args.window_ms,
                parse_mode(args.strict),
                &mut out,
            )
        }
        None => {
            let input = args.input.as_deref().expect("clap enforces input|listen");
            locate_stream(
                open_input(input)?,
                &db,
                &cfg,
                args.window_ms,
                parse_mode(args.strict),
                &mut out,
            )
        }
    }
}

/// Window the stream and print one position line per estimable window,
/// immediately. Windows that cannot be estimated are reported on stderr
/// and skipped; the stream keeps going.
fn locate_stream(
    reader: impl BufRead,
    db: &FingerprintDb,
    cfg: &EstimatorConfig,
    window_ms: u64,
    mode: ParseMode,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let emit = |window: ScanWindow, out: &mut dyn Write| -> Result<(), CliError> {
        let query = window_to_query(&window);
        if query.is_empty() {
            eprintln!("window {}: no observations, skipped", window.start_ms);
            return Ok(());
        }
        match estimate(db, &query, cfg) {
            Ok(result) => {
                writeln!(
                    out,
                    "{},{},{}",
                    window.start_ms, result.position.x, result.position.y
                )?;
                out.flush()?;
            }
            Err(e) => eprintln!("window {}: {e}", window.start_ms),
        }
        Ok(())
    };

    let mut observations = ObservationReader::new(reader, mode);
    let mut windows = WindowStream::new(window_ms);
    for item in &mut observations {
        for window in windows.push(item?)? {
            emit(window, out)?;
        }
    }
    let skipped = observations.skipped_lines();
    if let Some(window) = windows.finish() {
        emit(window, out)?;
    }
    if skipped > 0 {
        eprintln!("skipped {skipped} malformed observation lines");
    }
    Ok(())
}

fn run_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let trace = GroundTruthTrace::read_csv(open_file(&args.truth)?)?;
    let estimates = read_positions_csv(open_input(&args.estimates)?)?;
    let anchor_count = match &args.anchors {
        Some(path) => read_anchors_csv(open_file(path)?)?.len(),
        None => 0,
    };
    let pairs: Vec<(Point, Point, u64)> = estimates
        .into_iter()
        .map(|(t_ms, estimated)| (trace.position_at(t_ms), estimated, t_ms))
        .collect();
    let config = ReportConfig {
        config_id: format!("{}_k{}_{}_{}a", args.norm, args.k, args.mode, anchor_count),
        norm: args.norm,
        mode: args.mode,
        k: args.k as usize,
        anchor_count,
    };
    let report = evaluate(&pairs, config)?;
    write_report_csv(io::stdout().lock(), &[&report], true)?;
    if let Some(path) = &args.per_query {
        let mut out = create_file(path)?;
        write_per_query_csv(&mut out, &report)?;
        out.flush()?;
    }
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), CliError> {
    let db = FingerprintDb::read_csv(open_file(&args.anchors)?, open_file(&args.db)?)?;
    let trace = GroundTruthTrace::read_csv(open_file(&args.truth)?)?;

    let mut reader = ObservationReader::new(open_input(&args.obs)?, parse_mode(args.strict));
    let mut observations = Vec::new();
    for item in &mut reader {
        observations.push(item?);
    }
    let skipped = reader.skipped_lines();

    let mut queries = Vec::new();
    for window in window_stream(observations, args.window_ms)? {
        let rssi = window_to_query(&window);
        if rssi.is_empty() {
            continue;
        }
        queries.push(LabeledQuery {
            t_ms: window.start_ms,
            true_position: trace.position_at(window.start_ms),
            rssi,
        });
    }

    let all_ids: Vec<AnchorId> = db.anchors().iter().map(|a| a.id.clone()).collect();
    let subset_specs = if args.subsets.is_empty() {
        vec!["all".to_owned()]
    } else {
        args.subsets.clone()
    };
    let mut subsets = Vec::with_capacity(subset_specs.len());
    for spec in &subset_specs {
        if spec == "all" {
            subsets.push(all_ids.clone());
            continue;
        }
        let ids: Vec<AnchorId> = spec
            .split(',')
            .map(|s| AnchorId::new(s.trim()))
            .collect();
        for id in &ids {
            if !all_ids.contains(id) {
                return Err(CliError::Data(format!(
                    "subset {spec:?} names unknown anchor {id}"
                )));
            }
        }
        subsets.push(ids);
    }

    let configs: Vec<EstimatorConfig> = args
        .norms
        .iter()
        .map(|&norm| EstimatorConfig {
            k: args.k as usize,
            norm,
            mode: args.mode,
            min_common_anchors: args.min_common as usize,
            ..EstimatorConfig::default()
        })
        .collect();

    let cells = sweep(&db, &queries, &configs, &subsets);
    let mut reports = Vec::new();
    let mut failures = 0usize;
    for cell in &cells {
        match &cell.outcome {
            Ok(report) => reports.push(report),
            Err(e) => {
                failures += 1;
                eprintln!("cell {}: {e}", cell.config.config_id);
            }
        }
    }
    write_report_csv(io::stdout().lock(), &reports, true)?;
    if skipped > 0 {
        eprintln!("skipped {skipped} malformed observation lines");
    }
    if failures == cells.len() && !cells.is_empty() {
        return Err(CliError::Data("every sweep cell failed".into()));
    }
    Ok(())
}
