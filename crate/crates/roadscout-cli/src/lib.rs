//! Implementation of the `roadscout` command-line harness. Kept in a
//! library so integration tests can drive the commands in-process.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use roadscout::criticality::{CriticalityCache, CriticalityTable, WalkWeighting};
use roadscout::engine::{run as run_sim, RunSetup};
use roadscout::road_graph::RoadNetwork;
use roadscout::scenario::{generate_instance, InstanceSpec, SpeedConfig};
use roadscout::strategies::StrategyKind;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// Process exit code: 2 for configuration errors, 3 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

fn io_err(context: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{context}: {e}"))
}

#[derive(Debug, Parser)]
#[command(
    name = "roadscout",
    about = "Simulate cooperative ground/aerial route planning on road networks with hidden damaged edges"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate instance files for a seed range.
    Gen(GenArgs),
    /// Run one simulation and print its result row.
    Run(RunArgs),
    /// Run the full cross product of seeds, strategies, and speed ratios.
    Batch(BatchArgs),
    /// Recompute the summary table from a result-row file.
    Summarize(SummarizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Graph document path.
    #[arg(long)]
    graph: PathBuf,
    /// Inclusive seed range "A..B" (empty when B < A) or a single seed.
    #[arg(long)]
    seeds: String,
    /// Output directory for instance files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Instance file; mutually exclusive with --seed.
    #[arg(long, conflicts_with = "seed")]
    instance: Option<PathBuf>,
    /// Generate the instance from this seed instead of loading a file.
    #[arg(long)]
    seed: Option<u64>,
    /// perfect | ugv-only | kemeny | k-shortest | mpsp | bidirectional |
    /// multi-bidirectional (optionally with ":N" vehicles).
    #[arg(long)]
    strategy: String,
    /// Aerial vehicle count for multi-bidirectional.
    #[arg(long, default_value_t = 3)]
    uavs: usize,
    #[arg(long, default_value_t = 20.0)]
    ugv_speed: f64,
    #[arg(long, default_value_t = 40.0)]
    uav_speed: f64,
    /// Number of alternative paths for k-shortest.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Candidate worlds sampled per MPSP query.
    #[arg(long, default_value_t = 20)]
    m: usize,
    /// Monte Carlo trials per MPSP probability estimate.
    #[arg(long, default_value_t = 1000)]
    mc_runs: usize,
    /// Write the row here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the event log here as JSON lines.
    #[arg(long)]
    events_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Debug, Args)]
struct BatchArgs {
    /// Graph document path(s); repeatable.
    #[arg(long, required = true)]
    graph: Vec<PathBuf>,
    /// Inclusive seed range "A..B" or a single seed; one instance each.
    #[arg(long)]
    seeds: String,
    /// Comma-separated strategy list.
    #[arg(long)]
    strategy: String,
    /// Comma-separated "vg:va" speed ratios.
    #[arg(long, default_value = "20:20,20:30,20:40")]
    ratios: String,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 20)]
    m: usize,
    #[arg(long, default_value_t = 1000)]
    mc_runs: usize,
    #[arg(long, default_value_t = 3)]
    uavs: usize,
    /// Result-row file.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: all cores). Results are sorted before
    /// emission, so parallelism never changes the output order.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Write the summary table here instead of stdout.
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SummarizeArgs {
    /// Result-row CSV file produced by batch.
    #[arg(long)]
    rows: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

/// One simulation result; one row per (map, instance, strategy, ratio).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRow {
    pub map: String,
    pub seed: u64,
    pub strategy: String,
    pub uavs: usize,
    pub ugv_speed: f64,
    pub uav_speed: f64,
    pub travel_time: f64,
    pub computation_time: f64,
    pub reached: bool,
    pub events: usize,
    pub edges_inspected: usize,
}

const ROW_HEADER: &[&str] = &[
    "map",
    "seed",
    "strategy",
    "uavs",
    "ugv_speed",
    "uav_speed",
    "travel_time",
    "computation_time",
    "reached",
    "events",
    "edges_inspected",
];

impl ResultRow {
    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.map.clone(),
            self.seed.to_string(),
            self.strategy.clone(),
            self.uavs.to_string(),
            format!("{}", self.ugv_speed),
            format!("{}", self.uav_speed),
            format!("{:.6}", self.travel_time),
            format!("{:.6}", self.computation_time),
            self.reached.to_string(),
            self.events.to_string(),
            self.edges_inspected.to_string(),
        ]
    }
}

/// Per-(map, strategy, ratio) aggregate over the row file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub map: String,
    pub strategy: String,
    pub uavs: usize,
    pub ugv_speed: f64,
    pub uav_speed: f64,
    pub runs: usize,
    pub mean_travel_time: f64,
    pub mean_computation_time: f64,
}

const SUMMARY_HEADER: &[&str] = &[
    "map",
    "strategy",
    "uavs",
    "ugv_speed",
    "uav_speed",
    "runs",
    "mean_travel_time",
    "mean_computation_time",
];

impl SummaryRow {
    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.map.clone(),
            self.strategy.clone(),
            self.uavs.to_string(),
            format!("{}", self.ugv_speed),
            format!("{}", self.uav_speed),
            self.runs.to_string(),
            format!("{:.6}", self.mean_travel_time),
            format!("{:.6}", self.mean_computation_time),
        ]
    }
}

/// Parses and executes a full command line (without the binary name
/// injected by the OS — pass it as the first token).
pub fn execute<I, S>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            print!("{e}");
            CliError::Config(String::new())
        }
        _ => CliError::Config(e.to_string()),
    })?;
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args),
        Command::Batch(args) => cmd_batch(args),
        Command::Summarize(args) => cmd_summarize(args),
    }
}

/// Inclusive "A..B" range, or a single seed; B < A is the empty range.
fn parse_seed_range(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Config(format!("invalid seed range '{text}'"));
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        Ok(if b < a { Vec::new() } else { (a..=b).collect() })
    } else {
        Ok(vec![text.trim().parse().map_err(|_| bad())?])
    }
}

/// Accepts a strategy name with an optional ":N" vehicle-count suffix for
/// the multi-vehicle strategy.
fn parse_strategy(
    spec: &str,
    k: usize,
    m: usize,
    mc_runs: usize,
    default_uavs: usize,
) -> Result<StrategyKind, CliError> {
    let (name, suffix) = match spec.split_once(':') {
        Some((n, s)) => (n.trim(), Some(s.trim())),
        None => (spec.trim(), None),
    };
    if suffix.is_some() && name != "multi-bidirectional" {
        return Err(CliError::Config(format!(
            "strategy '{name}' takes no ':N' suffix"
        )));
    }
    match name {
        "perfect" | "perfect-knowledge" => Ok(StrategyKind::PerfectKnowledge),
        "ugv-only" => Ok(StrategyKind::UgvOnly),
        "kemeny" => Ok(StrategyKind::Kemeny),
        "k-shortest" => {
            if k < 2 {
                return Err(CliError::Config("--k must be at least 2".into()));
            }
            Ok(StrategyKind::KShortestPaths { k })
        }
        "mpsp" => {
            if m < 1 || mc_runs < 1 {
                return Err(CliError::Config("--m and --mc-runs must be positive".into()));
            }
            Ok(StrategyKind::Mpsp { m, trials: mc_runs })
        }
        "bidirectional" => Ok(StrategyKind::Bidirectional),
        "multi-bidirectional" => {
            let k_uavs = match suffix {
                Some(s) => s
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad vehicle count '{s}'")))?,
                None => default_uavs,
            };
            if k_uavs < 1 {
                return Err(CliError::Config("vehicle count must be at least 1".into()));
            }
            Ok(StrategyKind::MultiUavBidirectional { k_uavs })
        }
        other => Err(CliError::Config(format!("unknown strategy '{other}'"))),
    }
}

fn strategy_label(kind: &StrategyKind) -> String {
    match kind {
        StrategyKind::PerfectKnowledge => "perfect".into(),
        StrategyKind::UgvOnly => "ugv-only".into(),
        StrategyKind::Kemeny => "kemeny".into(),
        StrategyKind::KShortestPaths { k } => format!("k-shortest({k})"),
        StrategyKind::Mpsp { m, trials } => format!("mpsp({m},{trials})"),
        StrategyKind::Bidirectional => "bidirectional".into(),
        StrategyKind::MultiUavBidirectional { k_uavs } => {
            format!("multi-bidirectional:{k_uavs}")
        }
    }
}

fn load_graph(path: &Path) -> Result<(String, Arc<RoadNetwork>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(&path.display().to_string(), e))?;
    let network = RoadNetwork::from_document(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok((name, Arc::new(network)))
}

fn parse_speeds(v_g: f64, v_a: f64) -> Result<SpeedConfig, CliError> {
    SpeedConfig::new(v_g, v_a).map_err(|e| CliError::Config(e.to_string()))
}

/// Comma-separated "vg:va" pairs.
fn parse_ratios(text: &str) -> Result<Vec<SpeedConfig>, CliError> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let (g, a) = part
            .split_once(':')
            .ok_or_else(|| CliError::Config(format!("bad speed ratio '{part}'")))?;
        let v_g: f64 = g
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad speed '{g}'")))?;
        let v_a: f64 = a
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad speed '{a}'")))?;
        out.push(parse_speeds(v_g, v_a)?);
    }
    if out.is_empty() {
        return Err(CliError::Config("no speed ratios given".into()));
    }
    Ok(out)
}

/// Executes one simulation for an instance/strategy/speed combination.
pub fn run_one(
    map: &str,
    network: &Arc<RoadNetwork>,
    instance: &InstanceSpec,
    kind: &StrategyKind,
    speeds: SpeedConfig,
    criticality: Option<&CriticalityTable>,
) -> Result<(ResultRow, Vec<roadscout::EventRecord>), CliError> {
    let mut strategy = kind.instantiate(
        network,
        &instance.ground_truth,
        instance.seed,
        criticality.cloned(),
    );
    let setup = RunSetup {
        ugv_start: instance.ugv_start,
        uav_start: instance.uav_start,
        destination: instance.destination,
        ugv_speed: speeds.v_g,
        uav_speed: speeds.v_a,
        edge_probabilities: instance.edge_probabilities.clone(),
    };
    let outcome = run_sim(
        network.clone(),
        &instance.ground_truth,
        strategy.as_mut(),
        &setup,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let row = ResultRow {
        map: map.to_string(),
        seed: instance.seed,
        strategy: strategy_label(kind),
        uavs: kind.uav_count(),
        ugv_speed: speeds.v_g,
        uav_speed: speeds.v_a,
        travel_time: outcome.travel_time,
        computation_time: outcome.computation_time,
        reached: outcome.reached,
        events: outcome.event_log.len(),
        edges_inspected: outcome.edges_inspected,
    };
    Ok((row, outcome.event_log))
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let (_, network) = load_graph(&args.graph)?;
    let seeds = parse_seed_range(&args.seeds)?;
    fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out.display().to_string(), e))?;
    for seed in seeds {
        let instance = generate_instance(&network, seed);
        let path = args.out.join(format!("instance-{seed:05}.json"));
        fs::write(&path, instance.to_document(&network))
            .map_err(|e| io_err(&path.display().to_string(), e))?;
    }
    Ok(())
}

fn load_instance(path: &Path, network: &RoadNetwork) -> Result<InstanceSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(&path.display().to_string(), e))?;
    InstanceSpec::from_document(&text, network)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| io_err(&p.display().to_string(), e)),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn rows_to_string(rows: &[ResultRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record(ROW_HEADER).unwrap();
            for row in rows {
                writer.write_record(row.csv_fields()).unwrap();
            }
            String::from_utf8(writer.into_inner().unwrap()).unwrap()
        }
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(rows).unwrap();
            text.push('\n');
            text
        }
    }
}

fn summary_to_string(rows: &[SummaryRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record(SUMMARY_HEADER).unwrap();
            for row in rows {
                writer.write_record(row.csv_fields()).unwrap();
            }
            String::from_utf8(writer.into_inner().unwrap()).unwrap()
        }
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(rows).unwrap();
            text.push('\n');
            text
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let (map, network) = load_graph(&args.graph)?;
    let instance = match (&args.instance, args.seed) {
        (Some(path), None) => load_instance(path, &network)?,
        (None, Some(seed)) => generate_instance(&network, seed),
        _ => {
            return Err(CliError::Config(
                "exactly one of --instance or --seed is required".into(),
            ))
        }
    };
    let kind = parse_strategy(&args.strategy, args.k, args.m, args.mc_runs, args.uavs)?;
    let speeds = parse_speeds(args.ugv_speed, args.uav_speed)?;
    let criticality = matches!(kind, StrategyKind::Kemeny)
        .then(|| CriticalityTable::build(&network, WalkWeighting::Uniform));
    let (row, events) = run_one(&map, &network, &instance, &kind, speeds, criticality.as_ref())?;
    if let Some(path) = &args.events_out {
        let mut text = String::new();
        for event in &events {
            text.push_str(&serde_json::to_string(event).unwrap());
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| io_err(&path.display().to_string(), e))?;
    }
    write_output(args.out.as_deref(), &rows_to_string(&[row], args.format))
}

/// Sort key giving the stable (map, seed, strategy, ratio) row order.
fn row_key(r: &ResultRow) -> (String, u64, String, u64, u64) {
    (
        r.map.clone(),
        r.seed,
        r.strategy.clone(),
        r.ugv_speed.to_bits(),
        r.uav_speed.to_bits(),
    )
}

fn cmd_batch(args: BatchArgs) -> Result<(), CliError> {
    let seeds = parse_seed_range(&args.seeds)?;
    let ratios = parse_ratios(&args.ratios)?;
    let kinds: Vec<StrategyKind> = args
        .strategy
        .split(',')
        .map(|s| parse_strategy(s, args.k, args.m, args.mc_runs, args.uavs))
        .collect::<Result<_, _>>()?;
    if kinds.is_empty() {
        return Err(CliError::Config("no strategies given".into()));
    }
    let needs_kemeny = kinds.iter().any(|k| matches!(k, StrategyKind::Kemeny));

    let mut tasks = Vec::new();
    for path in &args.graph {
        let (map, network) = load_graph(path)?;
        // The criticality table depends only on the graph: compute it once
        // here (reusing a sidecar cache file when present) and share it
        // across every run on this map.
        let criticality = if needs_kemeny {
            Some(Arc::new(load_or_build_criticality(path, &network)?))
        } else {
            None
        };
        let instances: Vec<InstanceSpec> = seeds
            .iter()
            .map(|&s| generate_instance(&network, s))
            .collect();
        for instance in instances {
            for kind in &kinds {
                for &speeds in &ratios {
                    tasks.push((
                        map.clone(),
                        network.clone(),
                        instance.clone(),
                        kind.clone(),
                        speeds,
                        criticality.clone(),
                    ));
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let results: Vec<Result<ResultRow, CliError>> = pool.install(|| {
        use rayon::prelude::*;
        tasks
            .par_iter()
            .map(|(map, network, instance, kind, speeds, criticality)| {
                run_one(
                    map,
                    network,
                    instance,
                    kind,
                    *speeds,
                    criticality.as_deref(),
                )
                .map(|(row, _)| row)
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(e.to_string()),
        }
    }
    rows.sort_by_key(row_key);
    fs::write(&args.out, rows_to_string(&rows, args.format))
        .map_err(|e| io_err(&args.out.display().to_string(), e))?;

    let summary = summarize_rows(&rows);
    write_output(
        args.summary_out.as_deref(),
        &summary_to_string(&summary, args.format),
    )?;

    if !failures.is_empty() {
        return Err(CliError::Config(format!(
            "{} of {} runs failed:\n{}",
            failures.len(),
            rows.len() + failures.len(),
            failures.join("\n")
        )));
    }
    Ok(())
}

/// Reads `<graph>.criticality.json` when it matches the graph, computing
/// and writing it otherwise.
fn load_or_build_criticality(
    graph_path: &Path,
    network: &RoadNetwork,
) -> Result<CriticalityTable, CliError> {
    let cache_path = graph_path.with_extension("criticality.json");
    if let Ok(text) = fs::read_to_string(&cache_path) {
        if let Ok(cache) = CriticalityCache::from_json(&text) {
            if let Some(table) = cache.validate(network, WalkWeighting::Uniform) {
                return Ok(table);
            }
        }
    }
    let cache = CriticalityCache::build(network, WalkWeighting::Uniform);
    let table = cache
        .validate(network, WalkWeighting::Uniform)
        .expect("freshly built cache matches its own network");
    // Cache write failures are not fatal; the table is already in hand.
    let _ = fs::write(&cache_path, cache.to_json());
    Ok(table)
}

/// Groups rows by (map, strategy, uavs, ratio) and averages the timings.
pub fn summarize_rows(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String, usize, u64, u64), (usize, f64, f64)> =
        BTreeMap::new();
    for row in rows {
        let key = (
            row.map.clone(),
            row.strategy.clone(),
            row.uavs,
            row.ugv_speed.to_bits(),
            row.uav_speed.to_bits(),
        );
        let entry = groups.entry(key).or_insert((0, 0.0, 0.0));
        entry.0 += 1;
        entry.1 += row.travel_time;
        entry.2 += row.computation_time;
    }
    groups
        .into_iter()
        .map(
            |((map, strategy, uavs, g_bits, a_bits), (runs, travel, comp))| SummaryRow {
                map,
                strategy,
                uavs,
                ugv_speed: f64::from_bits(g_bits),
                uav_speed: f64::from_bits(a_bits),
                runs,
                mean_travel_time: travel / runs as f64,
                mean_computation_time: comp / runs as f64,
            },
        )
        .collect()
}

fn cmd_summarize(args: SummarizeArgs) -> Result<(), CliError> {
    let rows = read_rows(&args.rows)?;
    let summary = summarize_rows(&rows);
    write_output(args.out.as_deref(), &summary_to_string(&summary, args.format))
}

/// Parses a result-row CSV file back into rows.
pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| io_err(&path.display().to_string(), e))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| io_err(&path.display().to_string(), e))?;
        let field = |i: usize| -> &str { record.get(i).unwrap_or("") };
        let parse_err =
            |what: &str| CliError::Config(format!("{}: bad {what} field", path.display()));
        rows.push(ResultRow {
            map: field(0).to_string(),
            seed: field(1).parse().map_err(|_| parse_err("seed"))?,
            strategy: field(2).to_string(),
            uavs: field(3).parse().map_err(|_| parse_err("uavs"))?,
            ugv_speed: field(4).parse().map_err(|_| parse_err("ugv_speed"))?,
            uav_speed: field(5).parse().map_err(|_| parse_err("uav_speed"))?,
            travel_time: field(6).parse().map_err(|_| parse_err("travel_time"))?,
            computation_time: field(7)
                .parse()
                .map_err(|_| parse_err("computation_time"))?,
            reached: field(8).parse().map_err(|_| parse_err("reached"))?,
            events: field(9).parse().map_err(|_| parse_err("events"))?,
            edges_inspected: field(10)
                .parse()
                .map_err(|_| parse_err("edges_inspected"))?,
        });
    }
    Ok(rows)
}
