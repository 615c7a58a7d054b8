//! Command-line front end. Every table carries the crate version, the seed
//! and the full effective configuration, so any artifact can be regenerated
//! from its own contents.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::drop_scheme::{DropState, InsertionMode};
use crate::error::{Error, Result};
use crate::experiments::{
    check_inclusions, estimate_gamma, exact_e_ln, exact_increment, increment_probability_check, run_variance_scaling,
    simulate, EventId, ExperimentConfig, Route,
};
use crate::lcs::{align_score, lcs_bitparallel, lcs_length, PairingRule, SubstitutionMatrix};
use crate::matchings::{blocks, containment_ln_prob, containment_prob_dyadic, containment_prob_exact, count_nd};
use crate::sequences::{check_probability, labels, BinarySequence, RngStream, TriSequence};

#[derive(Parser, Debug)]
#[command(name = "lcsfluct", version, about = "LCS fluctuation laboratory: bit-drop scheme, matchings and Monte Carlo estimators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Length of a longest common subsequence (letters 0, 1 and a; a never matches).
    Lcs(LcsArgs),
    /// Global alignment score with a substitution matrix and a gap penalty.
    Align(AlignArgs),
    /// Replay a drop history from CSV, or draw a fresh one, and list Z^j per step.
    DropReplay(DropReplayArgs),
    /// Per-replication L_n, N^a, event indicators and N_D.
    Simulate(SimArgs),
    /// Event frequencies with 95% Clopper-Pearson intervals.
    Events(SimArgs),
    /// Violation counts of the two event inclusions over replications and grid points.
    Inclusions(ExpArgs),
    /// Increment probability against 0.5 * (non-empty matches) / k on frozen states.
    Increment(IncrementArgs),
    /// Mean of L_n / n with a 95% interval.
    Gamma(GammaArgs),
    /// Exact E[L_n] for two uniform n-bit strings by full enumeration.
    OracleL10(OracleArgs),
    /// Block statistics N_D and the count of runs of D + 1 equal letters.
    Blocks(BlocksArgs),
    /// P(a fixed l-bit word is a subsequence of k fair bits).
    Contain(ContainArgs),
    /// Variance of L_n over a grid of n, with bootstrap intervals for VAR / n.
    Scaling(ScalingArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Output location and shape, shared by every subcommand.
#[derive(Args, Debug, Clone, Default, Serialize)]
pub struct OutArgs {
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Output format; single-value commands print a bare value when absent.
    #[arg(long, value_enum, global = true)]
    #[serde(skip)]
    pub format: Option<Format>,
    /// Worker threads (default: machine parallelism); results do not depend on it.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct LcsArgs {
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    /// Only identical letters may share a column.
    Identical,
    /// Any two letters may share a column at the matrix score.
    Any,
}

#[derive(Args, Debug, Serialize)]
pub struct AlignArgs {
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    /// Binary scores s00,s01,s10,s11.
    #[arg(long, default_value = "1,0,0,1", value_parser = parse_matrix)]
    pub matrix: [i64; 4],
    /// Score of a letter facing a gap.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub gap: i64,
    #[arg(long, value_enum, default_value_t = Pairing::Identical)]
    pub pairing: Pairing,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct DropReplayArgs {
    /// History CSV with header j,T_j,V_j; a fresh history is drawn when absent.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Length to grow a fresh history to.
    #[arg(long, default_value_t = 10, value_parser = parse_at_least_2)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "paper-interior", value_parser = parse_mode)]
    pub mode: InsertionMode,
    /// Binary string to score every Z^j against.
    #[arg(long)]
    pub y: Option<String>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

/// Experiment constants; a flag overrides the config file, which overrides
/// the built-in default.
#[derive(Args, Debug, Clone, Default, Serialize)]
pub struct ExpArgs {
    /// TOML file (top-level keys, optionally a [subcommand] table) or a JSON artifact.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Length of X and Y [default: 500].
    #[arg(long)]
    pub n: Option<usize>,
    /// P(X_i = a) [default: 0.5].
    #[arg(long, value_parser = parse_probability)]
    pub p: Option<f64>,
    /// Replications [default: 1000].
    #[arg(long, value_parser = parse_positive)]
    pub reps: Option<usize>,
    /// Master seed; replication r uses stream (seed, r) [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Slope constant, in (0, 1] [default: 0.1].
    #[arg(long, value_parser = parse_k1)]
    pub k1: Option<f64>,
    /// Window constant: windows of k2 * ln n letters [default: 10].
    #[arg(long, value_parser = parse_positive_f64)]
    pub k2: Option<f64>,
    /// Free-bit proportion, in (0, 1) [default: 0.002].
    #[arg(long, value_parser = parse_unit)]
    pub epsilon: Option<f64>,
    /// delta(epsilon), in (0, 1) [default: derived from epsilon].
    #[arg(long, value_parser = parse_unit)]
    pub delta: Option<f64>,
    /// Block-length cutoff, at least 2 [default: 15].
    #[arg(long = "D", id = "D", value_parser = parse_at_least_2)]
    #[serde(rename = "D")]
    pub d: Option<usize>,
    /// Non-empty match density [default: 0.0425 epsilon / (D - 1)].
    #[arg(long)]
    pub gamma_match: Option<f64>,
    /// Insertion slots [default: paper-interior].
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<InsertionMode>,
    /// Uniform stride of the k grid for the matching events [default: log-spaced grid].
    #[arg(long, value_parser = parse_positive)]
    pub stride: Option<usize>,
    /// Points of the log-spaced k grid [default: 32].
    #[arg(long, value_parser = parse_positive)]
    pub grid_points: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct SimArgs {
    #[command(flatten)]
    pub exp: ExpArgs,
    /// Events to evaluate: E1..E6, Eslope [default: all].
    #[arg(long, value_delimiter = ',', value_parser = parse_event)]
    pub events: Vec<EventId>,
}

#[derive(Args, Debug, Serialize)]
pub struct IncrementArgs {
    #[command(flatten)]
    pub exp: ExpArgs,
    /// Frozen states to sample [default: 100].
    #[arg(long)]
    pub states: Option<usize>,
    /// Replayed (T, V) draws per state [default: 4000].
    #[arg(long, value_parser = parse_positive)]
    pub draws: Option<usize>,
    /// Exact enumeration for this Z only (needs --y).
    #[arg(long, requires = "y")]
    pub z: Option<String>,
    #[arg(long, requires = "z")]
    pub y: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct GammaArgs {
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 100, value_parser = parse_positive)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Three-letter model with P(a) = p; two fair binary strings when absent.
    #[arg(long, value_parser = parse_probability)]
    pub p: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct OracleArgs {
    /// String length, at most 12.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u8).range(0..=12))]
    pub n: u8,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct BlocksArgs {
    /// Binary string; random fair strings are drawn when absent.
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long = "D", id = "D", default_value_t = 15, value_parser = parse_positive)]
    #[serde(rename = "D")]
    pub d: usize,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1, value_parser = parse_positive)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct ContainArgs {
    /// Length of the fixed word.
    #[arg(long)]
    pub l: usize,
    /// Length of the random string.
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct ScalingArgs {
    /// Comma-separated lengths.
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 400, 1600, 6400])]
    pub ns: Vec<usize>,
    #[arg(long, default_value_t = 0.5, value_parser = parse_probability)]
    pub p: f64,
    #[arg(long, default_value_t = 1000, value_parser = parse_positive)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Sample through the drop-scheme curve instead of direct LCS.
    #[arg(long, value_parser = parse_mode)]
    pub coupled: Option<InsertionMode>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

fn parse_probability(s: &str) -> std::result::Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    check_probability(p).map(|_| p).map_err(|e| e.to_string())
}

fn parse_unit(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1), got {v}"))
    }
}

fn parse_k1(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1], got {v}"))
    }
}

fn parse_positive_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn parse_positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_at_least_2(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 2 => Ok(v),
        Ok(v) => Err(format!("must be at least 2, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_mode(s: &str) -> std::result::Result<InsertionMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_event(s: &str) -> std::result::Result<EventId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_matrix(s: &str) -> std::result::Result<[i64; 4], String> {
    let v: Vec<i64> = s
        .split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|_| "expected four comma-separated scores s00,s01,s10,s11".to_string())
}

/// Failure of a run: `Usage` maps to exit status 2 and names the flag.
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn usage(flag: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("invalid value for {flag}: {msg}"))
}

fn parse_flag<T: std::str::FromStr<Err = Error>>(flag: &str, s: &str) -> std::result::Result<T, Failure> {
    s.parse().map_err(|e| usage(flag, e))
}

/// Config file, then flags. The file's top-level keys apply to every
/// subcommand and a table named after the subcommand refines them.
fn effective_config(args: &ExpArgs, section: &str) -> std::result::Result<(ExperimentConfig, Extras), Failure> {
    let (mut cfg, extras) = match &args.config {
        None => (ExperimentConfig::default(), Extras::new()),
        Some(path) => load_config(path, section).map_err(|e| usage("--config", e))?,
    };
    macro_rules! set {
        ($($field:ident => $target:expr),*) => {
            $(if let Some(v) = args.$field { $target = v; })*
        };
    }
    set!(n => cfg.n, p => cfg.p, reps => cfg.reps, seed => cfg.seed, k1 => cfg.k1, k2 => cfg.k2,
         epsilon => cfg.epsilon, d => cfg.d, mode => cfg.mode, grid_points => cfg.grid_points);
    if args.delta.is_some() {
        cfg.delta = args.delta;
    }
    if args.gamma_match.is_some() {
        cfg.gamma_match = args.gamma_match;
    }
    if args.stride.is_some() {
        cfg.stride = args.stride;
    }
    cfg.validate().map_err(|e| {
        let flag = config_flag(&e.to_string());
        usage(flag, e)
    })?;
    Ok((cfg, extras))
}

/// Keys of a config file or artifact that belong to the subcommand rather
/// than to [`ExperimentConfig`] (`events`, `states`, `draws`, ...).
type Extras = serde_json::Map<String, Value>;

const EXTRA_KEYS: [&str; 5] = ["events", "states", "draws", "z", "y"];

fn split_extras(mut v: Value) -> Result<(ExperimentConfig, Extras)> {
    let known = serde_json::to_value(ExperimentConfig::default()).map_err(|e| Error::Config(e.to_string()))?;
    let mut extras = Extras::new();
    if let (Value::Object(map), Value::Object(known)) = (&mut v, &known) {
        let unknown: Vec<String> = map.keys().filter(|k| !known.contains_key(*k)).cloned().collect();
        for key in unknown {
            if !EXTRA_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown key {key:?}")));
            }
            if let Some(val) = map.remove(&key) {
                extras.insert(key, val);
            }
        }
    }
    let cfg = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
    Ok((cfg, extras))
}

/// The flag behind a validation message, which always starts with the field name.
fn config_flag(msg: &str) -> &'static str {
    const FIELDS: [(&str, &str); 14] = [
        ("thresholds", "--config"),
        ("gamma_match", "--gamma-match"),
        ("c_hat", "--config"),
        ("epsilon", "--epsilon"),
        ("delta", "--delta"),
        ("reps", "--reps"),
        ("grid_points", "--grid-points"),
        ("stride", "--stride"),
        ("k1", "--k1"),
        ("k2", "--k2"),
        ("D ", "--D"),
        ("probability", "--p"),
        ("length", "--n"),
        ("p ", "--p"),
    ];
    FIELDS
        .iter()
        .find(|(f, _)| msg.starts_with(f) || msg.to_lowercase().contains(&format!("{} ", f.trim())))
        .map_or("--config", |&(_, flag)| flag)
}

fn load_config(path: &Path, section: &str) -> Result<(ExperimentConfig, Extras)> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let mut v: Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(inner) = v.get_mut("config") {
            v = inner.take();
        }
        return split_extras(v);
    }
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let mut merged = toml::Table::new();
    for (key, value) in &table {
        if !value.is_table() || key == "thresholds" {
            merged.insert(key.clone(), value.clone());
        }
    }
    if let Some(toml::Value::Table(sub)) = table.get(section) {
        for (key, value) in sub {
            merged.insert(key.clone(), value.clone());
        }
    }
    split_extras(serde_json::to_value(merged).map_err(|e| Error::Config(e.to_string()))?)
}

/// Rows plus provenance, rendered as CSV (provenance as constant trailing
/// columns) or as one JSON document.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

struct Provenance {
    seed: Option<u64>,
    config: Value,
}

fn render_csv(table: &Table, prov: &Provenance) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = table.header.clone();
    header.extend(["version", "seed", "config"]);
    w.write_record(&header)?;
    let seed = prov.seed.map_or(String::new(), |s| s.to_string());
    let config = prov.config.to_string();
    for row in &table.rows {
        let mut rec = row.clone();
        rec.extend([crate::VERSION.to_string(), seed.clone(), config.clone()]);
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn render_json<T: Serialize>(result: &T, prov: &Provenance) -> Result<Vec<u8>> {
    let doc = json!({
        "version": crate::VERSION,
        "seed": prov.seed,
        "config": prov.config,
        "result": result,
    });
    let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| Error::Config(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn b(v: Option<bool>) -> String {
    match v {
        Some(true) => "1".into(),
        Some(false) => "0".into(),
        None => String::new(),
    }
}

fn f(v: f64) -> String {
    format!("{v}")
}

struct Emit<'a> {
    out: &'a OutArgs,
    stdout: &'a mut Vec<u8>,
}

impl Emit<'_> {
    fn write(&mut self, bytes: &[u8]) -> std::result::Result<(), Failure> {
        match &self.out.out {
            None => {
                self.stdout.extend_from_slice(bytes);
                Ok(())
            }
            Some(path) => {
                let mut file = File::create(path).map_err(|e| usage("--out", format!("{}: {e}", path.display())))?;
                file.write_all(bytes).map_err(|e| Failure::Run(e.into()))
            }
        }
    }

    /// A table command: CSV unless JSON was asked for.
    fn table<T: Serialize>(&mut self, table: &Table, result: &T, prov: &Provenance) -> std::result::Result<(), Failure> {
        let bytes = match self.out.format {
            Some(Format::Json) => render_json(result, prov)?,
            _ => render_csv(table, prov)?,
        };
        self.write(&bytes)
    }

    /// A single-value command: the bare value unless a format was asked for.
    fn value<T: Serialize>(&mut self, bare: &str, table: &Table, result: &T, prov: &Provenance) -> std::result::Result<(), Failure> {
        match self.out.format {
            None => self.write(format!("{bare}\n").as_bytes()),
            Some(_) => self.table(table, result, prov),
        }
    }
}

fn args_json<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).unwrap_or(Value::Null)
}

fn exp_provenance(cfg: &ExperimentConfig, extra: Value) -> Provenance {
    let mut config = serde_json::to_value(cfg).unwrap_or(Value::Null);
    if let (Value::Object(map), Value::Object(more)) = (&mut config, extra) {
        map.extend(more);
    }
    Provenance { seed: Some(cfg.seed), config }
}

/// Flags first, then the config file, then every event.
fn event_list(events: &[EventId], extras: &Extras) -> std::result::Result<Vec<EventId>, Failure> {
    if !events.is_empty() {
        return Ok(events.to_vec());
    }
    match extras.get("events") {
        None => Ok(EventId::ALL.to_vec()),
        Some(Value::Array(names)) => names
            .iter()
            .map(|v| match v {
                Value::String(s) => parse_flag("--config", s),
                other => Err(usage("--config", format!("bad event {other}"))),
            })
            .collect(),
        Some(other) => Err(usage("--config", format!("events must be a list, got {other}"))),
    }
}

fn extra_usize(flag: Option<usize>, extras: &Extras, key: &str, default: usize) -> std::result::Result<usize, Failure> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match extras.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| usage("--config", format!("{key} must be a non-negative integer, got {v}"))),
    }
}

fn event_names(events: &[EventId]) -> Value {
    Value::Array(events.iter().map(|e| Value::String(e.name().into())).collect())
}

fn out_of(cmd: &Command) -> &OutArgs {
    match cmd {
        Command::Lcs(a) => &a.out,
        Command::Align(a) => &a.out,
        Command::DropReplay(a) => &a.out,
        Command::Simulate(a) | Command::Events(a) => &a.exp.out,
        Command::Inclusions(a) => &a.out,
        Command::Increment(a) => &a.exp.out,
        Command::Gamma(a) => &a.out,
        Command::OracleL10(a) => &a.out,
        Command::Blocks(a) => &a.out,
        Command::Contain(a) => &a.out,
        Command::Scaling(a) => &a.out,
    }
}

/// Runs one invocation and returns the process exit status: 0 on success,
/// 2 on a usage or validation error, 1 on any other failure.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let threads = out_of(&cli.command).threads;
    let mut buf = Vec::new();
    let outcome = match threads {
        Some(0) => Err(usage("--threads", "must be at least 1")),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command, &mut buf)),
            Err(e) => Err(Failure::Run(Error::Config(e.to_string()))),
        },
        None => dispatch(&cli.command, &mut buf),
    };
    let outcome = outcome.and_then(|()| stdout.write_all(&buf).map_err(|e| Failure::Run(e.into())));
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(Failure::Run(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn dispatch(cmd: &Command, stdout: &mut Vec<u8>) -> std::result::Result<(), Failure> {
    let mut emit = Emit { out: out_of(cmd), stdout };
    match cmd {
        Command::Lcs(a) => {
            let x: TriSequence = parse_flag("--a", &a.a)?;
            let y: TriSequence = parse_flag("--b", &a.b)?;
            let l = lcs_length(&x, &y);
            let mut t = Table::new(&["lcs"]);
            t.push(vec![l.to_string()]);
            let prov = Provenance { seed: None, config: args_json(a) };
            emit.value(&l.to_string(), &t, &json!({ "lcs": l }), &prov)
        }
        Command::Align(a) => {
            let x: TriSequence = parse_flag("--a", &a.a)?;
            let y: TriSequence = parse_flag("--b", &a.b)?;
            let [s00, s01, s10, s11] = a.matrix;
            let pairing = match a.pairing {
                Pairing::Identical => PairingRule::IdenticalOnly,
                Pairing::Any => PairingRule::AnyPair,
            };
            let m = SubstitutionMatrix::binary([[s00, s01], [s10, s11]], a.gap).with_pairing(pairing);
            let score = align_score(&x, &y, &m).map_err(|e| usage("--matrix", e))?;
            let mut t = Table::new(&["score"]);
            t.push(vec![score.to_string()]);
            let prov = Provenance { seed: None, config: args_json(a) };
            emit.value(&score.to_string(), &t, &json!({ "score": score }), &prov)
        }
        Command::DropReplay(a) => drop_replay(a, &mut emit),
        Command::Simulate(a) => {
            let (cfg, extras) = effective_config(&a.exp, "simulate")?;
            let events = event_list(&a.events, &extras)?;
            let summary = simulate(&cfg, &events)?;
            let mut t = Table::new(&["rep", "L_n", "N_a", "E1", "E2", "E3", "E4", "E5", "E6", "Eslope", "N_D"]);
            for r in &summary.replications {
                let fl = r.flags;
                t.push(vec![
                    r.rep.to_string(),
                    r.ln.to_string(),
                    r.na.to_string(),
                    b(fl.e1),
                    b(fl.e2),
                    b(fl.e3),
                    b(fl.e4),
                    b(fl.e5),
                    b(fl.e6),
                    b(fl.slope),
                    r.n_d.to_string(),
                ]);
            }
            let prov = exp_provenance(&cfg, json!({ "events": event_names(&events) }));
            emit.table(&t, &summary, &prov)
        }
        Command::Events(a) => {
            let (cfg, extras) = effective_config(&a.exp, "events")?;
            let events = event_list(&a.events, &extras)?;
            let summary = simulate(&cfg, &events)?;
            let mut t = Table::new(&["event", "successes", "reps", "frequency", "ci_lo", "ci_hi"]);
            for e in &summary.events {
                t.push(vec![
                    e.event.name().into(),
                    e.successes.to_string(),
                    e.reps.to_string(),
                    f(e.frequency.estimate),
                    f(e.frequency.lo),
                    f(e.frequency.hi),
                ]);
            }
            let prov = exp_provenance(&cfg, json!({ "events": event_names(&events) }));
            emit.table(&t, &summary.events, &prov)
        }
        Command::Inclusions(a) => {
            let (cfg, _) = effective_config(a, "inclusions")?;
            let rep = check_inclusions(&cfg).map_err(|e| match e {
                Error::Precondition(m) => usage("--epsilon", m),
                other => Failure::Run(other),
            })?;
            let mut t = Table::new(&[
                "vacuous",
                "reps",
                "grid_points",
                "delta",
                "gamma_match",
                "premise_346",
                "violations_346",
                "premise_123",
                "violations_123",
                "single_color_failures",
            ]);
            t.push(vec![
                rep.vacuous.to_string(),
                rep.reps.to_string(),
                rep.grid.len().to_string(),
                f(rep.resolved.delta),
                f(rep.resolved.gamma_match),
                rep.premise_346.to_string(),
                rep.violations_346.to_string(),
                rep.premise_123.to_string(),
                rep.violations_123.to_string(),
                rep.single_color_failures.to_string(),
            ]);
            emit.table(&t, &rep, &exp_provenance(&cfg, json!({})))
        }
        Command::Increment(a) => increment(a, &mut emit),
        Command::Gamma(a) => {
            let g = estimate_gamma(a.n, a.reps, a.seed, a.p)?;
            let mut t = Table::new(&["n", "p", "reps", "mean_ratio", "ci_lo", "ci_hi"]);
            t.push(vec![
                g.n.to_string(),
                a.p.map_or("binary".into(), f),
                g.reps.to_string(),
                f(g.ratio.estimate),
                f(g.ratio.lo),
                f(g.ratio.hi),
            ]);
            let prov = Provenance { seed: Some(a.seed), config: args_json(a) };
            emit.table(&t, &g, &prov)
        }
        Command::OracleL10(a) => {
            let e = exact_e_ln(a.n as usize)?;
            let (num, pow) = reduce_dyadic(e.numerator, e.log2_denominator);
            let rational = format!("{num}/2^{pow}");
            let mut t = Table::new(&["n", "mean", "numerator", "log2_denominator"]);
            t.push(vec![a.n.to_string(), e.decimal(), num.to_string(), pow.to_string()]);
            let prov = Provenance { seed: None, config: args_json(a) };
            let result = json!({ "n": a.n, "mean": e.decimal(), "numerator": num, "log2_denominator": pow });
            emit.value(&format!("{} = {rational}", e.decimal()), &t, &result, &prov)
        }
        Command::Blocks(a) => blocks_cmd(a, &mut emit),
        Command::Contain(a) => {
            if a.l > a.k && a.k > 100_000 {
                return Err(usage("--k", "at most 100000"));
            }
            let ln = containment_ln_prob(a.l, a.k).map_err(|e| usage("--k", e))?;
            let dyadic = if a.k <= 126 {
                containment_prob_dyadic(a.l, a.k).ok().map(|n| reduce_dyadic_u128(n, a.k as u32))
            } else {
                None
            };
            let exact = dyadic.map(|(n, p)| format!("{n}/2^{p}"));
            let prob = containment_prob_exact(a.l, a.k)?;
            let mut t = Table::new(&["l", "k", "probability", "ln_probability", "exact"]);
            t.push(vec![a.l.to_string(), a.k.to_string(), f(prob), f(ln), exact.clone().unwrap_or_default()]);
            let prov = Provenance { seed: None, config: args_json(a) };
            let result = json!({ "l": a.l, "k": a.k, "probability": prob, "ln_probability": ln, "exact": exact });
            emit.value(&f(prob), &t, &result, &prov)
        }
        Command::Scaling(a) => {
            check_probability(a.p).map_err(|e| usage("--p", e))?;
            let route = a.coupled.map_or(Route::Direct, Route::Coupled);
            let rows = run_variance_scaling(&a.ns, a.p, a.reps, a.seed, route)?;
            let mut t = Table::new(&["n", "reps", "mean", "variance", "var_over_n", "ci_lo", "ci_hi", "insufficient_sample"]);
            for r in &rows {
                t.push(vec![
                    r.n.to_string(),
                    r.reps.to_string(),
                    f(r.mean),
                    f(r.variance),
                    f(r.var_over_n),
                    f(r.ci.lo),
                    f(r.ci.hi),
                    r.insufficient_sample.to_string(),
                ]);
            }
            let prov = Provenance { seed: Some(a.seed), config: args_json(a) };
            emit.table(&t, &rows, &prov)
        }
    }
}

fn reduce_dyadic(num: u64, pow: u32) -> (u64, u32) {
    let (n, p) = reduce_dyadic_u128(num as u128, pow);
    (n as u64, p)
}

fn reduce_dyadic_u128(num: u128, pow: u32) -> (u128, u32) {
    if num == 0 {
        return (0, 0);
    }
    let shift = num.trailing_zeros().min(pow);
    (num >> shift, pow - shift)
}

fn drop_replay(a: &DropReplayArgs, emit: &mut Emit) -> std::result::Result<(), Failure> {
    let y: Option<BinarySequence> = a.y.as_deref().map(|s| parse_flag("--y", s)).transpose()?;
    let state = match &a.history {
        Some(path) => {
            let file = File::open(path).map_err(|e| usage("--history", format!("{}: {e}", path.display())))?;
            DropState::read_history_csv(BufReader::new(file), a.mode).map_err(|e| usage("--history", e))?
        }
        None => {
            let mut rng = RngStream::new(a.seed, 0).fork(labels::DROP).rng();
            let mut st = DropState::init(&mut rng, a.mode);
            while st.k() < a.k {
                st.step(&mut rng);
            }
            st
        }
    };
    let (v1, v2) = state.initial_bits();
    let mut t = Table::new(&["j", "T_j", "V_j", "Z_j", "L_j"]);
    let mut z = BinarySequence::from_bits([v1]);
    let score = |z: &BinarySequence| y.as_ref().map_or(String::new(), |y| lcs_bitparallel(z, y).to_string());
    t.push(vec!["1".into(), String::new(), v1.to_char().to_string(), z.to_string(), score(&z)]);
    z.push(v2);
    t.push(vec!["2".into(), String::new(), v2.to_char().to_string(), z.to_string(), score(&z)]);
    let mut replay = DropState::from_initial(v1, v2, a.mode);
    for (i, ins) in state.history().iter().enumerate() {
        replay.step_forced(ins.position, ins.bit)?;
        let z = replay.current();
        t.push(vec![
            (i + 3).to_string(),
            ins.position.to_string(),
            ins.bit.to_char().to_string(),
            z.to_string(),
            score(&z),
        ]);
    }
    let mut config = args_json(a);
    if a.history.is_some() {
        config["history"] = json!(a.history.as_ref().map(|p| p.display().to_string()));
    }
    let seed = a.history.is_none().then_some(a.seed);
    let result: Vec<Value> = t
        .rows
        .iter()
        .map(|r| json!({ "j": r[0], "T_j": r[1], "V_j": r[2], "Z_j": r[3], "L_j": r[4] }))
        .collect();
    emit.table(&t, &result, &Provenance { seed, config })
}

fn increment(a: &IncrementArgs, emit: &mut Emit) -> std::result::Result<(), Failure> {
    let (cfg, extras) = effective_config(&a.exp, "increment")?;
    let states = extra_usize(a.states, &extras, "states", 100)?;
    let draws = extra_usize(a.draws, &extras, "draws", 4000)?;
    if draws == 0 {
        return Err(usage("--draws", "must be at least 1"));
    }
    let header = [
        "state",
        "k",
        "slots",
        "nonempty",
        "exact",
        "estimate",
        "sigma",
        "bound_k",
        "bound_k_minus_1",
        "bound_slots",
        "violation",
    ];
    let mut t = Table::new(&header);
    let extra = json!({ "states": states, "draws": draws, "z": a.z, "y": a.y });
    if let (Some(z), Some(y)) = (&a.z, &a.y) {
        let z: BinarySequence = parse_flag("--z", z)?;
        let y: BinarySequence = parse_flag("--y", y)?;
        let ex = exact_increment(&z, &y, cfg.mode).map_err(|e| usage("--z", e))?;
        t.push(vec![
            "0".into(),
            ex.k.to_string(),
            ex.slots.to_string(),
            ex.nonempty.to_string(),
            f(ex.probability),
            String::new(),
            String::new(),
            f(ex.bound_k),
            f(ex.bound_k_minus_1),
            f(ex.bound_slots),
            (ex.probability < ex.bound_k).to_string(),
        ]);
        return emit.table(&t, &ex, &exp_provenance(&cfg, extra));
    }
    let rows = increment_probability_check(&cfg, states, draws)?;
    for r in &rows {
        let ex = r.exact;
        t.push(vec![
            r.state.to_string(),
            ex.k.to_string(),
            ex.slots.to_string(),
            ex.nonempty.to_string(),
            f(ex.probability),
            f(r.estimate),
            f(r.sigma),
            f(ex.bound_k),
            f(ex.bound_k_minus_1),
            f(ex.bound_slots),
            r.violation.to_string(),
        ]);
    }
    emit.table(&t, &rows, &exp_provenance(&cfg, extra))
}

fn blocks_cmd(a: &BlocksArgs, emit: &mut Emit) -> std::result::Result<(), Failure> {
    let mut t = Table::new(&["rep", "n", "D", "blocks", "N_D", "runs_D_plus_1", "runs_D"]);
    let mut row = |rep: String, y: &BinarySequence| -> Result<()> {
        let (nd, tilde) = count_nd(y, a.d)?;
        let (_, tilde_prev) = count_nd(y, a.d - 1).unwrap_or((0, y.len()));
        t.push(vec![
            rep,
            y.len().to_string(),
            a.d.to_string(),
            blocks(y).len().to_string(),
            nd.to_string(),
            tilde.to_string(),
            tilde_prev.to_string(),
        ]);
        Ok(())
    };
    let seed = match &a.y {
        Some(s) => {
            let y: BinarySequence = parse_flag("--y", s)?;
            row(String::new(), &y)?;
            None
        }
        None => {
            for r in 0..a.reps as u64 {
                let y = BinarySequence::random(a.n, &mut RngStream::new(a.seed, r).fork(labels::Y).rng());
                row(r.to_string(), &y)?;
            }
            Some(a.seed)
        }
    };
    let result: Vec<Value> = t
        .rows
        .iter()
        .map(|r| json!({ "rep": r[0], "n": r[1], "D": r[2], "blocks": r[3], "N_D": r[4], "runs_D_plus_1": r[5], "runs_D": r[6] }))
        .collect();
    emit.table(&t, &result, &Provenance { seed, config: args_json(a) })
}
