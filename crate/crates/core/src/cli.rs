//! Command-line front end. Data goes to stdout (or `--out`), a one-line
//! JSON reproducibility header goes to stderr.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::core_model::{ks_core, RemovalPolicy};
use crate::critical_lab::{load_records, run_ensemble_to, summarize, TrialRecord};
use crate::error::Error;
use crate::exploration::{explore, EndpointSummary, RecordMode};
use crate::fluid::{
    extinction_values, integrate, theta_param, theta_range_diagnostic, ClosedFormSolution, Regime, StepControl,
};
use crate::graph::{sample_configuration, DegreeSequence, PairedGraph};
use crate::limit_law::{limit_maps, sample_hitting_times, two_sample_distance, VarthetaConfig};
use crate::seed::rng_from_seed;

#[derive(Debug, Parser, Serialize)]
#[command(name = "kslab", version, about = "Karp–Sipser core laboratory for degree-{1,2,3} configuration models")]
pub struct Cli {
    /// Leave the timestamp out of the stderr header.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub no_timestamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct SeedArg {
    /// Master seed.
    #[arg(long, env = "KSLAB_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Θ, regime and limiting core density for half-edge proportions.
    Phase {
        #[arg(long = "p", value_name = "P1,P2,P3")]
        p: String,
    },
    /// Samples a configuration-model graph and prints its edge list.
    Sample {
        #[arg(long, value_name = "D1,D2,D3")]
        seq: String,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Karp–Sipser core of a sampled or loaded graph.
    Core {
        #[arg(long, value_name = "D1,D2,D3", conflicts_with = "graph", required_unless_present = "graph")]
        seq: Option<String>,
        /// Edge-list file.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, value_enum, default_value_t = Policy::Uniform)]
        policy: Policy,
        /// Writes the core as an edge list.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Runs the exploration chain to its stopping step.
    Explore {
        #[arg(long, value_name = "D1,D2,D3")]
        seq: String,
        #[command(flatten)]
        seed: SeedArg,
        /// `full`, `endpoints` or `every:K`.
        #[arg(long, default_value = "endpoints")]
        record: String,
        /// CSV file for the recorded `k,X,Y,Z` states.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Integrates the fluid limit to extinction.
    Fluid {
        #[arg(long = "p", value_name = "P1,P2,P3")]
        p: String,
        /// CSV file for the `t,X,Y,Z` points.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Critical ensembles; JSON-lines records.
    Critical {
        /// Number of half-edges (repeatable).
        #[arg(long = "n", required = true)]
        n: Vec<u64>,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[command(flatten)]
        seed: SeedArg,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
        /// Record file; without it records go to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keeps existing records in `--out` and runs only missing trials.
        #[arg(long, requires = "out")]
        resume: bool,
    },
    /// Samples ϑ (or a rescaling of it) as a one-column CSV.
    Vartheta {
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value_t = 1e-5)]
        dt: f64,
        #[arg(long, default_value_t = 0.05)]
        t0: f64,
        #[arg(long, default_value_t = 1e16)]
        t_max: f64,
        #[arg(long, value_enum, default_value_t = Mapping::Raw)]
        map: Mapping,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-sample Kolmogorov–Smirnov comparison of two sample files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Column (CSV header) or field (JSON lines) to read; defaults to
        /// the first CSV column or `r2`.
        #[arg(long)]
        field: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum Policy {
    First,
    Uniform,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum Mapping {
    Raw,
    D2,
    D3,
    T,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotSimplex(..) | Error::InvalidSequence(_) => Failure::Usage(e.to_string()),
            e => Failure::Run(e),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Run(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Run(e.into())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn parse_triple<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<[T; 3]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Failure::Usage(format!("expected {what} as three comma-separated numbers, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(p.parse::<T>().map_err(|_| bad())?);
    }
    out.try_into().map_err(|_| bad())
}

fn parse_seq(s: &str) -> CliResult<DegreeSequence> {
    let [a, b, c] = parse_triple::<u64>(s, "D1,D2,D3")?;
    Ok(DegreeSequence::new(a, b, c)?)
}

fn parse_p(s: &str) -> CliResult<(f64, f64, f64)> {
    let [a, b, c] = parse_triple::<f64>(s, "P1,P2,P3")?;
    theta_param(a, b, c)?;
    Ok((a, b, c))
}

fn parse_record(s: &str) -> CliResult<RecordMode> {
    match s {
        "full" => Ok(RecordMode::Full),
        "endpoints" => Ok(RecordMode::EndpointsOnly),
        _ => s
            .strip_prefix("every:")
            .and_then(|k| k.parse::<u64>().ok())
            .filter(|k| *k > 0)
            .map(RecordMode::Subsample)
            .ok_or_else(|| Failure::Usage(format!("--record must be full, endpoints or every:K, got {s:?}"))),
    }
}

fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn header(cli: &Cli) -> serde_json::Value {
    let config = serde_json::to_string(&cli.command).unwrap_or_default();
    let digest = Sha256::digest(config.as_bytes());
    let hash: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    let seed = match &cli.command {
        Command::Sample { seed, .. }
        | Command::Core { seed, .. }
        | Command::Explore { seed, .. }
        | Command::Critical { seed, .. }
        | Command::Vartheta { seed, .. } => Some(seed.seed),
        _ => None,
    };
    let mut h = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "master_seed": seed,
        "config_hash": hash,
    });
    if !cli.no_timestamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        h["timestamp"] = json!(secs);
    }
    h
}

fn cmd_phase(p: &str) -> CliResult<()> {
    let (p1, p2, p3) = parse_p(p)?;
    let theta = theta_param(p1, p2, p3)?;
    let regime = Regime::classify(theta);
    let mut report = json!({ "Theta": theta, "regime": regime });
    if let Some(d) = theta_range_diagnostic(theta) {
        report["diagnostic"] = json!(d);
    }
    if regime == Regime::Supercritical {
        let (y, z, s) = extinction_values(theta)?;
        report["density"] = json!(s);
        report["Y_ext"] = json!(y);
        report["Z_ext"] = json!(z);
        if p1 > 0.0 {
            // the extinction size of the fluid solution through (p1, p2, p3),
            // which differs from the density above when p2 > 0
            let sol = ClosedFormSolution::from_initial(p1, p2, p3)?;
            let u = sol.u_ext().expect("supercritical solutions go extinct at finite u");
            report["fluid_S_ext"] = json!(sol.s_at_u(u));
        }
    }
    print_json(&report)
}

fn cmd_sample(seq: &str, seed: u64, out: Option<&Path>) -> CliResult<()> {
    let seq = parse_seq(seq)?;
    let g = sample_configuration(&seq, &mut rng_from_seed(seed))?;
    let mut w = sink(out)?;
    w.write_all(g.to_edge_list().as_bytes())?;
    w.flush()?;
    Ok(())
}

fn cmd_core(
    seq: Option<&str>,
    graph: Option<&Path>,
    seed: u64,
    policy: Policy,
    export: Option<&Path>,
) -> CliResult<()> {
    let g = match (seq, graph) {
        (Some(s), _) => sample_configuration(&parse_seq(s)?, &mut rng_from_seed(seed))?,
        (None, Some(path)) => PairedGraph::read_edge_list(BufReader::new(File::open(path)?))?,
        (None, None) => return Err(Failure::Usage("one of --seq or --graph is required".into())),
    };
    let policy = match policy {
        Policy::First => RemovalPolicy::FirstIndex,
        Policy::Uniform => RemovalPolicy::UniformRandom(seed),
    };
    let core = ks_core(&g, policy);
    if let Some(path) = export {
        let mut w = sink(Some(path))?;
        w.write_all(core.to_graph(&g).to_edge_list().as_bytes())?;
        w.flush()?;
    }
    print_json(&json!({
        "n": g.num_half_edges(),
        "vertices": g.num_vertices(),
        "core_size": core.core_size,
        "core_histogram": core.histogram(),
        "independent_set": core.independent_set.len(),
    }))
}

fn cmd_explore(seq: &str, seed: u64, record: &str, csv: Option<&Path>) -> CliResult<()> {
    let seq = parse_seq(seq)?;
    let mode = parse_record(record)?;
    let tr = explore(&seq, seed, mode)?;
    if let Some(path) = csv {
        let mut w = sink(Some(path))?;
        tr.write_csv(&mut w)?;
        w.flush()?;
    }
    print_json(&EndpointSummary { n: tr.n, seed, theta: tr.theta, d2: tr.d2, d3: tr.d3 })
}

fn cmd_fluid(p: &str, csv: Option<&Path>) -> CliResult<()> {
    let (p1, p2, p3) = parse_p(p)?;
    let tr = integrate(p1, p2, p3, &StepControl::default())?;
    let sol = ClosedFormSolution::from_initial(p1, p2, p3).ok();
    if let Some(path) = csv {
        let mut w = sink(Some(path))?;
        writeln!(w, "t,X,Y,Z")?;
        for pt in &tr.points {
            writeln!(w, "{},{},{},{}", pt.t, pt.x, pt.y, pt.z)?;
        }
        w.flush()?;
    }
    print_json(&json!({
        "Theta": tr.theta,
        "b": sol.map(|s| s.params.b),
        "u0": sol.map(|s| s.params.u0),
        "u_start": sol.map(|s| s.u_start),
        "t_ext": tr.t_ext,
        "extinction_state": tr.extinction,
        "S_ext": tr.extinction.s(),
        "steps": tr.accepted,
    }))
}

fn cmd_critical(
    ns: &[u64],
    trials: u64,
    seed: u64,
    jobs: Option<usize>,
    out: Option<&Path>,
    resume: bool,
) -> CliResult<()> {
    let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let mut all: Vec<TrialRecord> = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        // later sizes append to the file the first one created
        let keep = resume || i > 0;
        all.extend(run_ensemble_to(n, trials, seed, jobs, out, keep)?);
    }
    match out {
        Some(_) => print_json(&summarize(&all)?),
        None => {
            let mut w = sink(None)?;
            for r in &all {
                writeln!(w, "{}", serde_json::to_string(r)?)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_vartheta(
    count: usize,
    seed: u64,
    dt: f64,
    t0: f64,
    t_max: f64,
    map: Mapping,
    out: Option<&Path>,
) -> CliResult<()> {
    let cfg = VarthetaConfig { dt, t0, t_max, barrier: 1.0 };
    let samples = sample_hitting_times(count, seed, &cfg).map_err(|e| match e {
        Error::Domain(m) => Failure::Usage(m),
        e => Failure::Run(e),
    })?;
    let mut w = sink(out)?;
    let name = match map {
        Mapping::Raw => "vartheta",
        Mapping::D2 => "d2",
        Mapping::D3 => "d3",
        Mapping::T => "t",
    };
    writeln!(w, "{name}")?;
    for s in samples {
        let v = match map {
            Mapping::Raw => s.value,
            Mapping::D2 => limit_maps(s.value)?.d2,
            Mapping::D3 => limit_maps(s.value)?.d3,
            Mapping::T => limit_maps(s.value)?.t,
        };
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one numeric column from a CSV file, or one field from a JSON-lines
/// record file (recognised by the `.jsonl` extension).
fn read_column(path: &Path, field: Option<&str>) -> CliResult<Vec<f64>> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        let field = field.unwrap_or("r2");
        let recs = load_records(path)?;
        let value = |r: &TrialRecord| -> Option<f64> {
            Some(match field {
                "r2" => r.r2,
                "r3" => r.r3,
                "t_theta" => r.t_theta,
                "D2" => r.d2 as f64,
                "D3" => r.d3 as f64,
                "theta" => r.theta as f64,
                _ => return None,
            })
        };
        return recs
            .iter()
            .map(|r| value(r).ok_or_else(|| Failure::Usage(format!("unknown record field {field:?}"))))
            .collect();
    }
    let reader = BufReader::new(File::open(path)?);
    let mut col = 0usize;
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        match cells.get(col).map(|c| c.parse::<f64>()) {
            Some(Ok(v)) => out.push(v),
            _ if i == 0 => {
                if let Some(f) = field {
                    col = cells
                        .iter()
                        .position(|c| *c == f)
                        .ok_or_else(|| Failure::Usage(format!("no column {f:?} in {}", path.display())))?;
                }
            }
            _ => return Err(Error::Parse { line: i + 1, msg: format!("not a number: {line:?}") }.into()),
        }
    }
    Ok(out)
}

fn cmd_compare(a: &Path, b: &Path, field: Option<&str>) -> CliResult<()> {
    let (xs, ys) = (read_column(a, field)?, read_column(b, field)?);
    print_json(&two_sample_distance(&xs, &ys)?)
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Phase { p } => cmd_phase(p),
        Command::Sample { seq, seed, out } => cmd_sample(seq, seed.seed, out.as_deref()),
        Command::Core { seq, graph, seed, policy, export } => {
            cmd_core(seq.as_deref(), graph.as_deref(), seed.seed, *policy, export.as_deref())
        }
        Command::Explore { seq, seed, record, csv } => cmd_explore(seq, seed.seed, record, csv.as_deref()),
        Command::Fluid { p, csv } => cmd_fluid(p, csv.as_deref()),
        Command::Critical { n, trials, seed, jobs, out, resume } => {
            cmd_critical(n, *trials, seed.seed, *jobs, out.as_deref(), *resume)
        }
        Command::Vartheta { count, seed, dt, t0, t_max, map, out } => {
            cmd_vartheta(*count, seed.seed, *dt, *t0, *t_max, *map, out.as_deref())
        }
        Command::Compare { a, b, field } => cmd_compare(a, b, field.as_deref()),
    }
}

/// Parses the process arguments, runs the command and maps failures to exit
/// codes: 2 for usage errors, 3 for runtime errors.
pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    eprintln!("{}", header(&cli));
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
