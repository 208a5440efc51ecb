use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use popcast::allocation::{to_mbps, SessionCensus, SystemParams};
use popcast::harness::formats::{format_trace, AllocateInput, SessionEntry};
use popcast::harness::output::{manifest_json, manifest_path, write_file};
use popcast::harness::{
    allocate_document, emit_sweep, parse_trace, random_census, run_sweep, snapshots_jsonl,
    sweep_csv, Popularity, RunManifest, ScenarioConfig,
};
use popcast::layers::LayerProfile;
use popcast::sim::{generate_trace, run_trace, EventMix, TraceGenConfig};
use popcast::{Error, Result};

#[derive(Parser)]
#[command(
    name = "popcast",
    version,
    about = "Popularity-based bandwidth allocation for video multicast"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Allocate one census and print per-session rates, satisfaction and layers.
    Allocate(AllocateArgs),
    /// Replay a churn trace, reallocating after every event.
    Simulate(SimulateArgs),
    /// Sweep the number of sessions over random audiences and write CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SystemArgs {
    /// Total capacity [default: 30, or the input document's value]
    #[arg(long)]
    capacity_mbps: Option<f64>,
    /// Per-session demanded rate [default: 2]
    #[arg(long)]
    beta_max_mbps: Option<f64>,
    /// Per-session floor rate [default: 0.6]
    #[arg(long)]
    beta_min_mbps: Option<f64>,
    #[arg(long, default_value_t = 0.6)]
    base_layer_mbps: f64,
    #[arg(long, default_value_t = 0.25)]
    enh_layer_mbps: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Uniform,
    Zipf,
}

#[derive(Args)]
struct PopulationArgs {
    /// Number of sessions for a random census
    #[arg(long)]
    sessions: Option<usize>,
    #[arg(long, default_value_t = 200)]
    users: u64,
    #[arg(long, value_enum, default_value_t = DistArg::Uniform)]
    dist: DistArg,
    #[arg(long, default_value_t = 1.0)]
    zipf_s: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct AllocateArgs {
    /// JSON census document; `-` reads stdin
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    population: PopulationArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON-lines trace file
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Generate this many synthetic events when no trace is given
    #[arg(long, default_value_t = 100)]
    events: usize,
    /// Generate switch events only, keeping the audience size fixed
    #[arg(long)]
    switch_only: bool,
    /// JSON census document for the initial state
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    population: PopulationArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Session count or inclusive range such as `5..40`
    #[arg(long, default_value = "5..40")]
    sessions: String,
    #[arg(long, default_value_t = 200)]
    users: u64,
    #[arg(long, value_enum, default_value_t = DistArg::Uniform)]
    dist: DistArg,
    #[arg(long, default_value_t = 1.0)]
    zipf_s: f64,
    #[arg(long, default_value_t = 100)]
    replications: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SystemArgs {
    fn params(&self, doc: Option<&AllocateInput>) -> Result<SystemParams> {
        SystemParams::from_mbps(
            self.capacity_mbps
                .or(doc.map(|d| d.capacity_mbps))
                .unwrap_or(30.0),
            self.beta_max_mbps
                .or(doc.map(|d| d.beta_max_mbps))
                .unwrap_or(2.0),
            self.beta_min_mbps
                .or(doc.map(|d| d.beta_min_mbps))
                .unwrap_or(0.6),
        )
    }

    fn profile(&self, params: &SystemParams) -> Result<LayerProfile> {
        let profile = LayerProfile::from_mbps(self.base_layer_mbps, self.enh_layer_mbps)?;
        profile.check_against_floor(params.min_session_bps())?;
        Ok(profile)
    }
}

fn popularity(dist: DistArg, s: f64) -> Popularity {
    match dist {
        DistArg::Uniform => Popularity::Uniform,
        DistArg::Zipf => Popularity::Zipf { s },
    }
}

fn read_text(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut text)
            .map_err(|e| Error::io(path, e))?;
        return Ok(text);
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_document(path: Option<&Path>) -> Result<Option<AllocateInput>> {
    path.map(|p| AllocateInput::from_json(&read_text(p)?, &p.display().to_string()))
        .transpose()
}

fn census_for(doc: Option<&AllocateInput>, population: &PopulationArgs) -> Result<SessionCensus> {
    if let Some(doc) = doc {
        return doc.census();
    }
    let sessions = population
        .sessions
        .ok_or_else(|| Error::InvalidParams("either --input or --sessions is required".into()))?;
    random_census(
        sessions,
        population.users,
        popularity(population.dist, population.zipf_s),
        population.seed,
    )
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    text
}

fn allocate(args: &AllocateArgs) -> Result<()> {
    let doc = read_document(args.input.as_deref())?;
    let params = args.system.params(doc.as_ref())?;
    let profile = args.system.profile(&params)?;
    let census = census_for(doc.as_ref(), &args.population)?;
    let input = AllocateInput {
        capacity_mbps: to_mbps(params.capacity_bps()),
        beta_max_mbps: to_mbps(params.max_session_bps()),
        beta_min_mbps: to_mbps(params.min_session_bps()),
        sessions: match &doc {
            Some(d) => d.sessions.clone(),
            None => census
                .iter()
                .map(|(id, users)| SessionEntry {
                    id: id.to_string(),
                    users,
                })
                .collect(),
        },
    };
    let output = allocate_document(&input, &profile)?;
    emit(args.out.as_deref(), &to_json(&output))
}

#[derive(Serialize)]
struct SimulateManifest {
    tool: &'static str,
    version: &'static str,
    rng: &'static str,
    capacity_mbps: f64,
    beta_max_mbps: f64,
    beta_min_mbps: f64,
    base_layer_mbps: f64,
    enh_layer_mbps: f64,
    trace: Option<PathBuf>,
    generated_events: Option<usize>,
    switch_only: bool,
    seed: u64,
    snapshots: usize,
    rejected: Vec<String>,
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let doc = read_document(args.input.as_deref())?;
    let params = args.system.params(doc.as_ref())?;
    let profile = args.system.profile(&params)?;
    let census = census_for(doc.as_ref(), &args.population)?;
    let trace = match &args.trace {
        Some(path) => parse_trace(&read_text(path)?, &path.display().to_string())?,
        None => generate_trace(
            &TraceGenConfig {
                event_count: args.events,
                initial: census.clone(),
                mix: if args.switch_only {
                    EventMix::switch_only()
                } else {
                    EventMix::default()
                },
                mean_gap_s: 1.0,
            },
            args.population.seed,
        ),
    };
    let outcome = run_trace(&params, &profile, census, &trace)?;
    let rejected: Vec<String> = outcome
        .rejected
        .iter()
        .map(|r| format!("event {} at t={}: {}", r.index, r.event.time, r.error))
        .collect();
    for line in &rejected {
        eprintln!("rejected {line}");
    }
    emit(args.out.as_deref(), &snapshots_jsonl(&outcome.snapshots))?;
    if let Some(out) = &args.out {
        if args.trace.is_none() {
            let mut trace_path = out.as_os_str().to_owned();
            trace_path.push(".trace.jsonl");
            write_file(Path::new(&trace_path), format_trace(&trace).as_bytes())?;
        }
        let manifest = SimulateManifest {
            tool: "popcast",
            version: env!("CARGO_PKG_VERSION"),
            rng: popcast::harness::census::RNG_ALGORITHM,
            capacity_mbps: to_mbps(params.capacity_bps()),
            beta_max_mbps: to_mbps(params.max_session_bps()),
            beta_min_mbps: to_mbps(params.min_session_bps()),
            base_layer_mbps: args.system.base_layer_mbps,
            enh_layer_mbps: args.system.enh_layer_mbps,
            trace: args.trace.clone(),
            generated_events: args.trace.is_none().then_some(args.events),
            switch_only: args.switch_only,
            seed: args.population.seed,
            snapshots: outcome.snapshots.len(),
            rejected,
        };
        write_file(&manifest_path(out), manifest_json(&manifest).as_bytes())?;
    }
    Ok(())
}

fn parse_range(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::parse("--sessions", format!("expected N or A..B, got {text:?}"));
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    match text.split_once("..") {
        Some((lo, hi)) => {
            let hi = hi.strip_prefix('=').unwrap_or(hi);
            Ok((parse(lo)?, parse(hi)?))
        }
        None => {
            let m = parse(text)?;
            Ok((m, m))
        }
    }
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let params = args.system.params(None)?;
    let profile = args.system.profile(&params)?;
    let (min_sessions, max_sessions) = parse_range(&args.sessions)?;
    let config = ScenarioConfig {
        params,
        min_sessions,
        max_sessions,
        total_users: args.users,
        dist: popularity(args.dist, args.zipf_s),
        replications: args.replications,
        seed: args.seed,
        profile,
    };
    let outcome = run_sweep(&config)?;
    match &args.out {
        Some(out) => emit_sweep(
            &outcome.rows,
            &RunManifest::for_sweep(&config, &outcome.skipped),
            out,
        )?,
        None => emit(None, &sweep_csv(&outcome.rows))?,
    }
    // Rows that fit were still written; the exit status flags the rest.
    if let (Some(&first), Some(&last)) = (outcome.skipped.first(), outcome.skipped.last()) {
        eprintln!("skipped infeasible session counts {first}..={last}");
        return Err(Error::InfeasibleCapacity {
            sessions: first,
            required_bps: params.min_session_bps() * first as f64,
            capacity_bps: params.capacity_bps(),
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Allocate(args) => allocate(args),
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
