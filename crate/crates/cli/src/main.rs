//! `convflow`: lint scenarios, talk to the engine on a console, run persona
//! batches, analyze survey tables and serve the HTTP API.

mod analyze;
mod lint;
mod run;
mod simulate;

use std::fmt;
use std::hash::{BuildHasher, RandomState};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use convflow::engine::SelectionPolicy;
use convflow::places::{PlacesClient, ProviderConfig};
use convflow::scenario::{parse_scenario, Diagnostic, ScenarioDoc, Severity};
use convflow_service::{AppState, ScenarioRegistry, ServiceConfig, DEFAULT_TTL, DEMO_SPEAK_DELAY};

#[derive(Parser)]
#[command(name = "convflow", version, about = "Rule-based conversation flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file; diagnostics go to standard error.
    Lint {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Hold one session on the console, reading answers from standard input.
    Run(run::RunArgs),
    /// Run a batch of sessions answered by scripted personas.
    Simulate(simulate::SimulateArgs),
    /// Summarize survey and breakdown tables.
    Analyze(analyze::AnalyzeArgs),
    /// Serve the REST and WebSocket API.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Policy {
    Uniform,
    Weighted,
}

impl From<Policy> for SelectionPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Uniform => SelectionPolicy::Uniform,
            Policy::Weighted => SelectionPolicy::Weighted,
        }
    }
}

/// Options shared by `run` and `simulate`.
#[derive(Args)]
pub struct SessionArgs {
    /// Scenario file.
    pub path: PathBuf,
    /// The two spots, as `a,b`.
    #[arg(long, value_delimiter = ',', num_args = 1, required = true)]
    pub spots: Vec<String>,
    /// Omit to have one generated and printed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Recommend this spot instead of scoring the pair.
    #[arg(long)]
    pub choice: Option<String>,
    #[arg(long, value_enum, default_value_t = Policy::Uniform)]
    pub policy: Policy,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

impl SessionArgs {
    pub fn pair(&self) -> Result<[String; 2], Failure> {
        match self.spots.as_slice() {
            [a, b] => Ok([a.clone(), b.clone()]),
            _ => Err(Failure::usage("--spots takes exactly two ids, e.g. --spots harbor_land,city_museum")),
        }
    }
}

#[derive(Args)]
struct ServeArgs {
    /// Directory of `.flow` files; ids are file stems.
    #[arg(long, default_value = "scenarios")]
    scenarios: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Base for server-chosen session seeds.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_TTL.as_secs())]
    ttl_secs: u64,
    /// Where session transcripts and reports are written.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Pause after each robot utterance, as in the counter demo.
    #[arg(long)]
    speak_delay: bool,
    /// Resolve spot tags from a fixture file.
    #[arg(long, conflicts_with = "places_endpoint")]
    places_fixture: Option<PathBuf>,
    /// Resolve spot tags from a live provider; the key is read from the
    /// environment.
    #[arg(long)]
    places_endpoint: Option<String>,
}

/// A command failure with its exit status: 1 for domain errors, 2 for I/O
/// and unusable input.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn domain(message: impl fmt::Display) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }

    pub fn usage(message: impl fmt::Display) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Failure::usage(format!("{}: {err}", path.display()))
    }
}

pub type CmdResult = Result<(), Failure>;

pub fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

pub fn write_file(path: &Path, contents: &str) -> CmdResult {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Failure::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

pub fn format_diagnostic(path: &Path, d: &Diagnostic) -> String {
    let severity = match d.severity {
        Severity::Error => "error",
        Severity::Warning => "warning",
    };
    let at = d.pos.map(|p| format!(":{p}")).unwrap_or_default();
    format!("{}{at}: {severity} {}: {}", path.display(), d.code, d.message)
}

/// Parse a scenario, printing diagnostics on failure. `invalid` is the exit
/// status for a document that does not parse.
pub fn load_scenario(path: &Path, invalid: u8) -> Result<ScenarioDoc, Failure> {
    let src = read_file(path)?;
    parse_scenario(&src).map_err(|diags| {
        for d in &diags {
            eprintln!("{}", format_diagnostic(path, d));
        }
        Failure {
            code: invalid,
            message: format!("{} is not a valid scenario", path.display()),
        }
    })
}

pub fn scenario_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn pick_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| RandomState::new().hash_one(std::time::SystemTime::now()))
}

fn serve(args: ServeArgs) -> CmdResult {
    let registry = ScenarioRegistry::load_dir(&args.scenarios).map_err(Failure::usage)?;
    if registry.is_empty() {
        return Err(Failure::usage(format!("no scenarios in {}", args.scenarios.display())));
    }
    let seed = pick_seed(args.seed);
    let mut cfg = ServiceConfig::new(registry);
    cfg.base_seed = Some(seed);
    cfg.session_ttl = Duration::from_secs(args.ttl_secs);
    cfg.data_dir = args.data_dir;
    cfg.speak_delay = args.speak_delay.then_some(DEMO_SPEAK_DELAY);
    let provider = match (args.places_fixture, args.places_endpoint) {
        (Some(path), _) => Some(ProviderConfig::fixture(path)),
        (None, Some(endpoint)) => Some(ProviderConfig::live_from_env(endpoint, 3600).map_err(Failure::usage)?),
        (None, None) => None,
    };
    if let Some(provider) = provider {
        cfg.places = Some(Arc::new(PlacesClient::new(provider).map_err(Failure::usage)?));
    }
    println!("seed: {seed}");
    println!("listening on http://{}", args.addr);
    let rt = tokio::runtime::Runtime::new().map_err(Failure::usage)?;
    rt.block_on(convflow_service::serve(args.addr, AppState::new(cfg)))
        .map_err(|e| Failure::usage(format!("{}: {e}", args.addr)))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Lint { path, format } => lint::cmd_lint(&path, format),
        Command::Run(args) => run::cmd_run(args),
        Command::Simulate(args) => simulate::cmd_simulate(args),
        Command::Analyze(args) => analyze::cmd_analyze(args),
        Command::Serve(args) => serve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("convflow: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
