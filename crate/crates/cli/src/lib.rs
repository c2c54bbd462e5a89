//! The `prefnav` command line.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use prefnav_core::experiments::{
    ranking, run_episode, sweep, time_benchmark, write_csv, EpisodeConfig, ExperimentError, Method,
    ProblemInstance, SweepConfig, SWEEP_COLUMNS, TIMING_COLUMNS,
};
use prefnav_core::worldgraph::{load_bundled, load_map, World, BUNDLED_MAPS};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "prefnav",
    version,
    about = "Navigation to an unknown goal under human path preferences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one episode and print its result as JSON.
    Run(RunArgs),
    /// Success rates over methods and input intervals, as CSV.
    Sweep(SweepArgs),
    /// First-decision solve and belief-update times, as CSV.
    Bench(BenchArgs),
    /// Start the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Map file, or the name of a bundled map.
    #[arg(long)]
    pub map: String,
    #[arg(long)]
    pub method: Method,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub delta_t: Option<u32>,
    #[arg(long)]
    pub t_max: Option<u32>,
    #[arg(long)]
    pub gamma_h: Option<f64>,
    /// POMCP simulations per decision.
    #[arg(long)]
    pub iterations: Option<u32>,
    /// JSON file with an `EpisodeConfig`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Add wall-clock timings to the output. They vary between runs.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON sweep configuration; map entries are files or bundled names.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory of map files; every `*.json` in it is timed.
    #[arg(long)]
    pub maps: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub runs: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated subset of methods.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Extra map files to serve next to the bundled ones.
    #[arg(long)]
    pub maps: Option<PathBuf>,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Input(String),
    /// Exit code 3.
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Runtime(m) => write!(f, "runtime failure: {m}"),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Csv(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn input<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Input(format!("{context}: {e}"))
}

fn runtime<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{context}: {e}"))
}

/// Loads a map file, falling back to a bundled map of that name. The map
/// is named after the file stem.
pub fn resolve_map(spec: &str) -> Result<World, CliError> {
    let path = Path::new(spec);
    if path.is_file() {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CliError::Input(format!("bad map path {spec:?}")))?;
        let bytes = fs::read(path).map_err(input(spec))?;
        return load_map(name, &bytes).map_err(input(spec));
    }
    if BUNDLED_MAPS.iter().any(|(n, _)| *n == spec) {
        return load_bundled(spec).map_err(input(spec));
    }
    Err(CliError::Input(format!(
        "{spec:?} is neither a map file nor a bundled map"
    )))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let ctx = path.display().to_string();
    let text = fs::read_to_string(path).map_err(input(&ctx))?;
    serde_json::from_str(&text).map_err(input(&ctx))
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(runtime(&path.display().to_string()))
}

pub fn run(args: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let world = resolve_map(&args.map)?;
    let mut config: EpisodeConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => EpisodeConfig::default(),
    };
    if let Some(n) = args.iterations {
        config.planner.iterations = n;
    }
    let mut instance = ProblemInstance::from_world(&world, args.seed);
    if let Some(d) = args.delta_t {
        instance.delta_t = d;
    }
    if let Some(t) = args.t_max {
        instance.t_max = t;
    }
    if let Some(g) = args.gamma_h {
        instance.gamma_h = g;
    }
    let result = run_episode(&world, &instance, args.method, &config)?;
    let mut value = serde_json::to_value(&result).map_err(runtime("serialize"))?;
    if args.timings {
        value["timing"] = serde_json::to_value(&result.timing).map_err(runtime("serialize"))?;
    }
    let text = serde_json::to_string_pretty(&value).map_err(runtime("serialize"))?;
    writeln!(out, "{text}").map_err(runtime("stdout"))?;
    match result.failure {
        Some(f) => Err(CliError::Runtime(f)),
        None => Ok(()),
    }
}

pub fn run_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut config: SweepConfig = read_json(&args.config)?;
    let mut worlds = Vec::new();
    for spec in config.maps.iter_mut() {
        let w = resolve_map(spec)?;
        *spec = w.name.clone();
        worlds.push(w);
    }
    let rows = sweep(&config, &worlds)?;
    let mut csv = Vec::new();
    write_csv(&SWEEP_COLUMNS, &rows, &mut csv)?;
    write_out(&args.out, &csv)?;
    for line in ranking(&rows) {
        writeln!(out, "{line}").map_err(runtime("stdout"))?;
    }
    Ok(())
}

/// Every `*.json` file in `dir`, in file-name order.
pub fn load_map_dir(dir: &Path) -> Result<Vec<World>, CliError> {
    let ctx = dir.display().to_string();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(input(&ctx))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Input(format!("no map files in {ctx}")));
    }
    paths
        .iter()
        .map(|p| resolve_map(&p.to_string_lossy()))
        .collect()
}

pub fn run_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let worlds = load_map_dir(&args.maps)?;
    let methods = args.methods.clone().unwrap_or_else(|| Method::ALL.to_vec());
    let rows = time_benchmark(
        &worlds,
        &methods,
        args.runs,
        args.seed,
        &EpisodeConfig::default(),
    )?;
    let mut csv = Vec::new();
    write_csv(&TIMING_COLUMNS, &rows, &mut csv)?;
    write_out(&args.out, &csv)?;
    for r in &rows {
        writeln!(
            out,
            "{} ({} polytopes) {}: update {:.3} ± {:.3} ms, solve {:.3} ± {:.3} ms",
            r.map,
            r.polytopes,
            r.method,
            r.update_ms_mean,
            r.update_ms_ci95,
            r.solve_ms_mean,
            r.solve_ms_ci95
        )
        .map_err(runtime("stdout"))?;
    }
    Ok(())
}

pub fn run_serve(args: &ServeArgs) -> Result<(), CliError> {
    let mut worlds: Vec<World> = BUNDLED_MAPS
        .iter()
        .map(|(n, _)| load_bundled(n))
        .collect::<Result<_, _>>()
        .map_err(runtime("bundled maps"))?;
    if let Some(dir) = &args.maps {
        for w in load_map_dir(dir)? {
            if worlds.iter().any(|b| b.name == w.name) {
                return Err(CliError::Input(format!(
                    "map {:?} is already bundled",
                    w.name
                )));
            }
            worlds.push(w);
        }
    }
    let manager = Arc::new(prefnav_service::SessionManager::new(worlds));
    let rt = tokio::runtime::Runtime::new().map_err(runtime("tokio"))?;
    rt.block_on(async {
        let addr = format!("{}:{}", args.host, args.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(input(&addr))?;
        log::info!("listening on http://{addr}");
        eprintln!("listening on http://{addr}");
        prefnav_service::serve(manager, listener)
            .await
            .map_err(runtime("server"))
    })
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Run(a) => run(a, &mut out),
        Command::Sweep(a) => run_sweep(a, &mut out),
        Command::Bench(a) => run_bench(a, &mut out),
        Command::Serve(a) => run_serve(a),
    }
}

/// Parses arguments, runs the command and maps the outcome to an exit
/// code. Usage errors exit with 2 through clap.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::parse_from(args);
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("prefnav: {e}");
            ExitCode::from(e.code())
        }
    }
}
