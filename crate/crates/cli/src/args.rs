use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dflow_core::testbed::{Behavior, Mode, Pattern};
use tracing_subscriber::filter::LevelFilter;

#[derive(Debug, Parser)]
#[command(
    name = "flow",
    version,
    about = "Compile, inspect, run and benchmark dataflow workflows"
)]
pub struct Cli {
    /// Resolution table mapping document URLs to local files.
    #[arg(long, global = true)]
    pub catalogs: Option<PathBuf>,
    /// One of off, error, warn, info, debug, trace.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: LevelFilter,
    /// Machine-readable output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, resolve and type-check a workflow.
    Check(SpecArg),
    /// Print the dataflow graph.
    Graph(GraphArgs),
    /// Execute a workflow and print its outputs as JSON.
    Run(RunArgs),
    /// Split a workflow into per-site fragment files.
    Partition(PartitionArgs),
    /// Run an orchestration service.
    Serve(ServeArgs),
    /// Run synthetic test services.
    Testsvc(TestsvcArgs),
    /// Run the centralized-vs-decentralized experiments on a virtual clock.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SpecArg {
    /// Workflow source file.
    pub spec: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    Dot,
    Json,
    /// Invocations grouped by parallel level.
    Levels,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    pub spec: PathBuf,
    #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
    pub format: GraphFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RunMode {
    Local,
    Centralized,
    Decentralized,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub spec: PathBuf,
    /// Workflow input as `name=value`, or `name=@file` to read the value from a file.
    #[arg(short = 'i', long = "input")]
    pub inputs: Vec<String>,
    #[arg(long, value_enum, default_value_t = RunMode::Local)]
    pub mode: RunMode,
    /// Placement file; required for decentralized runs.
    #[arg(long)]
    pub placement: Option<PathBuf>,
    /// Answer invocations with the deterministic mock (local mode).
    #[arg(long)]
    pub mock: bool,
    /// Concurrent invocations in local mode.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Root orchestrator URL. Defaults to the placement's root site.
    #[arg(long)]
    pub orchestrator: Option<String>,
    #[arg(long, default_value_t = 300)]
    pub timeout_secs: u64,
    /// Reach a catalog endpoint at another URL, as `endpoint=url` (local mode).
    #[arg(long = "service-url")]
    pub service_urls: Vec<String>,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    pub spec: PathBuf,
    #[arg(long)]
    pub placement: PathBuf,
    /// Directory receiving one `<site>.json` per fragment.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Site id of this orchestrator.
    #[arg(long)]
    pub site: String,
    #[arg(long, default_value = "127.0.0.1:7100")]
    pub listen: String,
    /// URL peers use to reach this orchestrator. Defaults to `http://<listen>`.
    #[arg(long)]
    pub url: Option<String>,
    /// Concurrent service invocations.
    #[arg(long, default_value_t = 64)]
    pub pool: usize,
    /// How long a token for an unknown run waits for its fragment.
    #[arg(long, default_value_t = 10_000)]
    pub grace_ms: u64,
    /// Send every token twice.
    #[arg(long)]
    pub duplicate_tokens: bool,
    /// Answer invocations with the deterministic mock built from `--catalogs`.
    #[arg(long)]
    pub mock: bool,
    /// Network model file; messages are delayed accordingly.
    #[arg(long)]
    pub net: Option<PathBuf>,
    /// Reach a catalog endpoint at another URL, as `endpoint=url`.
    #[arg(long = "service-url")]
    pub service_urls: Vec<String>,
    /// Site of a service endpoint for `--net`, as `endpoint=site`.
    #[arg(long = "service-site")]
    pub service_sites: Vec<String>,
    #[arg(long, default_value_t = 60)]
    pub invoke_timeout_secs: u64,
}

#[derive(Debug, Args)]
pub struct TestsvcArgs {
    #[arg(long)]
    pub behavior: Option<Behavior>,
    #[arg(long, default_value_t = 5.0)]
    pub delay_ms: f64,
    #[arg(long, default_value = "127.0.0.1:7300")]
    pub listen: String,
    /// JSON list of services, each with name, behavior, compute_delay_ms and listen.
    #[arg(long, conflicts_with = "behavior")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFmt {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Pattern to run; all three when omitted.
    #[arg(long)]
    pub pattern: Option<Pattern>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "centralized,decentralized"
    )]
    pub modes: Vec<Mode>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub input_bytes: Option<usize>,
    /// Inter-site bandwidth in bytes per second.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub latency_ms: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Experiment parameters file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFmt::Json)]
    pub format: ReportFmt,
    /// Report file; standard output when omitted.
    #[arg(short = 'o', long = "out")]
    pub out: Option<PathBuf>,
}
