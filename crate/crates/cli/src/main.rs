//! `skualloc`: synthesize a catalog, embed it, build the allocation QUBO,
//! solve, audit and ablate.
//!
//! Exit codes: 0 ok, 1 i/o, 2 argument/config, 3 data, 4 kernel, 5 build,
//! 6 solve.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skualloc::data::DataError;
use skualloc::scenario::ScenarioError;
use skualloc::solvers::SolveError;
use thiserror::Error;

use commands::Ctx;
use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Arg(String),
    #[error("data: {0}")]
    Data(String),
    #[error("kernel: {0}")]
    Kernel(String),
    #[error("build: {0}")]
    Build(String),
    #[error("solve: {0}")]
    Solve(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Arg(_) => 2,
            CliError::Data(_) => 3,
            CliError::Kernel(_) => 4,
            CliError::Build(_) => 5,
            CliError::Solve(_) => 6,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Argument(m) => CliError::Arg(m),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Data(e) => e.into(),
            ScenarioError::Kernel(e) => CliError::Kernel(e.to_string()),
            ScenarioError::Build(e) => CliError::Build(e.to_string()),
            ScenarioError::Solve(SolveError::Config(m)) => CliError::Arg(m),
            ScenarioError::Solve(e) => CliError::Solve(e.to_string()),
        }
    }
}

impl From<skualloc::qubo::BuildError> for CliError {
    fn from(e: skualloc::qubo::BuildError) -> Self {
        CliError::Build(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "skualloc",
    version,
    about = "Multi-period SKU allocation via similarity-aware QUBO"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` config file, or any artifact written by this tool.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Override any config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Catalog CSV to ingest instead of synthesizing one.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    skus: Option<usize>,
    /// Size of the seed catalog that synthesis grows from.
    #[arg(long, global = true)]
    base: Option<usize>,
    /// sa, sqa, pso, ga or aco.
    #[arg(long, global = true)]
    solver: Option<String>,
    #[arg(long, global = true)]
    reads: Option<usize>,
    /// quantum or cosine.
    #[arg(long, global = true)]
    similarity: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic catalog CSV.
    Generate,
    /// Engineered features and PCA embedding.
    Features,
    /// Similarity matrix.
    Kernel,
    /// QUBO text file.
    Build,
    /// Solve and write solution.json.
    Solve,
    /// KPI report, utilization and selected-SKU similarity for a solution.
    Audit {
        /// Defaults to `<out-dir>/solution.json`.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Every stage end to end.
    Pipeline,
    /// Weight-ablation summary over repeated seeds.
    Ablate {
        /// Comma-separated variant names, or `all`.
        #[arg(long)]
        variants: Option<String>,
        #[arg(long)]
        repeats: Option<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Features => "features",
            Command::Kernel => "kernel",
            Command::Build => "build",
            Command::Solve => "solve",
            Command::Audit { .. } => "audit",
            Command::Pipeline => "pipeline",
            Command::Ablate { .. } => "ablate",
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        for (k, v) in config::read_settings(path)? {
            cfg.set(&k, &v)?;
        }
    }
    let mut flags: Vec<(&str, String)> = Vec::new();
    if let Some(v) = cli.seed {
        flags.push(("seed", v.to_string()));
    }
    if let Some(v) = &cli.input {
        flags.push(("input", v.display().to_string()));
    }
    if let Some(v) = cli.skus {
        flags.push(("skus", v.to_string()));
    }
    if let Some(v) = cli.base {
        flags.push(("base", v.to_string()));
    }
    if let Some(v) = &cli.solver {
        flags.push(("solver", v.clone()));
    }
    if let Some(v) = cli.reads {
        flags.push(("reads", v.to_string()));
    }
    if let Some(v) = &cli.similarity {
        flags.push(("similarity", v.clone()));
    }
    if let Command::Ablate { variants, repeats } = &cli.command {
        if let Some(v) = variants {
            flags.push(("variants", v.clone()));
        }
        if let Some(v) = repeats {
            flags.push(("repeats", v.to_string()));
        }
    }
    for (k, v) in flags {
        cfg.set(k, &v)?;
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Arg(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = resolve(&cli)?;
    let mut ctx = Ctx::new(cfg, cli.out_dir.clone(), cli.command.name());
    match cli.command {
        Command::Generate => commands::generate(&mut ctx)?,
        Command::Features => commands::features(&mut ctx)?,
        Command::Kernel => commands::kernel(&mut ctx)?,
        Command::Build => commands::build(&mut ctx)?,
        Command::Solve => commands::solve(&mut ctx)?,
        Command::Audit { solution } => commands::audit(&mut ctx, solution)?,
        Command::Pipeline => commands::pipeline(&mut ctx)?,
        Command::Ablate { .. } => commands::ablate(&mut ctx)?,
    }
    Ok(ctx.written().to_vec())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
