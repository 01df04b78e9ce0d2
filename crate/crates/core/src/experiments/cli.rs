//! Command-line interface. Every subcommand emits CSV to stdout or `--out`.
//!
//! Exit codes: 0 on success, 2 for configuration and usage errors, 3 for
//! runtime failures.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::{
    concentration_sweep, concentration_to_csv, grid_to_csv, network_report, report_to_csv,
    run_replications, scenario_from_str, summarize, summary_to_csv, unbalance_grid,
    ExperimentError, GridMode,
};
use crate::graph::{from_edge_list, NodeFeature, SbmSpec};

#[derive(Parser)]
#[command(
    name = "acrds",
    version,
    about = "Referral sampling on networks: simulation, estimation, and spectral diagnostics",
    after_help = "All output is headered CSV with `.` decimals; see each subcommand's --help \
                  for its columns."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a blockmodel graph and print it as an edge list
    Generate(GenerateArgs),
    /// Structural and covariance report for an edge-list network
    Report(ReportArgs),
    /// Spectral-gap-ratio grid over two-block population models
    Grid(GridArgs),
    /// Replicated referral simulations from a scenario config file
    Simulate(SimulateArgs),
    /// Concentration diagnostics across a population-size sweep
    Concentrate(ConcentrateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of blocks
    #[arg(long, default_value_t = 1)]
    blocks: usize,
    /// Nodes per block
    #[arg(long)]
    size: usize,
    /// In-block edge probability
    #[arg(long)]
    in_prob: f64,
    /// Cross-block edge probability
    #[arg(long, default_value_t = 0.0)]
    out_prob: f64,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the edge list here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write each node's block id, one per line
    #[arg(long)]
    assignment_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Edge-list file: two ids per line, `#` comments
    edge_list: PathBuf,
    /// Per-node feature file aligned to sorted external ids; defaults to a
    /// constant feature (both covariance columns then vanish)
    #[arg(long)]
    feature: Option<PathBuf>,
    /// Restrict to the largest connected component first
    #[arg(long)]
    largest_component: bool,
    /// Output path (default stdout). Columns: nodes,edges,clustering,
    /// cov_rds_lag1,cov_ac_lag1,flags
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    /// Block-size ratios (largest over smallest)
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20")]
    ratios: Vec<f64>,
    /// Cross-block probability values
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1,0.25,0.4")]
    eps: Vec<f64>,
    /// Which in-block parameterization: complement (1 - eps), fixed-diag, or both
    #[arg(long, default_value = "both")]
    mode: String,
    /// The fixed in-block probability for fixed-diag cells
    #[arg(long, default_value_t = 0.8)]
    diag: f64,
    /// Output path (default stdout). Columns: mode,ratio,eps,lambda2_rds,
    /// lambda2_ac,gap_ratio
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario config file (key = value lines; see the crate docs)
    #[arg(long)]
    config: PathBuf,
    /// Override the config's base_seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output path for the replication table (default stdout). Columns:
    /// replicate,scheme,fraction,estimator,estimate,n_collected,tree_died
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a per-cell summary here. Columns: scheme,fraction,
    /// estimator,runs,mean,median,q1,q3,iqr,bias
    #[arg(long)]
    summary_out: Option<PathBuf>,
    /// Drop died-tree rows from the summary (the table always keeps them)
    #[arg(long)]
    complete_only: bool,
}

#[derive(Args)]
struct ConcentrateArgs {
    /// Number of equal blocks
    #[arg(long, default_value_t = 2)]
    blocks: usize,
    /// Population sizes to sweep (each must split evenly into blocks)
    #[arg(long, value_delimiter = ',', default_value = "200,400,800")]
    n_list: Vec<usize>,
    /// In-block edge probability
    #[arg(long, default_value_t = 0.3)]
    in_prob: f64,
    /// Cross-block edge probability
    #[arg(long, default_value_t = 0.1)]
    out_prob: f64,
    /// Sampled graphs per population size
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Base RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path (default stdout). Columns: n,seed,f_min,g_min,d_min,
    /// op_distance,eig_deviation
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    /// Bad arguments or config: exit 2.
    Config(String),
    /// Failure while running or writing: exit 3.
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn emit(out: &Option<PathBuf>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, contents)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn read_file(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn run_generate(args: GenerateArgs) -> Result<(), CliError> {
    let spec = SbmSpec::from_in_out(vec![args.size; args.blocks], args.in_prob, args.out_prob)
        .map_err(config_err)?;
    let (graph, assignment) = spec.sample(args.seed);
    let mut edges = String::new();
    for u in 0..graph.node_count() {
        for &v in graph.neighbors(u) {
            if u < v as usize {
                edges.push_str(&format!("{u} {v}\n"));
            }
        }
    }
    emit(&args.out, &edges)?;
    if let Some(path) = &args.assignment_out {
        let blocks: String = assignment.iter().map(|z| format!("{z}\n")).collect();
        emit(&Some(path.clone()), &blocks)?;
    }
    Ok(())
}

fn run_report(args: ReportArgs) -> Result<(), CliError> {
    let text = read_file(&args.edge_list)?;
    let parsed = from_edge_list(&text).map_err(config_err)?;
    // The feature file aligns to the full input graph; project it through
    // the component map when restricting.
    let full = parsed.graph;
    let y_full = match &args.feature {
        Some(path) => {
            let y = super::parse_feature_column(&read_file(path)?).map_err(config_err)?;
            y.check_length(full.node_count()).map_err(config_err)?;
            y
        }
        None => NodeFeature::constant(full.node_count(), 0.0),
    };
    let (graph, y) = if args.largest_component {
        let (component, map) = full.largest_connected_component();
        let projected: Vec<f64> = map.iter().map(|&old| y_full.get(old as usize)).collect();
        (component, NodeFeature::new(projected).map_err(config_err)?)
    } else {
        (full, y_full)
    };
    let report = network_report(&graph, &y);
    emit(&args.out, &report_to_csv(&report))
}

fn run_grid(args: GridArgs) -> Result<(), CliError> {
    let modes: Vec<GridMode> = match args.mode.as_str() {
        "complement" => vec![GridMode::ComplementEps],
        "fixed-diag" => vec![GridMode::FixedDiag(args.diag)],
        "both" => vec![GridMode::ComplementEps, GridMode::FixedDiag(args.diag)],
        other => return Err(CliError::Config(format!("unknown grid mode {other:?}"))),
    };
    let mut rows = Vec::new();
    for mode in modes {
        rows.extend(
            unbalance_grid(&args.ratios, &args.eps, mode).map_err(|e| match e {
                ExperimentError::InvalidScenario(_) => config_err(e),
                other => runtime_err(other),
            })?,
        );
    }
    emit(&args.out, &grid_to_csv(&rows))
}

fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let text = read_file(&args.config)?;
    let base_dir = args
        .config
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let mut cfg = scenario_from_str(&text, &base_dir).map_err(config_err)?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    let outcome = run_replications(&cfg).map_err(runtime_err)?;
    emit(&args.out, &outcome.table.to_csv())?;
    if let Some(path) = &args.summary_out {
        let summary = summarize(&outcome.table, outcome.mu_y, args.complete_only);
        emit(&Some(path.clone()), &summary_to_csv(&summary))?;
    }
    Ok(())
}

fn run_concentrate(args: ConcentrateArgs) -> Result<(), CliError> {
    let rows = concentration_sweep(
        args.blocks,
        &args.n_list,
        args.in_prob,
        args.out_prob,
        args.seeds,
        args.seed,
    )
    .map_err(|e| match e {
        ExperimentError::InvalidScenario(_) | ExperimentError::Graph(_) => config_err(e),
        other => runtime_err(other),
    })?;
    emit(&args.out, &concentration_to_csv(&rows))
}

/// Parses `argv` and runs the chosen subcommand, returning the process exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here with a zero exit code.
            let code = if e.exit_code() == 0 { 0 } else { 2 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate(args) => run_generate(args),
        Command::Report(args) => run_report(args),
        Command::Grid(args) => run_grid(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Concentrate(args) => run_concentrate(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}
