//! The `prodspace` binary. Commands form a pipeline over a shared cache
//! directory: `ingest` fills the export cache, `metrics` derives the matrix
//! family, and `graph`, `views`, `integrate`, `report` produce outputs under
//! `--out` with a manifest. Exit codes: 0 success, 2 usage or configuration
//! error, 3 missing prerequisite cache, 4 data validation failure, 1
//! anything else.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{graph, ingest, integrate, metrics, report, views, Ctx};
use config::FileConfig;

#[derive(Debug, Parser)]
#[command(name = "prodspace", version, about = "Export-basket analytics over the product space")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Data directory holding the cache (overrides PS_DATA_DIR and the
    /// config file).
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse raw trade files into the per-year export cache.
    Ingest(ingest::IngestArgs),
    /// Derive the cached matrices: RCA, M, proximity, density,
    /// sophistication.
    Metrics(metrics::MetricsArgs),
    /// Threshold the proximity matrix into the product space and export it.
    Graph(graph::GraphArgs),
    /// Country tables, node annotations, and the opportunity scatter.
    #[command(subcommand)]
    Views(views::ViewsCmd),
    /// Combine countries into one exporter and rank the density gains.
    Integrate(integrate::IntegrateArgs),
    /// Bundle graph, views, and scenario outputs for one country.
    Report(report::ReportArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let env_dir = std::env::var_os("PS_DATA_DIR").map(PathBuf::from);
    let cfg = config::resolve(&file, env_dir, cli.data_dir.clone())?;
    let ctx = Ctx { cfg, file };
    match &cli.command {
        Command::Ingest(args) => ingest::run(&ctx, args),
        Command::Metrics(args) => metrics::run(&ctx, args),
        Command::Graph(args) => graph::run(&ctx, args),
        Command::Views(cmd) => views::run(&ctx, cmd),
        Command::Integrate(args) => integrate::run(&ctx, args),
        Command::Report(args) => report::run(&ctx, args),
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    use prodspace::cache::CacheError;
    use prodspace::integration::IntegrationError;
    use prodspace::metrics::MetricsError;
    use prodspace::product_space::GraphError;
    use prodspace::trade_data::TradeDataError;
    use prodspace::views::ViewsError;

    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CacheError>() {
            return match e {
                CacheError::Missing { .. } => 3,
                CacheError::ChecksumMismatch { .. }
                | CacheError::Malformed { .. }
                | CacheError::Csv(_)
                | CacheError::Json(_) => 4,
                CacheError::Locked { .. } | CacheError::Io(_) => 1,
            };
        }
        if let Some(e) = cause.downcast_ref::<TradeDataError>() {
            return match e {
                TradeDataError::Io(_) => 1,
                _ => 4,
            };
        }
        if cause.downcast_ref::<MetricsError>().is_some() {
            return 4;
        }
        if let Some(e) = cause.downcast_ref::<GraphError>() {
            return match e {
                GraphError::Io(_) => 1,
                _ => 4,
            };
        }
        if let Some(e) = cause.downcast_ref::<IntegrationError>() {
            return match e {
                IntegrationError::Io(_) => 1,
                _ => 4,
            };
        }
        if let Some(e) = cause.downcast_ref::<ViewsError>() {
            return match e {
                ViewsError::Io(_) => 1,
                _ => 4,
            };
        }
        if cause.downcast_ref::<config::ConfigError>().is_some() {
            return 2;
        }
    }
    1
}
