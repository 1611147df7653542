use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use observatory::config::RunConfig;
use observatory::export::{export_document, ExportFormat};
use observatory::pipeline::{Pipeline, Stage};

#[derive(Parser)]
#[command(name = "obs", version, about = "Software metadata observatory")]
struct Cli {
    /// Run configuration.
    #[arg(long, global = true, default_value = "obs.toml")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run pipeline stages and print the report.
    Run {
        /// Comma-separated subset of ingest,normalize,enrich,integrate,score,stats.
        #[arg(long, value_delimiter = ',')]
        stages: Option<Vec<Stage>>,
        /// Exit 3 when conflicts remain unresolved.
        #[arg(long)]
        strict: bool,
    },
    /// Escalated-conflict issue documents.
    Issues {
        #[command(subcommand)]
        action: IssuesAction,
    },
    /// Print a merged tool as CFF or maSMP.
    Export {
        #[arg(long)]
        tool: String,
        #[arg(long, default_value = "cff")]
        format: ExportFormat,
    },
    /// Serve the /v1 API.
    Serve,
    /// Check the configuration and exit.
    ValidateConfig,
}

#[derive(Subcommand)]
enum IssuesAction {
    /// Write one issue document per escalated block.
    Export {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Apply every decision file in a directory.
    Apply {
        #[arg(long)]
        dir: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_PIPELINE: u8 = 2;
const EXIT_UNRESOLVED: u8 = 3;

fn fail(code: u8, e: impl std::fmt::Display) -> ExitCode {
    eprintln!("obs: {e}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("OBS_LOG").unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let config = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    match cli.command {
        Command::ValidateConfig => {
            println!("{}: ok", cli.config.display());
            ExitCode::SUCCESS
        }
        Command::Run { stages, strict } => {
            let pipeline = match Pipeline::new(config) {
                Ok(p) => p,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            let stages = stages.unwrap_or_else(|| Stage::ALL.to_vec());
            let report = match pipeline.run(&stages) {
                Ok(r) => r,
                Err(e) => return fail(EXIT_PIPELINE, e),
            };
            print!("{}", report.summary());
            if let Err(e) = report.check() {
                return fail(EXIT_PIPELINE, format!("report arithmetic violated: {e}"));
            }
            if strict && report.unresolved() > 0 {
                return fail(EXIT_UNRESOLVED, format!("{} conflict(s) unresolved", report.unresolved()));
            }
            ExitCode::SUCCESS
        }
        Command::Issues { action } => {
            let pipeline = match Pipeline::new(config) {
                Ok(p) => p,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            let result = match &action {
                IssuesAction::Export { dir } => pipeline.export_issues(dir).map(|n| format!("{n} issue(s) written")),
                IssuesAction::Apply { dir } => pipeline.apply_decisions(dir).map(|n| format!("{n} decision(s) applied")),
            };
            match result {
                Ok(msg) => {
                    println!("{msg}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_PIPELINE, e),
            }
        }
        Command::Export { tool, format } => {
            let pipeline = match Pipeline::new(config) {
                Ok(p) => p,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            let tools = match pipeline.load_merged() {
                Ok(t) => t,
                Err(e) => return fail(EXIT_PIPELINE, e),
            };
            let Some(found) = tools.iter().find(|t| t.tool_id == tool) else {
                return fail(EXIT_PIPELINE, format!("unknown tool `{tool}`"));
            };
            match export_document(found, format) {
                Ok(doc) => {
                    print!("{doc}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_PIPELINE, e),
            }
        }
        Command::Serve => {
            let rt = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(e) => return fail(EXIT_PIPELINE, e),
            };
            match rt.block_on(observatory::api::serve(config)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(EXIT_PIPELINE, e),
            }
        }
    }
}
