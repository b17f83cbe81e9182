mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "taxrank", version, about = "Project topics onto sink categories of a category graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every command that reads a graph.
#[derive(Debug, Args)]
pub struct RunConfig {
    /// Graph file (binary, or TSV when the name ends in .tsv)
    #[arg(long)]
    pub graph: PathBuf,
    /// JSON list of {"label", "category_title"}
    #[arg(long)]
    pub sinks: PathBuf,
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    #[arg(long = "lmax", default_value_t = 6)]
    pub l_max: u32,
    #[arg(long = "lth", default_value_t = 12)]
    pub l_th: u32,
    /// Category titles to cut out of the graph, one per line
    #[arg(long)]
    pub blocklist: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for profile/evaluate/sweep (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a graph file from `page` and `categorylinks` SQL dumps
    Ingest {
        #[arg(long)]
        page: PathBuf,
        #[arg(long)]
        categorylinks: PathBuf,
        /// Output graph (TSV when the name ends in .tsv)
        #[arg(long)]
        out: PathBuf,
        /// Column layout descriptor (JSON)
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Relatedness of one topic to every sink
    Weights {
        #[command(flatten)]
        config: RunConfig,
        /// Topic title (article first, category as fallback)
        topic: String,
    },
    /// Profile a topic map
    Profile {
        #[command(flatten)]
        config: RunConfig,
        topic_map: PathBuf,
    },
    /// Evaluate profiles against a ground-truth set
    Evaluate {
        #[command(flatten)]
        config: RunConfig,
        ground_truth: PathBuf,
    },
    /// Evaluate a ground-truth set over a parameter grid
    Sweep {
        #[command(flatten)]
        config: RunConfig,
        ground_truth: PathBuf,
        #[arg(long)]
        grid: PathBuf,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Ingest {
            page,
            categorylinks,
            out,
            schema,
        } => commands::ingest(&page, &categorylinks, &out, schema.as_deref()),
        Command::Weights { config, topic } => commands::weights(&config, &topic),
        Command::Profile { config, topic_map } => commands::profile(&config, &topic_map),
        Command::Evaluate { config, ground_truth } => commands::evaluate(&config, &ground_truth),
        Command::Sweep {
            config,
            ground_truth,
            grid,
        } => commands::sweep(&config, &ground_truth, &grid),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CliError::CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("taxrank: {e}");
            ExitCode::from(e.code())
        }
    }
}
