mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use failure::Failure;

#[derive(Parser)]
#[command(
    name = "labforge",
    version,
    about = "Personalized lab exercises: generate, grade, detect"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check generation, exercise, detection, service and roster files.
    Validate {
        /// Files to check; the kind of each is recognised from its keys.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Generate one student's values, write the vars file and manifest, and
    /// register the expected answers with the server.
    Generate {
        /// Student identifier the seed is derived from.
        #[arg(long)]
        id: String,
        /// Generation config (YAML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for vars.yml and manifests.jsonl.
        #[arg(long)]
        out: PathBuf,
        /// Submission service base URL.
        #[arg(long, env = "LABFORGE_SERVER", conflicts_with = "local_only")]
        server: Option<String>,
        /// Skip registration even when a server is configured.
        #[arg(long)]
        local_only: bool,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Run the submission service.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
        #[arg(long)]
        roster: PathBuf,
    },
    /// Analyse an event log for suspicious submissions.
    Detect {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        exercise: PathBuf,
        /// Detection config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Draw students for demonstration sessions.
    Sample {
        /// Plain list (one id per line) or a service roster file.
        #[arg(long)]
        roster: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { paths, format } => commands::validate(&paths, format),
        Command::Generate {
            id,
            config,
            out,
            server,
            local_only,
            format,
        } => {
            let server = if local_only { None } else { server };
            commands::generate(&id, &config, &out, server.as_deref(), format)
        }
        Command::Serve {
            config,
            listen,
            roster,
        } => commands::serve(&config, &listen, &roster),
        Command::Detect {
            log,
            exercise,
            config,
            format,
        } => commands::detect(&log, &exercise, config.as_deref(), format),
        Command::Sample {
            roster,
            k,
            seed,
            format,
        } => commands::sample(&roster, k, seed, format),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            if !matches!(failure, Failure::Reported(_)) {
                eprintln!("labforge: {failure}");
            }
            ExitCode::from(failure.exit_code())
        }
    }
}
