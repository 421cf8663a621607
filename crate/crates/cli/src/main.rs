//! `semnorm` command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semnorm::detect::DEFAULT_MIN_FREQ;
use semnorm::{Direction, Format, LogBase};

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "semnorm", version, about = "Detect semantic differences between two corpora from mean word-vector norms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-word-type counts and mean norms of one stream.
    Stats {
        #[arg(long)]
        source: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Rank word types shared by two corpora by coverage.
    Detect {
        #[command(flatten)]
        corpora: Corpora,
        #[arg(long, default_value_t = DEFAULT_MIN_FREQ)]
        min_freq: u64,
        /// File with one word type per line to leave out of the ranking.
        #[arg(long)]
        exclude: Option<PathBuf>,
        #[arg(long, default_value = "e", value_parser = parse_log_base)]
        log_base: LogBase,
        /// Also write a full-precision JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Rank the instances of one word by representativeness.
    Instances {
        #[command(flatten)]
        corpora: Corpora,
        #[arg(long)]
        word: String,
        #[arg(long, default_value = "source", value_parser = parse_direction)]
        direction: Direction,
        /// Number of instances to report; 0 reports all.
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        #[arg(long, default_value_t = DEFAULT_MIN_FREQ)]
        min_freq: u64,
        /// Cut displayed sentences to this many characters; 0 disables.
        #[arg(long, default_value_t = 0)]
        width: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Average difference of consecutive mean norms by occurrence count.
    Stability {
        #[arg(long)]
        source: PathBuf,
        #[arg(long, default_value_t = 50)]
        max_n: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Write a vMF-sampled corpus pair with a ground-truth sidecar.
    Simulate {
        /// Output prefix: writes PREFIX.source.*, PREFIX.target.* and PREFIX.truth.tsv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "binary", value_parser = parse_format)]
        format: Format,
        #[arg(long, default_value_t = 50)]
        types: usize,
        #[arg(long, default_value_t = 300)]
        instances: usize,
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 10.0)]
        kappa_min: f64,
        #[arg(long, default_value_t = 300.0)]
        kappa_max: f64,
    },
}

#[derive(Args, Debug)]
struct Corpora {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
}

#[derive(Args, Debug)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_log_base(s: &str) -> Result<LogBase, String> {
    s.parse().map_err(|e: semnorm::Error| e.to_string())
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    s.parse().map_err(|e: semnorm::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: semnorm::Error| e.to_string())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("SEMNORM_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("SEMNORM_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Stats { source, output } => commands::stats(&source, output.out.as_deref()),
        Command::Detect {
            corpora,
            min_freq,
            exclude,
            log_base,
            json,
            output,
        } => commands::detect(
            &corpora.source,
            &corpora.target,
            min_freq,
            exclude.as_deref(),
            log_base,
            json.as_deref(),
            output.out.as_deref(),
        ),
        Command::Instances {
            corpora,
            word,
            direction,
            top_k,
            min_freq,
            width,
            output,
        } => commands::instances(
            &corpora.source,
            &corpora.target,
            &word,
            semnorm::InstanceQuery {
                direction,
                top_k,
                min_freq,
            },
            width,
            output.out.as_deref(),
        ),
        Command::Stability { source, max_n, output } => {
            commands::stability(&source, max_n, output.out.as_deref())
        }
        Command::Simulate {
            out,
            seed,
            format,
            types,
            instances,
            dim,
            kappa_min,
            kappa_max,
        } => commands::simulate(
            &out,
            format,
            &semnorm::simulate::SimulationConfig {
                dim,
                word_types: types,
                instances_per_type: instances,
                kappa_min,
                kappa_max,
                seed,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("semnorm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
