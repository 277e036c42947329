//! `profile-sketch`: generate streams, estimate and compute profiles, and run
//! evaluation campaigns.

mod commands;
mod error;
mod memory;
mod report;
mod stream_file;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "profile-sketch", version, about = "Streaming frequency-of-frequencies estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic stream file.
    Generate(GenerateArgs),
    /// Estimate the profile of a stream file in one pass.
    Estimate(EstimateArgs),
    /// Compute the exact profile of a stream file.
    Exact(ExactArgs),
    /// Run a seeded Monte-Carlo campaign.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    #[value(alias = "profile_targeted")]
    Profile,
    Zipf,
    Uniform,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Algo {
    Sketch,
    Dm,
    DmCompressed,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Sketch => "sketch",
            Algo::Dm => "dm",
            Algo::DmCompressed => "dm-compressed",
        }
    }
}

#[derive(Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Target profile as a JSON object, e.g. '{"1": 5, "3": 2}'.
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub support: Option<u64>,
    /// Stream length; checked against the profile for `--kind profile`.
    #[arg(long)]
    pub m: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep profile-targeted streams grouped by element.
    #[arg(long)]
    pub no_shuffle: bool,
    /// Start the file with the `#profile-stream v1` header line.
    #[arg(long)]
    pub header: bool,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct EstimateArgs {
    /// Stream file, or `-` for standard input.
    #[arg(long = "in")]
    pub input: String,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// `D` or `m`.
    #[arg(long, default_value = "D")]
    pub error_type: String,
    #[arg(long)]
    pub tau: Option<usize>,
    /// Override the bucket count.
    #[arg(long)]
    pub buckets: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Algo::Sketch)]
    pub algo: Algo,
    /// Stream length for the dm baselines; without it the file is read twice.
    #[arg(long)]
    pub m_hint: Option<u64>,
    /// Treat each line as an opaque token and hash it to an id.
    #[arg(long)]
    pub hash_tokens: bool,
    #[arg(long)]
    pub json_out: Option<String>,
    /// Print the peak resident set size to standard error.
    #[arg(long)]
    pub report_memory: bool,
}

#[derive(Args)]
pub struct ExactArgs {
    #[arg(long = "in")]
    pub input: String,
    #[arg(long)]
    pub hash_tokens: bool,
    #[arg(long)]
    pub json_out: Option<String>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// JSON stream recipe.
    #[arg(long)]
    pub spec_file: String,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    #[arg(long, default_value = "D")]
    pub error_type: String,
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long, value_enum, default_value_t = Algo::Sketch)]
    pub algo: Algo,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub csv_out: Option<String>,
    #[arg(long)]
    pub json_out: Option<String>,
    /// Write 0 in the wall_ms column so reruns are byte-identical.
    #[arg(long)]
    pub no_wall_time: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Exact(a) => commands::exact(a),
        Command::Evaluate(a) => commands::evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("profile-sketch: {e}");
            e.exit_code()
        }
    }
}
