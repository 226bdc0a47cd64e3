//! The `ruptura` command-line tool.
//!
//! Exit codes: 0 on success, 1 on domain errors (bad data, unestimable
//! regions), 2 on usage errors (unknown flags, invalid hyperparameters).

pub mod args;
pub mod commands;
pub mod manifest;

use std::fmt;

use clap::Parser;

/// Errors split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid invocation: exit 2.
    Usage(String),
    /// Valid invocation that failed on the data: exit 1.
    Domain(String),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> CliError {
        CliError::Usage(message.into())
    }

    pub fn domain(message: impl Into<String>) -> CliError {
        CliError::Domain(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Resolve the seed: flag, then RUPTURA_SEED, then 42.
pub fn resolve_seed(flag: Option<u64>) -> u64 {
    if let Some(seed) = flag {
        return seed;
    }
    if let Ok(value) = std::env::var("RUPTURA_SEED") {
        if let Ok(seed) = value.parse() {
            return seed;
        }
        log::warn!("ignoring unparsable RUPTURA_SEED value `{value}`");
    }
    42
}

fn dispatch(cli: args::Cli) -> Result<(), CliError> {
    match cli.command {
        args::Command::Ingest(a) => commands::ingest::run(a),
        args::Command::Estimate(a) => commands::estimate::run(a),
        args::Command::Placebo(a) => commands::placebo::run(a),
        args::Command::Features(a) => commands::features::run(a),
        args::Command::Train(a) => commands::train::run(a),
        args::Command::Evaluate(a) => commands::evaluate::run(a),
        args::Command::Did(a) => commands::did::run(a),
        args::Command::Synth(a) => commands::synth::run(a),
        args::Command::Pipeline(a) => commands::pipeline::run(a),
    }
}

/// Parse argv and run; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = args::Cli::parse();

    #[cfg(feature = "parallel")]
    let result = match cli.threads {
        Some(threads) if threads >= 1 => {
            match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                Ok(pool) => pool.install(|| dispatch(cli)),
                Err(e) => Err(CliError::domain(format!("thread pool: {e}"))),
            }
        }
        Some(_) => Err(CliError::usage("--threads must be >= 1")),
        None => dispatch(cli),
    };
    #[cfg(not(feature = "parallel"))]
    let result = {
        if let Some(threads) = cli.threads {
            if threads > 1 {
                log::info!("built without the `parallel` feature; --threads {threads} runs sequentially");
            }
        }
        dispatch(cli)
    };

    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
