//! Pipeline stages behind the `qrng` binary. Stages talk only through files:
//! `simulate` writes trials, `score` and `certify` read them or a counts
//! table, `extract` turns trials plus a seed file into output bits.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::path::PathBuf;

use clap::{Arg, ArgMatches, Command};

pub use commands::{run, Outcome};
pub use config::PipelineConfig;
pub use error::{exit, CliError};
pub use report::Report;

pub fn cli() -> Command {
    let mut cmd = Command::new("qrng")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Device-independent randomness: simulate, score, certify and extract")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .global(true)
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("pipeline config file (key = value lines)"),
        );
    for (key, help) in config::KEYS {
        cmd = cmd.arg(Arg::new(*key).long(*key).global(true).value_name("VALUE").allow_negative_numbers(true).help(*help));
    }
    cmd.subcommands(commands::SUBCOMMANDS.iter().map(|(name, about)| Command::new(*name).about(*about)))
}

/// Config file first, then flags.
pub fn config_from_matches(m: &ArgMatches) -> Result<PipelineConfig, CliError> {
    let mut config = match m.get_one::<PathBuf>("config") {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    for (key, _) in config::KEYS {
        if let Some(value) = m.get_one::<String>(key) {
            config.set(key, value)?;
        }
    }
    Ok(config)
}
