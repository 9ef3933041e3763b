mod args;
mod commands;
mod config;
mod exit;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

const SUBCOMMANDS: [&str; 5] = ["synth", "train", "eval", "score", "report"];

/// `--config` value and subcommand position, found before clap runs so that
/// config keys can satisfy required flags.
fn prescan(argv: &[OsString]) -> (Option<PathBuf>, Option<usize>) {
    let mut config = None;
    let mut sub = None;
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if a == "--" {
            break;
        }
        if a == "--config" {
            config = argv.get(i + 1).map(PathBuf::from);
            i += 2;
            continue;
        }
        if let Some(v) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(v));
        } else if sub.is_none() && SUBCOMMANDS.contains(&a.as_ref()) {
            sub = Some(i);
        }
        i += 1;
    }
    (config, sub)
}

/// Inserts config-file flags right after the subcommand; flags already on
/// the command line are left out, so they take precedence.
fn parse(argv: Vec<OsString>) -> anyhow::Result<Cli> {
    let argv = match prescan(&argv) {
        (Some(path), Some(pos)) => {
            let name = argv[pos].to_string_lossy().into_owned();
            let extra = config::config_args(&path, &name, &argv[pos + 1..])?;
            let mut merged = argv[..=pos].to_vec();
            merged.extend(extra);
            merged.extend_from_slice(&argv[pos + 1..]);
            merged
        }
        _ => argv,
    };
    Ok(Cli::try_parse_from(&argv).unwrap_or_else(|e| e.exit()))
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Score(a) => commands::score(a),
        Command::Report(a) => commands::report(a),
    }
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let cli = match parse(argv) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit::code_of(&e) as u8);
        }
    };
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        }
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .parse_default_env()
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::code_of(&e) as u8)
        }
    }
}
