mod cli;
mod commands;
mod config_file;
mod manifest;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use cli::{Cli, Command};
use commands::UsageError;
use manifest::RunManifest;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

fn run(cli: &Cli) -> anyhow::Result<()> {
    let name = cli.command.name();
    macro_rules! dispatch {
        ($($variant:ident => $f:path),* $(,)?) => {
            match &cli.command {
                $(Command::$variant(args) => {
                    let mut m = RunManifest::new(name, args)?;
                    if let Some(cfg) = &cli.config {
                        m.input(cfg)?;
                    }
                    $f(args, &mut m)?;
                    m
                })*
            }
        };
    }
    let manifest = dispatch!(
        Ingest => commands::ingest,
        Split => commands::split,
        TrainBpe => commands::train_bpe,
        Baseline => commands::baseline,
        Evaluate => commands::evaluate,
        Novelty => commands::novelty,
        Corrupt => commands::corrupt_cmd,
        TrainPgn => commands::train_pgn,
        Decode => commands::decode,
        GradCheck => commands::grad_check_cmd,
        HumevalExport => commands::humeval_export,
        HumevalAggregate => commands::humeval_aggregate,
        Report => commands::report,
    );
    manifest.emit(cli.run_manifest.as_deref())
}

fn main() -> ExitCode {
    let args: Vec<OsString> = std::env::args_os().collect();
    let args = match config_file::apply(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_DATA)
            }
        }
    }
}
