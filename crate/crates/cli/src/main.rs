mod commands;

use std::process::ExitCode;

use clap::Parser;
use dwdt::DwdtError;

use commands::Cli;

/// Exit status of a failed command.
#[derive(Debug)]
pub enum Failure {
    Error(DwdtError),
    /// Oracle mismatch or failed gradient check; the report is already printed.
    Mismatch,
}

impl From<DwdtError> for Failure {
    fn from(e: DwdtError) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.into())
    }
}

fn exit_code(e: &DwdtError) -> u8 {
    match e {
        DwdtError::NumericFailure(_)
        | DwdtError::DegeneratePair(..)
        | DwdtError::DegenerateTriangle { .. }
        | DwdtError::AmbiguousConfiguration { .. }
        | DwdtError::EmptyTriangulation(_)
        | DwdtError::UndefinedNormalization(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch) => ExitCode::from(3),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
