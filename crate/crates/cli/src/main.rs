mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// Exit code for an error, by kind.
fn exit_code(err: &anyhow::Error) -> u8 {
    use slicevine::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_)) => 3,
        Some(Error::Domain(_) | Error::DegenerateVariance(_) | Error::Replication { .. }) => 4,
        Some(Error::HashMismatch { .. }) => 5,
        Some(Error::Parse { .. } | Error::Integrity(_) | Error::Csv(_) | Error::Json(_)) => 6,
        Some(Error::Io(_)) => 7,
        None => 1,
    }
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    use slicevine::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_)) => "config",
        Some(Error::Domain(_)) => "domain",
        Some(Error::DegenerateVariance(_)) => "degenerate_variance",
        Some(Error::Replication { .. }) => "replication",
        Some(Error::HashMismatch { .. }) => "hash_mismatch",
        Some(Error::Parse { .. }) => "parse",
        Some(Error::Integrity(_)) => "integrity",
        Some(Error::Csv(_)) => "csv",
        Some(Error::Json(_)) => "json",
        Some(Error::Io(_)) => "io",
        None => "error",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json_errors = cli.json_errors;
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            if json_errors {
                let body = serde_json::json!({
                    "error": error_kind(&err),
                    "message": format!("{err:#}"),
                    "exit_code": code,
                });
                eprintln!("{body}");
            } else {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(code)
        }
    }
}
