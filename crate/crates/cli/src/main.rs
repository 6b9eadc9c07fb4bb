use std::process::ExitCode;

use clap::Parser;
use selenc_cli::{Cli, Status, EXIT_ERROR, EXIT_OK, EXIT_PARTIAL};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command.execute() {
        Ok(Status::Complete) => EXIT_OK,
        Ok(Status::Partial) => EXIT_PARTIAL,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            EXIT_ERROR
        }
    };
    ExitCode::from(code as u8)
}
