use std::process::ExitCode;

use clap::Parser;
use gmukf_cli::RunManifest;

fn main() -> ExitCode {
    gmukf_cli::init_logging();
    let manifest = RunManifest::parse();
    match gmukf_cli::run(&manifest) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
