use std::process::ExitCode;

use clap::Parser;
use kde_coreset_cli::cli::{run, Cli};
use kde_coreset_cli::io::OutputError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(e.into()),
        },
        None => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            // configuration problems exit with 2, failed writes with 1
            if e.downcast_ref::<OutputError>().is_some() {
                ExitCode::FAILURE
            } else {
                ExitCode::from(2)
            }
        }
    }
}
