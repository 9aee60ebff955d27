use std::process::ExitCode;

use clap::Parser;
use promotion_report::cli::{load_config, report_status, run, Cli, Command};
use promotion_report::collector::capture_range;
use promotion_report::git::Repo;
use tracing_subscriber::EnvFilter;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();

    if let Some(Command::CaptureRange { repo, source, target }) = cli.command {
        return match capture_range(&Repo::open(&repo), &source, &target) {
            Ok(range) => {
                println!("{}", range.revision_range());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        };
    }

    let env = |key: &str| std::env::var(key).ok();
    let config = match load_config(&cli.run, &env, None) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let status = run(&config);
    let (text, code) = report_status(&status);
    print!("{text}");
    ExitCode::from(code as u8)
}
