use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use collisional_cli::{execute, Cli, CliError};

fn run(cli: &Cli) -> Result<Option<CliError>, CliError> {
    let cfg = cli.effective_config()?;
    let report = execute(&cli.command, &cfg)?;
    for w in &report.table.metadata.warnings {
        eprintln!("warning: {w}");
    }
    match &cli.out {
        Some(path) => {
            let json = report.table.write(path)?;
            eprintln!("wrote {} and {}", path.display(), json.display());
        }
        None => {
            let csv = report.table.to_csv()?;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(csv.as_bytes())
                .map_err(|source| CliError::Write { path: "<stdout>".into(), source })?;
        }
    }
    Ok(report.verdict)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(verdict)) | Err(verdict) => {
            eprintln!("error: {verdict}");
            ExitCode::from(verdict.exit_code() as u8)
        }
    }
}
