mod args;
mod error;
mod parse;
mod run;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, ExperimentManifest};
use error::CliError;

fn manifest_from(cli: &Cli) -> Result<ExperimentManifest, CliError> {
    if let Some(path) = &cli.manifest {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        return serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.clone(),
            source,
        });
    }
    let command = cli
        .command
        .clone()
        .ok_or_else(|| CliError::Usage("a subcommand or --manifest is required".into()))?;
    Ok(ExperimentManifest {
        command,
        seed: cli.seed,
        budget: cli.budget,
        output: cli.output.clone(),
    })
}

fn write_file(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let manifest = manifest_from(&cli)?;
    if let Some(path) = &cli.save_manifest {
        let text =
            serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Usage(e.to_string()))?;
        write_file(path, &(text + "\n"))?;
    }
    let text = match cli.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {w} workers: {e}")))?;
            pool.install(|| run::execute(&manifest))?
        }
        None => run::execute(&manifest)?,
    };
    match &manifest.output {
        Some(path) => write_file(path, &text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            if code == 2 {
                eprintln!("hypothesis violated: {e}");
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(code)
        }
    }
}
