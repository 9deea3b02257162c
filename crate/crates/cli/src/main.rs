mod commands;
mod settings;
mod validate;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use settings::{resolve, Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(String),
    Validation(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Compute(_) => 2,
            CliError::Validation(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Compute(m) => write!(f, "computation failed: {m}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
        }
    }
}

/// Writes through a temporary sibling file and renames it into place, so a
/// failed run never leaves a truncated file behind.
fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

fn emit(artifacts: Vec<commands::Artifact>) -> Result<(), CliError> {
    for a in artifacts {
        match a.path {
            Some(p) => write_atomic(&p, &a.contents)
                .map_err(|e| CliError::Compute(format!("cannot write {}: {e}", p.display())))?,
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(a.contents.as_bytes()).map_err(|e| CliError::Compute(e.to_string()))?;
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let name = match &cli.command {
        Command::Spectrum(_) => "spectrum",
        Command::Rapidities(_) => "rapidities",
        Command::Occupations(_) => "occupations",
        Command::Zak(_) => "zak",
        Command::Disorder(_) => "disorder",
        Command::Validate => "validate",
    };
    let setup = resolve(&cli, name)?;
    let artifacts = match &cli.command {
        Command::Spectrum(a) => commands::spectrum(&setup, a.eigenvectors.clone())?,
        Command::Rapidities(a) => commands::rapidities_cmd(&setup, a.covariance.clone())?,
        Command::Occupations(_) => commands::occupations(&setup)?,
        Command::Zak(_) => commands::zak(&setup)?,
        Command::Disorder(_) => commands::disorder(&setup)?,
        Command::Validate => {
            let checks = validate::run_all();
            let report = validate::report(&checks);
            emit(vec![commands::Artifact { path: setup.output.clone(), contents: report }])?;
            let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
            if !failed.is_empty() {
                return Err(CliError::Validation(failed.join(", ")));
            }
            return Ok(());
        }
    };
    emit(artifacts)
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
            eprintln!("dssh: {e}");
            ExitCode::from(e.code())
        }
    }
}
