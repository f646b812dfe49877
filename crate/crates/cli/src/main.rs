use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use qkdsim_cli::{execute, Cli, CliError, Command};

/// Resolves an output path against $QKDSIM_OUT_DIR when it is relative.
fn resolve(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var("QKDSIM_OUT_DIR") {
            return PathBuf::from(dir).join(path);
        }
    }
    path.to_path_buf()
}

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    let target = resolve(path);
    if let Some(parent) = target.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(&target, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", target.display())))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let outputs = execute(cli)?;
    match &cli.out {
        Some(path) => write_output(path, &outputs.primary)?,
        None => {
            print!("{}", outputs.primary);
            std::io::stdout()
                .flush()
                .map_err(|e| CliError::Runtime(format!("stdout write failed: {e}")))?;
        }
    }
    if let Some(rendered) = &outputs.transcript {
        let Command::Run(args) = &cli.command else {
            unreachable!("only run produces transcripts");
        };
        let path = args.transcript.as_ref().expect("transcript path present");
        write_output(path, rendered)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap itself exits with code 2 on unknown flags or malformed values
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
