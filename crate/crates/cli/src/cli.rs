//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::error::{exit, CliError};
use crate::manifest::ManifestLayer;

#[derive(Debug, Parser)]
#[command(name = "callmoney", version, about = "Call money market simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one path and write every recorded grid point.
    Simulate,
    /// Run a Monte Carlo ensemble and write moment series and terminal values.
    Ensemble,
    /// Zero-rate hitting probabilities: Doob majorant vs Monte Carlo.
    Table1,
    /// Write the data behind one of the figures.
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=7))]
        n: u8,
    },
    /// Check the theoretical claims on a verification ensemble.
    Verify,
}

#[derive(Debug, Args)]
struct Opts {
    /// JSON manifest; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    paths: Option<u64>,
    #[arg(long, global = true)]
    steps: Option<u64>,
    /// Horizon in years.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Record every this many steps.
    #[arg(long, global = true)]
    record_every: Option<u64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    nu: Option<f64>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long, global = true)]
    q0: Option<f64>,
    #[arg(long, global = true)]
    v0: Option<f64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Drive the index with a shock independent of the gambler's (negative control).
    #[arg(long, global = true)]
    decouple_shocks: bool,
    /// Accept parameters with a non-positive choke price.
    #[arg(long, global = true)]
    permissive: bool,
}

impl Opts {
    fn layer(&self) -> Result<ManifestLayer, CliError> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                ManifestLayer::from_document(&text)?
            }
            None => ManifestLayer::default(),
        };
        let flags = ManifestLayer {
            nu: self.nu,
            sigma: self.sigma,
            q0: self.q0,
            v0: self.v0,
            horizon: self.horizon,
            steps: self.steps,
            record_every: self.record_every,
            paths: self.paths,
            seed: self.seed,
            permissive: self.permissive.then_some(true),
            decouple_shocks: self.decouple_shocks.then_some(true),
            ..Default::default()
        };
        Ok(file.overlay(&flags))
    }
}

/// Parses `args` (including the program name), runs the command, and
/// returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    exit::OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    exit::USAGE
                }
            };
        }
    };
    match dispatch(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let user = cli.opts.layer()?;
    let out = &cli.opts.out;
    let files = match &cli.command {
        Command::Simulate => {
            commands::simulate(&commands::simulate_defaults().overlay(&user).build()?, out)?
        }
        Command::Ensemble => {
            commands::ensemble(&commands::ensemble_defaults().overlay(&user).build()?, out)?
        }
        Command::Table1 => {
            let m = commands::table1_defaults().overlay(&user).build()?;
            let files = commands::table1(&m, out)?;
            print_file(stdout, &files[0])?;
            files
        }
        Command::Figure { n } => commands::figure(*n, &user, out)?,
        Command::Verify => {
            let m = commands::verify_defaults().overlay(&user).build()?;
            let (reports, file) = commands::verify(&m, out)?;
            let mut failed = 0;
            for r in &reports {
                let verdict = if r.passed { "PASS" } else { "FAIL" };
                failed += usize::from(!r.passed);
                writeln!(stdout, "{verdict} {:<34} {}", r.id, r.detail).map_err(stdout_error)?;
            }
            writeln!(stdout, "wrote {}", file.display()).map_err(stdout_error)?;
            if failed > 0 {
                return Err(CliError::Verification(format!(
                    "{failed} of {} claims failed",
                    reports.len()
                )));
            }
            return Ok(exit::OK);
        }
    };
    for f in &files {
        writeln!(stdout, "wrote {}", f.display()).map_err(stdout_error)?;
    }
    Ok(exit::OK)
}

fn stdout_error(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

fn print_file(stdout: &mut dyn Write, path: &PathBuf) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        writeln!(stdout, "{line}").map_err(stdout_error)?;
    }
    Ok(())
}
