//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use amdi_core::closed_form::Backend;
use amdi_core::{DetectorKind, SumVariant};
use clap::{Args, Parser, Subcommand};

use crate::commands::{self, CommandError, Report};
use crate::config::{parse_config, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "amdi-qkd", version, about = "Key-rate scans and closed-form verification for adaptive MDI-QKD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Key rates over a distance range as a CSV table.
    Scan(RunArgs),
    /// PNR and threshold scans side by side with difference columns.
    Compare(RunArgs),
    /// Closed form against the Fock-space oracle, plus the discrepancy ledger.
    Verify(RunArgs),
}

/// Flags override the values read from `--config`.
#[derive(Debug, Args)]
struct RunArgs {
    /// `key=value` parameter file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// closed | oracle
    #[arg(long)]
    backend: Option<Backend>,
    /// verbatim | reconciled
    #[arg(long)]
    variant: Option<SumVariant>,
    /// pnr | threshold
    #[arg(long)]
    detector: Option<DetectorKind>,
    /// First distance in km.
    #[arg(long)]
    from: Option<f64>,
    /// Last distance in km (included).
    #[arg(long)]
    to: Option<f64>,
    /// Distance step in km.
    #[arg(long)]
    step: Option<f64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Leave out the timestamp and timing line.
    #[arg(long)]
    no_timestamp: bool,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, CommandError> {
        let mut cfg = match &self.config {
            Some(path) => parse_config(path)?,
            None => RunConfig::default(),
        };
        let p = &mut cfg.params;
        if let Some(b) = self.backend {
            p.backend = b;
        }
        if let Some(v) = self.variant {
            p.variant = v;
        }
        if let Some(d) = self.detector {
            p.detector = d;
        }
        cfg.from_km = self.from.unwrap_or(cfg.from_km);
        cfg.to_km = self.to.unwrap_or(cfg.to_km);
        cfg.step_km = self.step.unwrap_or(cfg.step_km);
        if self.output.is_some() {
            cfg.output.clone_from(&self.output);
        }
        Ok(cfg)
    }
}

type Handler = fn(&RunConfig, bool) -> Result<Report, CommandError>;

fn execute(command: &Command) -> Result<(Report, RunConfig), CommandError> {
    let (args, run): (&RunArgs, Handler) = match command {
        Command::Scan(a) => (a, commands::scan),
        Command::Compare(a) => (a, commands::compare),
        Command::Verify(a) => (a, commands::verify),
    };
    let cfg = args.config()?;
    let report = run(&cfg, !args.no_timestamp)?;
    Ok((report, cfg))
}

/// Runs the program and returns its exit code: 0 success, 1 configuration
/// or I/O error, 2 verification failure, 3 numeric diagnostic.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return 1;
            }
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
    };
    let (report, cfg) = match execute(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.code();
        }
    };
    let written = match &cfg.output {
        Some(path) => {
            std::fs::write(path, &report.text).map_err(|source| CommandError::Io { path: path.clone(), source })
        }
        None => stdout
            .write_all(report.text.as_bytes())
            .map_err(|source| CommandError::Io { path: "<stdout>".into(), source }),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return e.code();
    }
    for d in &report.diagnostics {
        let _ = writeln!(stderr, "{d}");
    }
    report.status.code()
}
