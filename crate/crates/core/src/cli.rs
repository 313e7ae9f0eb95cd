//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::acceptance::run_suite;
use crate::config::{validate_config, SweepSpec};
use crate::error::{Error, Result};
use crate::run::{run, with_sweep, write_output};

#[derive(Debug, Parser)]
#[command(name = "chiral-casimir", version, about = "Casimir momentum of a magnetochiral oscillator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the configured pipelines (and its sweep, if any).
    Compute {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `output.dir` of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one molecule parameter over an evenly spaced range.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and print it with defaults filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the acceptance suite.
    Selftest {
        /// Criterion number or name fragment.
        #[arg(long)]
        filter: Option<String>,
    },
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    match cmd {
        Command::Compute { config, out: dir } => {
            let cfg = validate_config(&config)?;
            let res = run(&cfg, "compute")?;
            let dir = dir.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
            let (csv, prov) = write_output(&cfg, &res, &dir)?;
            writeln!(out, "wrote {} and {}", csv.display(), prov.display()).map_err(io)?;
        }
        Command::Sweep { config, param, from, to, steps, out: dir } => {
            let cfg = with_sweep(&validate_config(&config)?, SweepSpec { param, from, to, steps })?;
            let res = run(&cfg, "sweep")?;
            let dir = dir.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
            let (csv, prov) = write_output(&cfg, &res, &dir)?;
            writeln!(out, "wrote {} and {}", csv.display(), prov.display()).map_err(io)?;
        }
        Command::Validate { config } => {
            let cfg = validate_config(&config)?;
            let text = serde_json::to_string_pretty(&cfg).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out, "{text}").map_err(io)?;
        }
        Command::Selftest { filter } => {
            let outcomes = run_suite(filter.as_deref());
            if outcomes.is_empty() {
                return Err(Error::RangeError(format!("no criterion matches `{}`", filter.unwrap_or_default())));
            }
            for o in &outcomes {
                writeln!(out, "{}", o.line()).map_err(io)?;
            }
            let failed = outcomes.iter().filter(|o| !o.pass).count();
            writeln!(out, "{} passed, {failed} failed", outcomes.len() - failed).map_err(io)?;
            return Ok(if failed == 0 { 0 } else { 1 });
        }
    }
    Ok(0)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {e}", e.code());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = main_with(std::iter::once("chiral-casimir").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["sweep", "--config", "x.json"]).0, 2);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn missing_config_is_an_io_error() {
        let (code, _, err) = call(&["validate", "--config", "/nonexistent/run.json"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("error[cli.Io]"), "{err}");
    }

    #[test]
    fn selftest_filter_must_match() {
        let (code, _, err) = call(&["selftest", "--filter", "no-such-criterion"]);
        assert_eq!(code, 2);
        assert!(err.contains("cli.RangeError"));
        let (code, out, _) = call(&["selftest", "--filter", "scaling"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("criterion 6 [scaling-law]: PASS"));
    }
}
