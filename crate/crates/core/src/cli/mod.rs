//! Batch front end: problem files in, text and JSON reports out.

pub mod problem;
pub mod report;
pub mod run;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use problem::ProblemFile;
pub use report::{CertificateJson, RunReport, SCHEMA_VERSION};
pub use run::{exit_code_for, render_text, run, Command, RunOptions, RunOutput};

#[derive(Debug, Parser)]
#[command(name = "galint", version, about = "Formal integrability along an algebraic solution curve")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Fuchsian scan, resonance lattice, local checks and Diophantine sums.
    Analyze {
        /// Problem file.
        file: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Full pipeline: formal flow, certificate, verification and descent.
    Integrate {
        /// Problem file.
        file: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Re-check a certificate (or a full JSON report) against a problem.
    Verify {
        /// Problem file.
        file: PathBuf,
        /// Certificate JSON, or a report written by `integrate --json`.
        certificate: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Formal linearizing change of variables, or the obstruction.
    Linearize {
        /// Problem file.
        file: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonOpts {
    /// Truncation order N.
    #[arg(long)]
    pub order: Option<usize>,
    /// Write the JSON report here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Base point for resonant constants (an expression in the parameters).
    #[arg(long = "base-point", allow_hyphen_values = true)]
    pub base_point: Option<String>,
    /// Largest dyadic shell for the Diophantine sums (default 24).
    #[arg(long = "nu-max")]
    pub nu_max: Option<usize>,
    /// Bound on |k| for the resonance lattice search (default: the order).
    #[arg(long = "k-max")]
    pub k_max: Option<usize>,
    /// Numeric parameter value, e.g. `--param alpha=0.37`; repeatable.
    #[arg(long = "param", value_parser = parse_param, allow_hyphen_values = true)]
    pub params: Vec<(String, f64)>,
    /// Include per-stage wall-clock times in the JSON report.
    #[arg(long)]
    pub timing: bool,
    /// Print nothing but the verdict line.
    #[arg(long, short)]
    pub quiet: bool,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, found '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("'{v}' is not a number"))?;
    Ok((k.trim().to_string(), v))
}

impl CommonOpts {
    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            order: self.order,
            k_max: self.k_max,
            nu_max: self.nu_max,
            base_point: self.base_point.clone(),
            params: self.params.iter().cloned().collect::<BTreeMap<_, _>>(),
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let (cmd, file, opts) = match cli.command {
        Sub::Analyze { file, opts } => (Ok(Command::Analyze), file, opts),
        Sub::Integrate { file, opts } => (Ok(Command::Integrate), file, opts),
        Sub::Linearize { file, opts } => (Ok(Command::Linearize), file, opts),
        Sub::Verify { file, certificate, opts } => {
            let c = std::fs::read_to_string(&certificate).map(Command::Verify).map_err(|e| format!("{}: {e}", certificate.display()));
            (c, file, opts)
        }
    };
    let src = std::fs::read_to_string(&file).map_err(|e| format!("{}: {e}", file.display()));
    let (cmd, src) = match (cmd, src) {
        (Ok(c), Ok(s)) => (c, s),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("galint: {e}");
            return 3;
        }
    };
    let out = run(&cmd, &src, &opts.run_options());
    if opts.quiet {
        println!("{}", out.report.verdict);
    } else {
        print!("{}", render_text(&out.report, &out.timing_ms));
    }
    if let Some(path) = &opts.json {
        let mut rep = out.report.clone();
        if opts.timing {
            rep.timing_ms = Some(out.timing_ms.clone());
        }
        if let Err(e) = std::fs::write(path, rep.to_json()) {
            eprintln!("galint: {}: {e}", path.display());
            return 3;
        }
    }
    out.report.exit_code
}
