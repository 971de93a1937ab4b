//! The `sssplus` command line.
//!
//! Exit codes: 0 on success, 1 on usage or runtime errors, 2 when `verify`
//! finds a property violation. Every flag is validated before any work
//! starts, and outputs are written in one atomic step at the end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sssplus_core::construction::{build_spec, ConstructionSpec};
use sssplus_core::oracle::{check_k_residues, check_lemma1, check_theorem1, exact_fdr_at, ExhaustReport};
use sssplus_core::{canonical_t, parse_rational, ProcedureParams, Rational};

use crate::montecarlo::{default_n_grid, sweep_n, ExperimentConfig};
use crate::report::{csv_string, metadata_path, write_atomic, RunMetadata, SweepRow};
use crate::LabError;

/// Environment variable consulted for the worker count when `--threads` is absent.
pub const THREADS_ENV: &str = "SSSPLUS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "sssplus", version, about = "Simulate and verify SSS_t+ FDR control on the periodic construction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the FDR at one n by Monte Carlo.
    Simulate {
        #[command(flatten)]
        procedure: ProcedureArgs,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Estimate the FDR over a grid of n.
    Sweep {
        #[command(flatten)]
        procedure: ProcedureArgs,
        /// Comma-separated n values; defaults to whole cycles from 5 to 100.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<u64>>,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exhaustively check threshold equivalence, the K < n lower bound and K residues.
    Verify {
        #[command(flatten)]
        procedure: ProcedureArgs,
        #[arg(long)]
        n: u64,
        /// Longest win pattern for the threshold-equivalence check.
        #[arg(long, default_value_t = 12)]
        n_max: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact FDR by enumerating every true-null outcome.
    Exact {
        #[command(flatten)]
        procedure: ProcedureArgs,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print the construction's true-null layout.
    Construct {
        #[arg(long, value_parser = rational_arg)]
        alpha: Rational,
        #[arg(long, value_parser = rational_arg)]
        c: Rational,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ProcedureArgs {
    /// Target FDR level, as p/q or a decimal.
    #[arg(long, value_parser = rational_arg)]
    alpha: Rational,
    /// Win cutoff for p-values, as p/q or a decimal.
    #[arg(long, value_parser = rational_arg)]
    c: Rational,
    /// Additive constant in (0, 1]; defaults to 1.
    #[arg(long, value_parser = rational_arg, conflicts_with = "u")]
    t: Option<Rational>,
    /// Sets t = 1 - u/b.
    #[arg(long)]
    u: Option<u64>,
    /// Report ceil(t·b)/b and whether the threshold equals the t = 1 threshold.
    #[arg(long)]
    canonicalize: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, default_value_t = 400_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, env = THREADS_ENV, default_value_t = 0)]
    threads: usize,
    /// Confidence level of the reported interval.
    #[arg(long, value_parser = rational_arg, default_value = "99/100")]
    confidence: Rational,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn rational_arg(text: &str) -> Result<Rational, String> {
    parse_rational(text).map_err(|e| e.to_string())
}

impl ProcedureArgs {
    fn params(&self) -> Result<ProcedureParams, LabError> {
        match self.u {
            Some(u) => Ok(ProcedureParams::with_u(self.alpha, self.c, u)?),
            None => Ok(ProcedureParams::new(self.alpha, self.c, self.t.unwrap_or(Rational::ONE))?),
        }
    }

    /// `u` with `t = 1 - u/b`, whether given directly or through `--t`.
    fn u(&self, params: &ProcedureParams) -> Result<u64, LabError> {
        if let Some(u) = self.u {
            return Ok(u);
        }
        let gap = (Rational::ONE - params.t()) * Rational::from_integer(params.b().into());
        if !gap.is_integer() {
            return Err(LabError::Usage(format!(
                "t = {} is not of the form 1 - u/b with b = {}; pass --u",
                params.t(),
                params.b()
            )));
        }
        Ok(gap.numer() as u64)
    }
}

fn canonical_note(params: &ProcedureParams) -> String {
    let canon = canonical_t(params.t(), params.b());
    format!(
        "t = {}: canonical m/b = {} (b = {}); K_t = K_1: {}",
        params.t(),
        canon,
        params.b(),
        if canon == Rational::ONE { "yes" } else { "no" }
    )
}

/// Where a command's main output goes.
enum Sink<'a> {
    File(&'a Path),
    Stdout,
}

impl<'a> Sink<'a> {
    fn from(out: &'a Option<PathBuf>) -> Self {
        match out {
            Some(p) => Sink::File(p),
            None => Sink::Stdout,
        }
    }

    fn emit(&self, contents: &str, stdout: &mut dyn Write) -> Result<(), LabError> {
        match self {
            Sink::File(path) => write_atomic(path, contents.as_bytes()),
            Sink::Stdout => Ok(stdout.write_all(contents.as_bytes())?),
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, LabError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    metadata: &'a RunMetadata,
    rows: &'a [SweepRow],
}

#[derive(Serialize)]
struct VerifyDocument<'a> {
    passed: bool,
    reports: &'a [ExhaustReport],
}

#[derive(Serialize)]
struct ConstructDocument<'a> {
    alpha: Rational,
    c: Rational,
    #[serde(flatten)]
    spec: &'a ConstructionSpec,
    true_nulls: Vec<u64>,
}

#[derive(Serialize)]
struct ExactDocument {
    a: u64,
    b: u64,
    n: u64,
    alpha: Rational,
    c: Rational,
    t: Rational,
    fdr: Rational,
    fdr_decimal: f64,
    p_hit_end: Rational,
    z_mean: Rational,
    assignments: u64,
}

/// Outcome of a command that completed without a usage error.
enum Completed {
    Ok,
    Violations,
}

fn monte_carlo(
    procedure: &ProcedureArgs,
    n_values: Option<&[u64]>,
    single_n: Option<u64>,
    run: &RunArgs,
    output: &OutputArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<Completed, LabError> {
    let params = procedure.params()?;
    params.require_construction()?;
    let period = params.a() + params.b();
    let n_values: Vec<u64> = match (single_n, n_values) {
        (Some(n), _) => vec![n],
        (None, Some(list)) => list.to_vec(),
        (None, None) => default_n_grid(period),
    };
    if n_values.is_empty() || n_values.contains(&0) {
        return Err(LabError::Usage("every n must be at least 1".into()));
    }
    let template = ExperimentConfig::new(params, n_values[0], run.trials, run.seed)?
        .with_threads(run.threads)
        .with_confidence(run.confidence)?;
    if procedure.canonicalize {
        writeln!(stderr, "{}", canonical_note(&params))?;
    }

    let estimates = sweep_n(&template, &n_values)?;
    let rows: Vec<SweepRow> = estimates.iter().map(|e| SweepRow::new(&params, run.seed, e)).collect();
    let metadata = RunMetadata::new(&template, &n_values);
    let sink = Sink::from(&output.out);
    match output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let csv = csv_string(&rows)?;
            if let Sink::File(path) = sink {
                write_atomic(&metadata_path(path), to_json(&metadata)?.as_bytes())?;
            }
            sink.emit(&csv, stdout)?;
        }
        Format::Json => sink.emit(&to_json(&SweepDocument { metadata: &metadata, rows: &rows })?, stdout)?,
    }
    Ok(Completed::Ok)
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Completed, LabError> {
    match cli.command {
        Command::Simulate { procedure, n, run, output } => {
            monte_carlo(&procedure, None, Some(n), &run, &output, stdout, stderr)
        }
        Command::Sweep { procedure, n_list, run, output } => {
            monte_carlo(&procedure, n_list.as_deref(), None, &run, &output, stdout, stderr)
        }
        Command::Verify { procedure, n, n_max, out } => {
            let params = procedure.params()?;
            params.require_construction()?;
            let u = procedure.u(&params)?;
            if procedure.canonicalize {
                writeln!(stderr, "{}", canonical_note(&params))?;
            }
            let reports = vec![
                check_theorem1(&params, n_max)?,
                check_lemma1(params.a(), params.b(), u, n)?,
                check_k_residues(params.a(), params.b(), u, n)?,
            ];
            let passed = reports.iter().all(ExhaustReport::passed);
            Sink::from(&out).emit(&to_json(&VerifyDocument { passed, reports: &reports })?, stdout)?;
            for r in reports.iter().filter(|r| !r.passed()) {
                writeln!(stderr, "violation: {} ({} cases)", r.property, r.violations.len())?;
            }
            Ok(if passed { Completed::Ok } else { Completed::Violations })
        }
        Command::Exact { procedure, n, output } => {
            let params = procedure.params()?;
            params.require_construction()?;
            if procedure.canonicalize {
                writeln!(stderr, "{}", canonical_note(&params))?;
            }
            let exact = exact_fdr_at(params.a(), params.b(), params.t(), n, params.c())?;
            let doc = ExactDocument {
                a: params.a(),
                b: params.b(),
                n,
                alpha: params.alpha(),
                c: params.c(),
                t: params.t(),
                fdr: exact.fdr,
                fdr_decimal: exact.fdr.to_f64(),
                p_hit_end: exact.p_hit_end,
                z_mean: exact.z_mean,
                assignments: exact.assignments,
            };
            let text = match output.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&doc)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.serialize(&doc)?;
                    String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8")
                }
            };
            Sink::from(&output.out).emit(&text, stdout)?;
            Ok(Completed::Ok)
        }
        Command::Construct { alpha, c, n, out } => {
            let params = ProcedureParams::new(alpha, c, Rational::ONE)?;
            params.require_construction()?;
            let spec = build_spec(params.a(), params.b(), n)?;
            let doc = ConstructDocument {
                alpha,
                c,
                true_nulls: spec.true_null_positions(),
                spec: &spec,
            };
            Sink::from(&out).emit(&to_json(&doc)?, stdout)?;
            Ok(Completed::Ok)
        }
    }
}

/// Runs the command line with explicit output streams and returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = write!(stderr, "{}", err.render());
            return if err.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(Completed::Ok) => 0,
        Ok(Completed::Violations) => 2,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err}");
            1
        }
    }
}

pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
