use std::fs;
use std::io::{self, BufWriter, Write};
use std::panic;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cel_core::catalog::{catalog_get, catalog_list};
use cel_core::conformal_lab::{check_transformation_laws, LabOptions, Law, LawSummary, DEFAULT_LAW_TOL};
use cel_core::invariants::{classify, Options, DEFAULT_FD_STEP, DEFAULT_VANISH_TOL};
use cel_core::sampling::sample_points;
use cel_core::weyl_algebra::DEFAULT_RANK_TOL;
use cel_core::{parse_metric_document, ConformalFactorSpec, MetricSpec};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

/// Conformal invariants of Riemannian metrics.
#[derive(Parser)]
#[command(name = "cel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a metric document and report errors with their location.
    Validate {
        /// Path to a metric document, or catalog:NAME.
        metric: String,
    },
    /// Evaluate the invariants at sample points and classify the metric.
    Classify(RunArgs),
    /// Check the conformal transformation laws for g and exp(-2 phi) g.
    ConformalCheck {
        #[command(flatten)]
        run: RunArgs,
        /// Conformal factor: an expression in the metric coordinates, or a file holding one.
        #[arg(long)]
        phi: String,
        /// Perturb one law to exercise the failure path.
        #[arg(long, hide = true)]
        corrupt: Option<Law>,
    },
    /// List the built-in metrics.
    Catalog,
}

#[derive(Args)]
struct RunArgs {
    /// Path to a metric document, or catalog:NAME.
    #[arg(long)]
    metric: String,
    #[arg(long, default_value_t = 20)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Vanishing tolerance for invariants and laws.
    #[arg(long)]
    tol: Option<f64>,
    /// Relative threshold for the spectrum of w.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    rank_tol: f64,
    /// Jet order of the metric.
    #[arg(long, default_value_t = 4)]
    order: usize,
    /// Differentiate T by finite differences even when the jet solve applies.
    #[arg(long)]
    force_fd: bool,
    /// Write records here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

fn load_metric(source: &str) -> Result<MetricSpec, Failure> {
    if let Some(name) = source.strip_prefix("catalog:") {
        return catalog_get(name)
            .map(|e| e.spec())
            .map_err(|e| Failure::config(format!("{e}; available: {}", catalog_list().join(", "))));
    }
    let text = fs::read_to_string(source).map_err(|e| Failure::config(format!("{source}: {e}")))?;
    parse_metric_document(&text).map_err(|e| Failure::config(format!("{source}: {e}")))
}

fn load_phi(source: &str, spec: &MetricSpec) -> Result<ConformalFactorSpec, Failure> {
    let path = Path::new(source);
    let text = if path.is_file() {
        let raw = fs::read_to_string(path).map_err(|e| Failure::config(format!("{source}: {e}")))?;
        raw.lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .collect::<Vec<_>>()
            .join(" ")
    } else {
        source.to_string()
    };
    ConformalFactorSpec::parse(&text, spec).map_err(|e| Failure::config(format!("phi '{text}': {e}")))
}

impl RunArgs {
    fn options(&self) -> Result<Options, Failure> {
        if self.points == 0 {
            return Err(Failure::config("--points must be at least 1"));
        }
        if !(2..=4).contains(&self.order) {
            return Err(Failure::config("--order must be 2, 3 or 4"));
        }
        for (flag, v) in [("--tol", self.tol.unwrap_or(DEFAULT_VANISH_TOL)), ("--rank-tol", self.rank_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::config(format!("{flag} must be positive")));
            }
        }
        Ok(Options {
            tol: self.tol.unwrap_or(DEFAULT_VANISH_TOL),
            rank_tol: self.rank_tol,
            order: self.order,
            force_fd: self.force_fd,
            fd_step: DEFAULT_FD_STEP,
        })
    }

    fn spec(&self) -> Result<MetricSpec, Failure> {
        let spec = load_metric(&self.metric)?;
        if spec.dim() < 4 {
            return Err(Failure::config(format!(
                "{}: the invariants need dimension at least 4, got {}",
                self.metric,
                spec.dim()
            )));
        }
        Ok(spec)
    }

    fn sink(&self) -> Result<Box<dyn Write>, Failure> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(
                fs::File::create(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn parallel() -> bool {
    std::env::var("CEL_NO_PARALLEL").map_or(true, |v| v != "1")
}

fn write_records<I: IntoIterator<Item = S>, S: Serialize>(out: &mut dyn Write, records: I) -> Result<(), Failure> {
    let io_err = |e: io::Error| Failure {
        code: EXIT_INTERNAL,
        message: format!("writing report: {e}"),
    };
    for r in records {
        let line = serde_json::to_string(&r).map_err(|e| Failure {
            code: EXIT_INTERNAL,
            message: format!("serializing report: {e}"),
        })?;
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[derive(Serialize)]
struct LawAggregate<'a> {
    metric: &'a Option<String>,
    phi: &'a str,
    points: usize,
    seed: u64,
    tolerance: f64,
    normalization: &'static str,
    laws: &'a [LawSummary],
    max_residual: f64,
    failing_laws: Vec<Law>,
    pass: bool,
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Validate { metric } => {
            load_metric(&metric)?;
            println!("OK");
            Ok(0)
        }
        Command::Catalog => {
            for name in catalog_list() {
                println!("{name}");
            }
            Ok(0)
        }
        Command::Classify(args) => {
            let opts = args.options()?;
            let spec = args.spec()?;
            let run = classify(&spec, args.points, args.seed, &opts, parallel());
            let mut out = args.sink()?;
            write_records(&mut out, &run.reports)?;
            write_records(&mut out, [&run.aggregate])?;
            let a = &run.aggregate;
            eprintln!(
                "{}: {} over {} points ({} failed)",
                a.metric.as_deref().unwrap_or(&args.metric),
                a.verdict.label(),
                a.points,
                a.errors
            );
            Ok(if a.errors > 0 { EXIT_NUMERIC } else { 0 })
        }
        Command::ConformalCheck { run, phi, corrupt } => {
            let opts = run.options()?;
            let spec = run.spec()?;
            let phi = load_phi(&phi, &spec)?;
            let lab = LabOptions {
                invariants: opts,
                tol: run.tol.unwrap_or(DEFAULT_LAW_TOL),
                corrupt,
                parallel: parallel(),
            };
            let points = sample_points(&spec, run.points, run.seed);
            let report = check_transformation_laws(&spec, &phi, &points, &lab).map_err(|e| Failure {
                code: EXIT_NUMERIC,
                message: e.to_string(),
            })?;
            let mut out = run.sink()?;
            write_records(&mut out, &report.points)?;
            let failing = report.failing_laws();
            write_records(
                &mut out,
                [LawAggregate {
                    metric: &report.metric,
                    phi: &report.phi,
                    points: report.points.len(),
                    seed: run.seed,
                    tolerance: report.tolerance,
                    normalization: report.normalization,
                    laws: &report.laws,
                    max_residual: report.max_residual,
                    failing_laws: failing.clone(),
                    pass: report.pass,
                }],
            )?;
            if report.pass {
                eprintln!("all laws pass, max residual {:e}", report.max_residual);
                Ok(0)
            } else {
                let names: Vec<&str> = failing.iter().map(|l| l.name()).collect();
                eprintln!("failing laws: {}", names.join(", "));
                Ok(EXIT_NUMERIC)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match panic::catch_unwind(|| run(cli)) {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
