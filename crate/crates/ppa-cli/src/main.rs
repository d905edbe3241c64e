mod checks;
mod examples;
mod run;
mod spec;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use ppa_core::iteration::StopReason;

use crate::checks::{Options, Refusal};
use crate::spec::Problem;

const EXIT_VIOLATION: u8 = 1;
const EXIT_MAX_ITERS: u8 = 2;
const EXIT_SOLVER_FAILURE: u8 = 3;
const EXIT_IO: u8 = 4;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "ppa", version, about = "Proximal point iterations with degenerate metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate a problem and write the trace as CSV.
    Run {
        /// Builtin example to run instead of a problem file.
        example: Option<String>,
        #[arg(long)]
        problem: Option<PathBuf>,
        /// CSV output; defaults to stdout.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run one numerical check and print its report.
    Verify {
        check: String,
        example: Option<String>,
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Also write the report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Iteration budget for `fejer`.
        #[arg(long)]
        max_iters: Option<usize>,
        /// Test plain monotonicity instead of the restricted kind.
        #[arg(long)]
        unrestricted: bool,
    },
    /// Print a ready-to-run problem file.
    Example { name: String },
}

/// A failed command and its exit status.
struct Failure(u8, String);

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure(EXIT_USAGE, msg.into())
    }

    fn io(what: &str, e: impl std::fmt::Display) -> Self {
        Failure(EXIT_IO, format!("{what}: {e}"))
    }
}

fn load(example: Option<&str>, path: Option<&PathBuf>) -> Result<Problem, Failure> {
    let text = match (example, path) {
        (Some(name), None) => examples::get(name).ok_or_else(|| unknown_example(name))?.to_string(),
        (None, Some(p)) => std::fs::read_to_string(p).map_err(|e| Failure::io(&p.display().to_string(), e))?,
        (Some(_), Some(_)) => return Err(Failure::usage("give either an example name or --problem, not both")),
        (None, None) => return Err(Failure::usage("give an example name or --problem <path>")),
    };
    let spec = spec::parse_problem(&text).map_err(|e| Failure::usage(format!("invalid problem: {e}")))?;
    spec.validate().map_err(|e| Failure::usage(format!("invalid problem: {e:#}")))
}

fn unknown_example(name: &str) -> Failure {
    Failure::usage(format!("unknown example `{name}`; known: {}", examples::NAMES.join(", ")))
}

fn cmd_run(problem: Problem, trace_path: Option<&PathBuf>) -> Result<u8, Failure> {
    let (trace, _) = run::run(&problem).map_err(|e| Failure::usage(format!("{e:#}")))?;
    let written = match trace_path {
        Some(p) => File::create(p).map_err(|e| Failure::io(&p.display().to_string(), e)).and_then(|f| {
            run::write_csv(BufWriter::new(f), &trace).map_err(|e| Failure::io(&p.display().to_string(), e))
        }),
        None => run::write_csv(io::stdout().lock(), &trace).map_err(|e| Failure::io("stdout", e)),
    };
    written?;
    Ok(match &trace.stop {
        StopReason::Tolerance => {
            eprintln!("{}: converged after {} steps", problem.name, trace.steps());
            0
        }
        StopReason::MaxIters => {
            eprintln!("{}: iteration budget of {} steps exhausted", problem.name, trace.steps());
            EXIT_MAX_ITERS
        }
        StopReason::SolverFailure { iteration, reason } => {
            eprintln!("{}: resolvent failed at iteration {iteration}: {reason}", problem.name);
            EXIT_SOLVER_FAILURE
        }
    })
}

fn cmd_verify(check: &str, problem: &Problem, opts: Options, report_path: Option<&PathBuf>) -> Result<u8, Failure> {
    if !checks::CHECKS.contains(&check) {
        return Err(Failure::usage(format!("unknown check `{check}`; known: {}", checks::CHECKS.join(", "))));
    }
    let report = match checks::run_check(check, problem, opts) {
        Ok(r) => r,
        Err(Refusal::NotApplicable(msg)) => return Err(Failure::usage(format!("check `{check}` does not apply to {}: {msg}", problem.name))),
        Err(Refusal::Failed(e)) => {
            eprintln!("{check}: {e}");
            return Ok(EXIT_VIOLATION);
        }
    };
    let text = checks::format_report(&report);
    print!("{text}");
    if let Some(p) = report_path {
        std::fs::write(p, &text).map_err(|e| Failure::io(&p.display().to_string(), e))?;
    }
    Ok(if report.passes() { 0 } else { EXIT_VIOLATION })
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Run { example, problem, trace, max_iters, tol } => {
            let mut p = load(example.as_deref(), problem.as_ref())?;
            if let Some(k) = max_iters {
                p.stop.max_iters = k;
            }
            if let Some(t) = tol {
                if !(t >= 0.0) {
                    return Err(Failure::usage("--tol must be nonnegative"));
                }
                p.stop.q_res_tol = t;
            }
            cmd_run(p, trace.as_ref())
        }
        Command::Verify { check, example, problem, report, n, seed, max_iters, unrestricted } => {
            let p = load(example.as_deref(), problem.as_ref())?;
            let opts = Options { n, seed: seed.unwrap_or(p.seed), budget: max_iters, unrestricted };
            cmd_verify(&check, &p, opts, report.as_ref())
        }
        Command::Example { name } => {
            let text = examples::get(&name).ok_or_else(|| unknown_example(&name))?;
            io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::io("stdout", e))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => EXIT_USAGE,
            };
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_example_validates() {
        for name in examples::NAMES {
            let spec = spec::parse_problem(examples::get(name).unwrap()).unwrap();
            assert_eq!(spec.name, name);
            spec.validate().unwrap_or_else(|e| panic!("{name}: {e:#}"));
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("colour = 3\n{}", examples::get("eg2").unwrap());
        assert!(spec::parse_problem(&text).is_err());
        let text = examples::get("drs-lasso").unwrap().replace("weight = 1.0", "weight = 1.0\nwieght = 2.0");
        assert!(spec::parse_problem(&text).is_err());
    }

    #[test]
    fn negative_step_is_rejected() {
        let text = examples::get("drs-lasso").unwrap().replace("tau = 1.0", "tau = -1.0");
        let err = spec::parse_problem(&text).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("tau"), "{err}");
    }

    #[test]
    fn eg2_builds_its_table_operator() {
        let p = spec::parse_problem(examples::get("eg2").unwrap()).unwrap().validate().unwrap();
        assert_eq!(p.builtin(), Some(ppa_core::operator::Builtin2D::Eg2));
        let spec::Body::Ppa { q, .. } = &p.body else { panic!() };
        assert_eq!(q.diagonal_entries(), Some(vec![1.0, 0.0]));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = spec::parse_problem("name = \"x\"\nalgorithm = \"ppa\"\nx0 = [1.0,\n").unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn non_psd_metric_is_rejected() {
        let text = examples::get("eg1").unwrap().replace("diagonal = [0.0, 1.0]", "diagonal = [0.0, -1.0]");
        assert!(spec::parse_problem(&text).unwrap().validate().is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let text = examples::get("eg1").unwrap().replace("x0 = [1.0, 2.0]", "x0 = [1.0, 2.0, 3.0]");
        assert!(spec::parse_problem(&text).unwrap().validate().is_err());
    }

    #[test]
    fn csv_header_shape() {
        let h = run::header(3);
        assert_eq!(h.len(), 2 * 3 + 3);
        assert_eq!(h.join(","), "k,x_0,x_1,x_2,xr_0,xr_1,xr_2,q_residual,fejer_gap");
    }
}
