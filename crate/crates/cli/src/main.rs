//! `gnep`: solve, analyze and probe Lagrangian equilibria of polyhedral GNEPs.
//!
//! Exit codes: 0 success, 2 invalid input, 3 solver did not converge,
//! 4 ambiguous active-set classification.

mod error;
mod summary;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde_json::{json, Value};

use gnep_core::certificates::{run_all, StabilityData, Tolerances, DEFAULT_MAX_PARTITIONS};
use gnep_core::kkt::{solve_lgne, SolveParams, SolveResult};
use gnep_core::linearization::LinearizedGE;
use gnep_core::perturbation::{probe_vs_certificates, ProbeParams};
use gnep_core::problem::{Problem, ProblemError};
use gnep_core::system::{Formulation, KktSystem, PointFile, PrimalDualPoint};

use error::CliError;

#[derive(Parser)]
#[command(
    name = "gnep",
    version,
    about = "Stability analysis of Lagrangian generalized Nash equilibria"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the KKT system and print the converged point.
    Solve(SolveArgs),
    /// Run the stability certificates at a point.
    Analyze(AnalyzeArgs),
    /// Run the certificates and an empirical perturbation probe.
    Perturb(PerturbArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulationArg {
    PerPlayer,
    Classical,
    Consensus,
    SharedCopies,
}

impl From<FormulationArg> for Formulation {
    fn from(f: FormulationArg) -> Self {
        match f {
            FormulationArg::PerPlayer => Formulation::PerPlayer,
            FormulationArg::Classical => Formulation::Classical,
            FormulationArg::Consensus => Formulation::Consensus,
            FormulationArg::SharedCopies => Formulation::SharedCopies,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Verbosity {
    Low,
    Normal,
    High,
}

#[derive(Args)]
struct Common {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Multiplier layout; defaults to the one implied by the constraint mode.
    #[arg(long, value_enum)]
    formulation: Option<FormulationArg>,
    /// Write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Starting x for the solver, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long, default_value_t = SolveParams::default().max_iter)]
    max_iter: usize,
    #[arg(long, default_value_t = SolveParams::default().residual_tol)]
    residual_tol: f64,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    /// Point to analyze (JSON with "x" and optional "y"); solved for when absent.
    #[arg(long)]
    point: Option<PathBuf>,
    #[arg(long, default_value_t = Tolerances::default().tol_active)]
    tol_active: f64,
    #[arg(long, default_value_t = Tolerances::default().tol_mult)]
    tol_mult: f64,
    #[arg(long, default_value_t = Tolerances::default().pivot_tol)]
    pivot_tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_PARTITIONS)]
    max_partitions: u64,
    #[arg(long, value_enum, default_value = "normal")]
    verbosity: Verbosity,
    /// Record wall-clock timings in the report (makes reports run-dependent).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct PerturbArgs {
    #[command(flatten)]
    analyze: AnalyzeArgs,
    #[arg(long, default_value_t = 1e-4)]
    radius: f64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl Common {
    fn solve_params(&self) -> SolveParams {
        SolveParams {
            max_iter: self.max_iter,
            residual_tol: self.residual_tol,
            ..SolveParams::default()
        }
    }

    fn load(&self) -> Result<Problem, CliError> {
        Ok(Problem::from_reader(open(&self.problem)?)?)
    }

    fn system<'a>(&self, problem: &'a Problem) -> Result<KktSystem<'a>, CliError> {
        let f = self.formulation.map_or_else(
            || Formulation::default_for(problem.mode()),
            Formulation::from,
        );
        Ok(KktSystem::new(problem, f)?)
    }

    fn start(&self, sys: &KktSystem) -> Result<PrimalDualPoint, CliError> {
        let mut pt = sys.zero_point();
        if let Some(x0) = &self.x0 {
            let x = DVector::from_vec(x0.clone());
            sys.problem().check_x(&x)?;
            pt.x = x;
        }
        Ok(pt)
    }
}

impl AnalyzeArgs {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            tol_active: self.tol_active,
            tol_mult: self.tol_mult,
            pivot_tol: self.pivot_tol,
            max_partitions: self.max_partitions,
            ..Tolerances::default()
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn solve(sys: &KktSystem, common: &Common) -> Result<SolveResult, CliError> {
    let res = solve_lgne(
        sys,
        &common.start(sys)?,
        &sys.zero_perturbation(),
        &common.solve_params(),
    )?;
    if !res.converged {
        return Err(CliError::NotConverged {
            residual: res.residual,
            iterations: res.iterations,
        });
    }
    Ok(res)
}

fn point_json(sys: &KktSystem, pt: &PrimalDualPoint) -> Value {
    serde_json::to_value(sys.point_to_file(pt)).expect("point serializes")
}

fn solver_json(res: &SolveResult) -> Value {
    json!({
        "converged": res.converged,
        "residual": res.residual,
        "iterations": res.iterations,
        "least_squares_steps": res.least_squares_steps,
    })
}

/// The point to analyze, with its provenance and the solver record if one ran.
fn analyzed_point(
    sys: &KktSystem,
    args: &AnalyzeArgs,
) -> Result<(PrimalDualPoint, Value, Value), CliError> {
    match &args.point {
        Some(path) => {
            let file: PointFile =
                serde_json::from_reader(open(path)?).map_err(ProblemError::from)?;
            let pt = sys.point_from_file(&file)?;
            Ok((pt, json!("input"), Value::Null))
        }
        None => {
            let res = solve(sys, &args.common)?;
            let solver = solver_json(&res);
            Ok((res.point, json!("solver"), solver))
        }
    }
}

fn write_report(path: &Option<PathBuf>, report: &Value) -> Result<(), CliError> {
    if let Some(path) = path {
        let mut text = serde_json::to_string_pretty(report).expect("report serializes");
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn run_solve(args: &SolveArgs) -> Result<(), CliError> {
    let problem = args.common.load()?;
    let sys = args.common.system(&problem)?;
    let res = solve(&sys, &args.common)?;
    let report = json!({
        "mode": problem.mode().as_str(),
        "formulation": sys.formulation().as_str(),
        "point": point_json(&sys, &res.point),
        "solver": solver_json(&res),
    });
    print!("{}", summary::solve(&sys, &res));
    write_report(&args.common.report, &report)
}

fn analysis_report(
    sys: &KktSystem,
    args: &AnalyzeArgs,
    pt: &PrimalDualPoint,
    source: Value,
    solver: Value,
    certificates: &gnep_core::certificates::CertificateReport,
    empirical: Value,
) -> Result<Value, CliError> {
    let mut report = serde_json::to_value(certificates).expect("report serializes");
    let linearization = if args.verbosity == Verbosity::High {
        LinearizedGE::build(&StabilityData::assemble(sys, pt)?).to_json()
    } else {
        Value::Null
    };
    let obj = report.as_object_mut().expect("report is an object");
    obj.insert(
        "point".into(),
        json!({"source": source, "value": point_json(sys, pt)}),
    );
    obj.insert("solver".into(), solver);
    obj.insert("linearization".into(), linearization);
    obj.insert("empirical".into(), empirical);
    Ok(report)
}

fn run_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let problem = args.common.load()?;
    let sys = args.common.system(&problem)?;
    let (pt, source, solver) = analyzed_point(&sys, args)?;
    let certs = run_all(&sys, &pt, &args.tolerances(), args.timings)?;
    let report = analysis_report(&sys, args, &pt, source, solver, &certs, Value::Null)?;
    if args.verbosity != Verbosity::Low {
        print!("{}", summary::analysis(&sys, &pt, &certs, None));
    }
    write_report(&args.common.report, &report)
}

fn run_perturb(args: &PerturbArgs) -> Result<(), CliError> {
    let a = &args.analyze;
    let problem = a.common.load()?;
    let sys = a.common.system(&problem)?;
    let (pt, source, solver) = analyzed_point(&sys, a)?;
    let params = ProbeParams {
        radius: args.radius,
        samples: args.samples,
        seed: args.seed,
        solve: a.common.solve_params(),
        ..ProbeParams::default()
    };
    let (mut certs, empirical) = probe_vs_certificates(&sys, &pt, &params, &a.tolerances())?;
    if a.timings {
        certs = run_all(&sys, &pt, &a.tolerances(), true)?;
    }
    let emp = serde_json::to_value(&empirical).expect("probe report serializes");
    let report = analysis_report(&sys, a, &pt, source, solver, &certs, emp)?;
    if a.verbosity != Verbosity::Low {
        print!("{}", summary::analysis(&sys, &pt, &certs, Some(&empirical)));
    }
    write_report(&a.common.report, &report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Analyze(a) => run_analyze(a),
        Command::Perturb(a) => run_perturb(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gnep: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
