//! Command-line front end.
//!
//! Four subcommands cover the workflow: `decompose` solves a scenario and
//! writes reports, `check` audits externally supplied rectangles against
//! the same constraint system, `monitor` evaluates trajectory robustness,
//! and `validate` runs decomposition, synthesis, and the implication check
//! end to end.
//!
//! Exit codes: 0 on success, 1 when something is infeasible or violated,
//! 2 on input errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::decompose::{assemble, decompose, DecomposeError, DecomposeOptions, InstantPolicy};
use crate::report::{Report, ReportError};
use crate::scenario::{check_params, ParamsFile, Scenario, ScenarioError};
use crate::solver::SolveStatus;
use crate::stl::{robustness_breakdown, MonitorError, Trajectory, TrajectoryError};
use crate::synthesis::{
    synthesize_trajectory, verify_implication, ImplicationVerdict, SynthesisError,
    SynthesisOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNSAT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

#[derive(Parser)]
#[command(
    name = "stl-decomp",
    version,
    about = "Decompose collaborative STL tasks into single-edge sub-tasks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and emit the sub-task rectangles.
    Decompose(DecomposeArgs),
    /// Audit externally supplied rectangles against a scenario's
    /// constraints.
    Check(CheckArgs),
    /// Evaluate trajectory robustness for the original or rewritten tasks.
    Monitor(MonitorArgs),
    /// Decompose, synthesize a witness trajectory, and confirm the
    /// rewritten tasks imply the originals on it.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct DecomposeArgs {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Write the machine-readable report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the solved rectangles as a params file here.
    #[arg(long)]
    params_out: Option<PathBuf>,
    #[command(flatten)]
    overrides: OptionOverrides,
}

#[derive(Args)]
struct CheckArgs {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Params file with the rectangles to audit.
    #[arg(long)]
    params: PathBuf,
    #[command(flatten)]
    overrides: OptionOverrides,
}

#[derive(Args)]
struct MonitorArgs {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Trajectory CSV.
    #[arg(long)]
    trajectory: PathBuf,
    /// Which task set to evaluate.
    #[arg(long, value_enum)]
    which: Which,
    #[command(flatten)]
    overrides: OptionOverrides,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    #[command(flatten)]
    overrides: OptionOverrides,
}

/// Command-line overrides for the scenario's `[options]` table.
#[derive(Args)]
struct OptionOverrides {
    /// Solver duality-gap target.
    #[arg(long)]
    tol: Option<f64>,
    /// Smallest admissible rectangle size.
    #[arg(long)]
    nu_min: Option<f64>,
    /// Where an eventually window collapses to when no instant is given.
    #[arg(long, value_enum)]
    tbar_policy: Option<Policy>,
    /// Longest task-graph cycle to constrain.
    #[arg(long)]
    max_cycle_len: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Policy {
    Midpoint,
    Start,
    End,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Which {
    Original,
    Rewritten,
}

impl OptionOverrides {
    fn apply(&self, options: &mut DecomposeOptions) {
        if let Some(tol) = self.tol {
            options.solver.tol = tol;
        }
        if let Some(nu_min) = self.nu_min {
            options.nu_min = nu_min;
        }
        if let Some(policy) = self.tbar_policy {
            options.instant_policy = match policy {
                Policy::Midpoint => InstantPolicy::Midpoint,
                Policy::Start => InstantPolicy::Start,
                Policy::End => InstantPolicy::End,
            };
        }
        if let Some(len) = self.max_cycle_len {
            options.max_cycle_len = len;
        }
    }
}

/// Parse `argv` and run the chosen subcommand, returning the process exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = err.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Decompose(args) => cmd_decompose(&args),
        Command::Check(args) => cmd_check(&args),
        Command::Monitor(args) => cmd_monitor(&args),
        Command::Validate(args) => cmd_validate(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_INPUT
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

fn load(path: &Path, overrides: &OptionOverrides) -> Result<crate::scenario::CompiledScenario, CliError> {
    let scenario = Scenario::parse(&read(path)?)?;
    let mut compiled = scenario.compile()?;
    overrides.apply(&mut compiled.options);
    Ok(compiled)
}

/// Decompose, treating a detected conflict between fixed task regions as
/// an unsatisfiability verdict (`None`) rather than an input error.
fn try_decompose(
    compiled: &crate::scenario::CompiledScenario,
) -> Result<Option<crate::decompose::DecompositionResult>, CliError> {
    match decompose(&compiled.spec, &compiled.comm, &compiled.options) {
        Ok(result) => Ok(Some(result)),
        Err(DecomposeError::Conflict(err)) => {
            println!("unsatisfiable: {err}");
            Ok(None)
        }
        Err(other) => Err(other.into()),
    }
}

fn cmd_decompose(args: &DecomposeArgs) -> Result<i32, CliError> {
    let compiled = load(&args.scenario, &args.overrides)?;
    let Some(result) = try_decompose(&compiled)? else {
        return Ok(EXIT_UNSAT);
    };
    let report = Report::new(&result, &compiled.options);

    print!("{}", report.human_table());
    if let Some(out) = &args.out {
        write(out, &report.to_machine_string()?)?;
    }

    let solved = matches!(result.status, SolveStatus::Optimal | SolveStatus::Feasible);
    if let Some(params_out) = &args.params_out {
        if solved {
            write(params_out, &ParamsFile::from_result(&result).render()?)?;
        } else {
            eprintln!("no params written: solve ended {}", report.status);
        }
    }
    Ok(if solved { EXIT_OK } else { EXIT_UNSAT })
}

fn cmd_check(args: &CheckArgs) -> Result<i32, CliError> {
    let compiled = load(&args.scenario, &args.overrides)?;
    let assembly = assemble(&compiled.spec, &compiled.comm, &compiled.options)?;
    let params = ParamsFile::parse(&read(&args.params)?)?;
    let audit = check_params(&assembly, &params)?;

    for row in &audit.report.rows {
        println!("{:<22} {:<40} {:>12.4}", row.kind.label(), row.label, row.margin);
    }
    println!(
        "bound {} of {} blocks; {} rows evaluated, {} skipped",
        audit.bound_blocks,
        audit.total_blocks,
        audit.report.rows.len(),
        audit.report.skipped_rows
    );
    if audit.report.rows.is_empty() {
        println!("no evaluable rows");
        return Ok(EXIT_OK);
    }
    println!("min margin: {:.4}", audit.report.min_margin);
    let tol = compiled.options.solver.tol;
    Ok(if audit.report.min_margin >= -tol { EXIT_OK } else { EXIT_UNSAT })
}

fn cmd_monitor(args: &MonitorArgs) -> Result<i32, CliError> {
    let compiled = load(&args.scenario, &args.overrides)?;
    let traj = Trajectory::from_csv(&read(&args.trajectory)?)?;

    let label;
    let spec = match args.which {
        Which::Original => {
            label = "original";
            compiled.spec
        }
        Which::Rewritten => {
            label = "rewritten";
            let Some(result) = try_decompose(&compiled)? else {
                return Ok(EXIT_UNSAT);
            };
            match result.sub_spec {
                Some(spec) => spec,
                None => {
                    println!("decomposition {}; nothing to monitor", status_word(result.status));
                    return Ok(EXIT_UNSAT);
                }
            }
        }
    };

    let breakdown = robustness_breakdown(&spec, &traj, 0.0)?;
    for (name, rho) in &breakdown {
        println!("rho[{name}] = {rho:.6}");
    }
    let rho = breakdown.iter().map(|(_, r)| *r).fold(f64::INFINITY, f64::min);
    println!("{label} robustness: {rho:.6}");
    Ok(if rho > 0.0 { EXIT_OK } else { EXIT_UNSAT })
}

fn cmd_validate(args: &ValidateArgs) -> Result<i32, CliError> {
    let compiled = load(&args.scenario, &args.overrides)?;
    let Some(result) = try_decompose(&compiled)? else {
        return Ok(EXIT_UNSAT);
    };
    println!(
        "decomposition: {} (objective {:.4}, {} tasks rewritten)",
        status_word(result.status),
        result.objective,
        result.tasks.len()
    );
    let Some(sub_spec) = &result.sub_spec else {
        return Ok(EXIT_UNSAT);
    };
    if !result.rewritten_within_comm {
        println!("rewritten tasks leave the communication graph");
        return Ok(EXIT_UNSAT);
    }

    // The witness must also cover the original horizon, which can exceed
    // the rewritten one when an `eventually` collapsed to an earlier
    // instant.
    let synth_options = SynthesisOptions {
        horizon: Some(compiled.spec.horizon()),
        ..SynthesisOptions::default()
    };
    let traj = match synthesize_trajectory(sub_spec, &synth_options) {
        Ok(traj) => traj,
        Err(err @ (SynthesisError::Unsatisfied { .. } | SynthesisError::PlacementSingular)) => {
            println!("synthesis failed: {err}");
            return Ok(EXIT_UNSAT);
        }
        Err(err) => {
            eprintln!("error: {err}");
            return Ok(EXIT_INPUT);
        }
    };
    println!(
        "synthesized witness: {} samples over [0, {:.2}]",
        traj.len(),
        traj.times().last().copied().unwrap_or(0.0)
    );

    let implication = verify_implication(&traj, sub_spec, &compiled.spec)?;
    println!("rewritten robustness: {:.6}", implication.rewritten_robustness);
    println!("original robustness: {:.6}", implication.original_robustness);
    println!("implication: {}", implication.verdict.label());
    Ok(match implication.verdict {
        ImplicationVerdict::Holds => EXIT_OK,
        _ => EXIT_UNSAT,
    })
}

fn status_word(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Feasible => "feasible",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::IterLimit => "hit the iteration limit",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> i32 {
        run(std::iter::once("stl-decomp").chain(args.iter().copied()))
    }

    fn write_scenario(dir: &Path) -> PathBuf {
        let path = dir.join("line.scn");
        fs::write(
            &path,
            r#"
schema_version = 1

[system]
agents = 3
state_dim = 2

[communication]
edges = [[1, 2], [2, 3]]

[[tasks]]
name = "meet"
subject = [1, 3]
operator = "always"
interval = [0.0, 4.0]
predicate = { type = "ball", center = [0.0, 0.0], radius = 3.0 }
"#,
        )
        .unwrap();
        path
    }

    #[test]
    fn decompose_check_and_validate_agree_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let scenario = write_scenario(dir.path());
        let out = dir.path().join("report.json");
        let params = dir.path().join("params.toml");

        let code = run_args(&[
            "decompose",
            "--scenario",
            scenario.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--params-out",
            params.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        let report = Report::from_machine_string(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(report.status, "optimal");

        // The emitted rectangles satisfy the very constraints they were
        // solved under.
        let code = run_args(&[
            "check",
            "--scenario",
            scenario.to_str().unwrap(),
            "--params",
            params.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);

        let code = run_args(&["validate", "--scenario", scenario.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
    }

    #[test]
    fn short_trajectories_are_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let scenario = write_scenario(dir.path());
        // Ends at t = 1 while the task horizon is 4.
        let traj = dir.path().join("short.csv");
        fs::write(&traj, "t,x1_1,x1_2,x2_1,x2_2,x3_1,x3_2\n0.0,0,0,0,0,0,0\n1.0,0,0,0,0,0,0\n")
            .unwrap();
        let code = run_args(&[
            "monitor",
            "--scenario",
            scenario.to_str().unwrap(),
            "--trajectory",
            traj.to_str().unwrap(),
            "--which",
            "original",
        ]);
        assert_eq!(code, EXIT_INPUT);
    }

    #[test]
    fn satisfying_trajectories_monitor_clean_on_both_task_sets() {
        let dir = tempfile::tempdir().unwrap();
        let scenario = write_scenario(dir.path());
        let mut csv = String::from("t,x1_1,x1_2,x2_1,x2_2,x3_1,x3_2\n");
        for k in 0..=8 {
            let t = k as f64 * 0.5;
            csv.push_str(&format!("{t},0,0,0.5,0,1,0\n"));
        }
        let traj = dir.path().join("good.csv");
        fs::write(&traj, csv).unwrap();

        for which in ["original", "rewritten"] {
            let code = run_args(&[
                "monitor",
                "--scenario",
                scenario.to_str().unwrap(),
                "--trajectory",
                traj.to_str().unwrap(),
                "--which",
                which,
            ]);
            assert_eq!(code, EXIT_OK, "which = {which}");
        }
    }

    #[test]
    fn input_errors_exit_with_two() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run_args(&["decompose", "--scenario", "/nonexistent.scn"]), EXIT_INPUT);

        let bad = dir.path().join("bad.scn");
        fs::write(&bad, "schema_version = [").unwrap();
        assert_eq!(run_args(&["decompose", "--scenario", bad.to_str().unwrap()]), EXIT_INPUT);

        // Unknown flag is a usage error.
        assert_eq!(run_args(&["decompose", "--nope"]), EXIT_INPUT);
    }

    #[test]
    fn infeasible_scenarios_exit_with_one() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clash.scn");
        // Two always-tasks on the same pair with disjoint regions.
        fs::write(
            &path,
            r#"
schema_version = 1

[system]
agents = 2
state_dim = 2

[communication]
edges = [[1, 2]]

[[tasks]]
name = "east"
subject = [1, 2]
operator = "always"
interval = [0.0, 4.0]
predicate = { type = "ball", center = [10.0, 0.0], radius = 1.0 }

[[tasks]]
name = "west"
subject = [1, 2]
operator = "always"
interval = [0.0, 4.0]
predicate = { type = "ball", center = [-10.0, 0.0], radius = 1.0 }
"#,
        )
        .unwrap();
        assert_eq!(run_args(&["decompose", "--scenario", path.to_str().unwrap()]), EXIT_UNSAT);
        assert_eq!(run_args(&["validate", "--scenario", path.to_str().unwrap()]), EXIT_UNSAT);
    }

    #[test]
    fn flag_overrides_reach_the_solver() {
        let dir = tempfile::tempdir().unwrap();
        let scenario = write_scenario(dir.path());
        let out = dir.path().join("report.json");
        let code = run_args(&[
            "decompose",
            "--scenario",
            scenario.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--nu-min",
            "0.05",
            "--tol",
            "1e-8",
            "--tbar-policy",
            "end",
            "--max-cycle-len",
            "4",
        ]);
        assert_eq!(code, EXIT_OK);
        let report = Report::from_machine_string(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(report.settings.nu_min, 0.05);
        assert_eq!(report.settings.tol, 1e-8);
        assert_eq!(report.settings.tbar_policy, "end");
        assert_eq!(report.settings.max_cycle_len, 4);
    }
}
