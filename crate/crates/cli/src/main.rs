mod output;
mod scenario;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qsteer_core::engineering::{
    controllability_sweep, max_pairwise_distance, plan, verify_all_to_one, Executor, Stage1Length, Stage2Mode,
    DEFAULT_IDEAL_THRESHOLD, DEFAULT_PULSE_THRESHOLD,
};
use qsteer_core::kraus::{all_to_one_map, apply_map, complete_positivity};
use qsteer_core::sampling::{random_initial_states, rng_from_seed};
use qsteer_core::state::hs_distance;
use qsteer_core::{lie_algebra_rank, Error};
use serde::Serialize;

use output::{to_json, trajectory_csv, MatrixJson, PlanJson};
use scenario::{Overrides, ParseError};

const SWEEP_THRESHOLD: f64 = 1e-5;
const SWEEP_RELAXATIONS: f64 = 20.0;
const KRAUS_THRESHOLD: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "qsteer", version, about = "Steer n-level density matrices with incoherent radiation and coherent control")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory for reports and trajectories.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Trajectory samples per stage.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Stage-1 duration in relaxation times; overrides the scenario.
    #[arg(long, global = true)]
    a: Option<f64>,
    /// Cap on photon occupation numbers.
    #[arg(long, global = true)]
    nmax: Option<f64>,
    /// Acceptance threshold on the final error or spread.
    #[arg(long, global = true)]
    threshold: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Plan and run the two-stage scheme on a scenario.
    Engineer { scenario: PathBuf },
    /// All-to-one spread and random-target sweep on a scenario's system.
    Verify {
        scenario: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Defaults to the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Random (initial, target) pairs in the sweep.
        #[arg(long, default_value_t = 50)]
        cases: usize,
    },
    /// Dimension of the Lie algebra generated by iH₀ and iV.
    Controllability { system: PathBuf },
    /// All-to-one Kraus operators for a target state.
    Kraus {
        target: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ideal,
    Pulse,
}

impl From<ModeArg> for Stage2Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Ideal => Stage2Mode::Ideal,
            ModeArg::Pulse => Stage2Mode::Pulse,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Threshold(String),
    Parse(String),
    Infeasible(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Threshold(_) => 1,
            Failure::Parse(_) => 2,
            Failure::Infeasible(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Threshold(m) | Failure::Parse(m) | Failure::Infeasible(m) => m,
        }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Parse(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Infeasible(e.to_string())
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn out_dir(dir: &Path) -> Result<&Path, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Parse(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

#[derive(Serialize)]
struct EngineerReport<'a> {
    scenario: &'a str,
    dimension: usize,
    status: &'static str,
    final_error: Option<f64>,
    threshold: f64,
    stage1_error_to_diagonal_target: Option<f64>,
    trajectory_rows: usize,
    plan: PlanJson,
    final_state: Option<MatrixJson>,
    target_state: MatrixJson,
}

fn engineer(cli: &Cli, path: &Path) -> Result<(), Failure> {
    let sc = scenario::load(path, &overrides(cli))?;
    let p = plan(&sc.system, &sc.target, &sc.config)?;
    let requested = sc.config.mode;
    let threshold = sc.threshold.unwrap_or(match p.mode {
        Stage2Mode::Pulse => DEFAULT_PULSE_THRESHOLD,
        Stage2Mode::Ideal => DEFAULT_IDEAL_THRESHOLD,
    });
    let dir = out_dir(&cli.out)?;
    let mut report = EngineerReport {
        scenario: &sc.name,
        dimension: sc.system.dim(),
        status: "infeasible",
        final_error: None,
        threshold,
        stage1_error_to_diagonal_target: None,
        trajectory_rows: 0,
        plan: (&p).into(),
        final_state: None,
        target_state: (&sc.target).into(),
    };
    if requested == Some(Stage2Mode::Pulse) {
        if let Err(e) = p.require_feasible() {
            write(&dir.join("report.json"), &to_json(&report))?;
            return Err(Failure::Infeasible(e.to_string()));
        }
    }

    let run = Executor::new(&sc.system, &p, p.mode, sc.samples)?.run(&sc.initial)?;
    let passed = run.final_error <= threshold;
    report.status = if passed { "pass" } else { "fail" };
    report.final_error = Some(run.final_error);
    report.stage1_error_to_diagonal_target = Some(hs_distance(&run.stage1_final, &p.diagonal_target())?);
    report.trajectory_rows = run.trajectory.len();
    report.final_state = Some((&run.final_state).into());
    write(&dir.join("trajectory.csv"), &trajectory_csv(&run))?;
    write(&dir.join("report.json"), &to_json(&report))?;

    let line = format!(
        "{}: mode={} stage1={:.6e} s final_error={:.6e} threshold={:.1e}",
        sc.name,
        mode_name(p.mode),
        p.stage1_duration,
        run.final_error,
        threshold
    );
    if passed {
        println!("{line} PASS");
        Ok(())
    } else {
        Err(Failure::Threshold(format!("{line} FAIL")))
    }
}

fn mode_name(m: Stage2Mode) -> &'static str {
    match m {
        Stage2Mode::Ideal => "ideal",
        Stage2Mode::Pulse => "pulse",
    }
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    scenario: &'a str,
    seed: u64,
    trials: usize,
    mode: Stage2Mode,
    stage1_duration_s: f64,
    max_spread: f64,
    max_final_error: f64,
    spread_threshold: f64,
    sweep_cases: usize,
    sweep_relaxations: f64,
    sweep_max_final_error: f64,
    sweep_threshold: f64,
    passed: bool,
}

fn verify(cli: &Cli, path: &Path, trials: usize, seed: Option<u64>, cases: usize) -> Result<(), Failure> {
    let sc = scenario::load(path, &overrides(cli))?;
    let seed = seed.unwrap_or(sc.seed);
    let p = plan(&sc.system, &sc.target, &sc.config)?;
    if sc.config.mode == Some(Stage2Mode::Pulse) {
        p.require_feasible()?;
    }
    let all = verify_all_to_one(&sc.system, &p, trials, seed)?;
    let relaxations = cli.a.unwrap_or(SWEEP_RELAXATIONS);
    let sweep = controllability_sweep(
        &sc.system,
        cases,
        seed,
        Stage1Length::Relaxations(relaxations),
        sc.config.n_max,
    )?;
    let spread_threshold = cli.threshold.unwrap_or(DEFAULT_IDEAL_THRESHOLD);
    let sweep_threshold = cli.threshold.unwrap_or(SWEEP_THRESHOLD);
    let spread_ok = all.max_distance <= spread_threshold;
    let sweep_ok = sweep.max_final_error <= sweep_threshold;
    let report = VerifyReport {
        scenario: &sc.name,
        seed,
        trials,
        mode: p.mode,
        stage1_duration_s: p.stage1_duration,
        max_spread: all.max_distance,
        max_final_error: all.max_final_error,
        spread_threshold,
        sweep_cases: cases,
        sweep_relaxations: relaxations,
        sweep_max_final_error: sweep.max_final_error,
        sweep_threshold,
        passed: spread_ok && sweep_ok,
    };
    write(&out_dir(&cli.out)?.join("verify.json"), &to_json(&report))?;
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    println!(
        "all-to-one: trials={trials} seed={seed} max_spread={:.6e} threshold={:.1e} {}",
        all.max_distance,
        spread_threshold,
        verdict(spread_ok)
    );
    println!(
        "sweep: cases={cases} a={relaxations} max_final_error={:.6e} threshold={:.1e} {}",
        sweep.max_final_error,
        sweep_threshold,
        verdict(sweep_ok)
    );
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Threshold("verification thresholds not met".into()))
    }
}

fn controllability(path: &Path) -> Result<(), Failure> {
    let (h0, v) = scenario::load_control_pair(path)?;
    let n = h0.rows();
    let rank = lie_algebra_rank(&h0, &v).map_err(|e| Failure::Parse(e.to_string()))?;
    let verdict = if rank == n * n { "controllable" } else { "uncontrollable" };
    println!("{rank}/{} {verdict}", n * n);
    Ok(())
}

#[derive(Serialize)]
struct KrausReport {
    dimension: usize,
    operators: Vec<MatrixJson>,
    trace_preservation_residual: f64,
    choi_min_eigenvalue: f64,
    completely_positive: bool,
    trials: usize,
    seed: u64,
    constant_output_spread: f64,
    max_distance_to_target: f64,
    threshold: f64,
    passed: bool,
}

fn kraus(cli: &Cli, path: &Path, trials: usize, seed: u64) -> Result<(), Failure> {
    let target = scenario::load_target(path)?;
    let phi = all_to_one_map(&target);
    let cp = complete_positivity(&phi)?;
    let inputs = random_initial_states(&mut rng_from_seed(seed), target.dim(), trials);
    let outputs = inputs.iter().map(|r| apply_map(&phi, r)).collect::<Result<Vec<_>, _>>()?;
    let spread = max_pairwise_distance(&outputs)?;
    let to_target = outputs
        .iter()
        .map(|o| hs_distance(o, &target))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let threshold = cli.threshold.unwrap_or(KRAUS_THRESHOLD);
    let residual = phi.trace_preservation_residual();
    let passed = spread <= threshold && cp.completely_positive && residual <= qsteer_core::kraus::TRACE_PRESERVATION_TOL;
    let report = KrausReport {
        dimension: target.dim(),
        operators: phi.operators().iter().map(MatrixJson::from).collect(),
        trace_preservation_residual: residual,
        choi_min_eigenvalue: cp.min_eigenvalue,
        completely_positive: cp.completely_positive,
        trials,
        seed,
        constant_output_spread: spread,
        max_distance_to_target: to_target,
        threshold,
        passed,
    };
    write(&out_dir(&cli.out)?.join("kraus.json"), &to_json(&report))?;
    println!(
        "kraus: operators={} residual={:.3e} choi_min={:.3e} spread={:.3e} {}",
        phi.len(),
        residual,
        cp.min_eigenvalue,
        spread,
        if passed { "PASS" } else { "FAIL" }
    );
    if passed {
        Ok(())
    } else {
        Err(Failure::Threshold("all-to-one map checks failed".into()))
    }
}

fn overrides(cli: &Cli) -> Overrides {
    Overrides {
        samples: cli.samples,
        mode: cli.mode.map(Into::into),
        a: cli.a,
        n_max: cli.nmax,
        threshold: cli.threshold,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Engineer { scenario } => engineer(&cli, scenario),
        Command::Verify {
            scenario,
            trials,
            seed,
            cases,
        } => verify(&cli, scenario, *trials, *seed, *cases),
        Command::Controllability { system } => controllability(system),
        Command::Kraus { target, trials, seed } => kraus(&cli, target, *trials, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
