//! `qracsec` command line.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 usage or parse
//! error, 3 optimizer did not converge at some grid point (output still
//! written), 4 infeasible target.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use qracsec_core::attack::{security_margin, ObservedStats};
use qracsec_core::bounds::{analytic_curve, critical_efficiency, plateau_start, AttackKind, CurveSpec, Tamper};
use qracsec_core::protocol::key_rate;
use qracsec_core::sim::chi_square_consistency;

use crate::attack_spec::{AttackSpec, SpecError};
use crate::output::{curve_csv, curve_json, fmt6, simulation_json, write_with_manifest, RunManifest};
use crate::parallel::{config_for, optimize_curve, simulate};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "qracsec",
    version,
    about = "Detector-blinding bounds for QRAC-based semi-device-independent QKD"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eve's maximal post-selected success probability over an η_avg grid.
    Curve(CurveArgs),
    /// Smallest observed efficiency at which Eve's bound drops to a target.
    Critical(CriticalArgs),
    /// Monte Carlo run of a JSON-described setting.
    Simulate(SimulateArgs),
    /// Security margin and key rates for given success probabilities.
    Keyrate(KeyrateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AttackArg {
    /// Intercept/resend.
    Ir,
    /// Delayed measurement.
    Dm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TamperArg {
    /// Alice's standard states.
    Fixed,
    /// Eve chooses Alice's states.
    Eve,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Analytic,
    Optimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct CurveArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub n: u8,
    #[arg(long, value_enum, default_value_t = AttackArg::Ir)]
    pub attack: AttackArg,
    #[arg(long, value_enum, default_value_t = TamperArg::Fixed)]
    pub tamper: TamperArg,
    /// Number of evenly spaced η_avg points.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Analytic)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Restarts per grid point (default depends on the parameter count).
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Objective evaluations per restart.
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, clap::Args)]
pub struct CriticalArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub n: u8,
    #[arg(long, value_enum, default_value_t = TamperArg::Fixed)]
    pub tamper: TamperArg,
    #[arg(long, value_enum, default_value_t = AttackArg::Ir)]
    pub attack: AttackArg,
    /// Bob's success probability, in (0.5, 1].
    #[arg(long)]
    pub pb_target: f64,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub n: u8,
    #[arg(long)]
    pub attack_spec: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    pub rounds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct KeyrateArgs {
    #[arg(long)]
    pub pb: f64,
    #[arg(long)]
    pub pe: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("{0}")]
    Infeasible(String),
    #[error(transparent)]
    Core(#[from] qracsec_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Spec(_) => EXIT_USAGE,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Core(_) | CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

fn attack_kind(a: AttackArg) -> AttackKind {
    match a {
        AttackArg::Ir => AttackKind::InterceptResend,
        AttackArg::Dm => AttackKind::DelayedMeasurement,
    }
}

fn tamper(t: TamperArg) -> Tamper {
    match t {
        TamperArg::Fixed => Tamper::FixedStates,
        TamperArg::Eve => Tamper::EveControlsAlice,
    }
}

fn value_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Curve(a) => cmd_curve(a, stdout, stderr),
        Command::Critical(a) => cmd_critical(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout, stderr),
        Command::Keyrate(a) => cmd_keyrate(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn cmd_curve(a: &CurveArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let started = Instant::now();
    let n = a.n as usize;
    let spec = CurveSpec::uniform(n, attack_kind(a.attack), tamper(a.tamper), a.grid)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let mut invocation: Vec<String> = [
        "curve",
        "--n",
        &n.to_string(),
        "--attack",
        &value_name(a.attack),
        "--tamper",
        &value_name(a.tamper),
        "--grid",
        &a.grid.to_string(),
        "--mode",
        &value_name(a.mode),
        "--format",
        &value_name(a.format),
    ]
    .map(String::from)
    .to_vec();
    let mut parameters = json!({
        "n": n,
        "attack": value_name(a.attack),
        "tamper": value_name(a.tamper),
        "grid": a.grid,
        "mode": value_name(a.mode),
        "format": value_name(a.format),
    });

    let (points, seed) = match a.mode {
        ModeArg::Analytic => (analytic_curve(&spec)?, None),
        ModeArg::Optimize => {
            let config =
                config_for(&spec, a.seed, a.restarts, a.max_iterations).map_err(|e| CliError::Usage(e.to_string()))?;
            invocation.extend([
                "--seed".to_string(),
                config.seed.to_string(),
                "--restarts".to_string(),
                config.restarts.to_string(),
                "--max-iterations".to_string(),
                config.max_iterations.to_string(),
            ]);
            parameters["optimizer"] = json!({
                "restarts": config.restarts,
                "max_iterations": config.max_iterations,
                "xtol": config.xtol,
                "ftol": config.ftol,
                "initial_step": config.initial_step,
                "seed": config.seed,
            });
            (optimize_curve(&spec, &config)?, Some(config.seed))
        }
    };
    if let Some(out) = &a.out {
        invocation.extend(["--out".to_string(), out.display().to_string()]);
    }

    let manifest = RunManifest::new("curve", invocation, parameters, seed);
    let body = match a.format {
        FormatArg::Csv => curve_csv(&points),
        FormatArg::Json => curve_json(&points, &manifest),
    };
    match &a.out {
        Some(out) => write_with_manifest(out, &body, &manifest.with_duration(started.elapsed().as_secs_f64()))?,
        None => stdout.write_all(body.as_bytes())?,
    }

    let stalled = points.iter().filter(|p| !p.converged()).count();
    if stalled > 0 {
        writeln!(
            stderr,
            "warning: optimizer did not converge at {stalled} grid point(s); rows are flagged"
        )?;
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(EXIT_OK)
}

pub fn cmd_critical(a: &CriticalArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let n = a.n as usize;
    if !(a.pb_target > 0.5 && a.pb_target <= 1.0) {
        return Err(CliError::Usage(format!(
            "--pb-target {} is outside (0.5, 1]",
            a.pb_target
        )));
    }
    let t = tamper(a.tamper);
    let x = match critical_efficiency(n, t, attack_kind(a.attack), a.pb_target) {
        Ok(x) => x,
        Err(qracsec_core::Error::TargetUnreachable { target, curve_min }) => {
            return Err(CliError::Infeasible(format!(
                "no security in the domain: Eve's bound never drops to {} (its minimum is {})",
                fmt6(target),
                fmt6(curve_min)
            )));
        }
        Err(e) => return Err(e.into()),
    };
    writeln!(stdout, "{}", fmt6(x))?;
    if x == 1.0 / n as f64 {
        writeln!(
            stdout,
            "note: the bound is at or below the target on the whole domain; this is its left edge"
        )?;
    }
    if let Some(edge) = plateau_start(n, t) {
        if (x - edge).abs() < 1e-6 {
            writeln!(
                stdout,
                "note: plateau edge sqrt(2)-1 = {}; the bound stays at 0.750000 for all larger eta_avg",
                fmt6(edge)
            )?;
            writeln!(
                stdout,
                "note: 41.2% is sometimes quoted for this configuration; the closed form gives {}. \
                 The other candidate, where the bound meets the 3->1 quantum maximum, is the domain edge {}",
                fmt6(edge),
                fmt6(1.0 / 3.0)
            )?;
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_simulate(a: &SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let started = Instant::now();
    let spec = AttackSpec::load(&a.attack_spec)?;
    if spec.n != a.n as usize {
        return Err(CliError::Usage(format!(
            "--n {} does not match n = {} in {}",
            a.n,
            spec.n,
            a.attack_spec.display()
        )));
    }
    if a.rounds == 0 {
        return Err(CliError::Usage("--rounds must be at least 1".into()));
    }
    let config = spec.sim_config(a.rounds, a.seed)?;
    let report = simulate(&config)?;
    let predicted = config.predicted()?;
    let check = chi_square_consistency(&report, &predicted);

    let mut invocation: Vec<String> = vec![
        "simulate".into(),
        "--n".into(),
        a.n.to_string(),
        "--attack-spec".into(),
        a.attack_spec.display().to_string(),
        "--rounds".into(),
        a.rounds.to_string(),
        "--seed".into(),
        a.seed.to_string(),
    ];
    if let Some(out) = &a.out {
        invocation.extend(["--out".to_string(), out.display().to_string()]);
    }
    let parameters = json!({
        "n": a.n,
        "rounds": a.rounds,
        "seed": a.seed,
        "attack_spec": serde_json::to_value(&spec).map_err(SpecError::Json)?,
    });
    let manifest = RunManifest::new("simulate", invocation, parameters, Some(a.seed));
    let body = simulation_json(&report, &predicted, &check, &manifest);
    match &a.out {
        Some(out) => write_with_manifest(out, &body, &manifest.with_duration(started.elapsed().as_secs_f64()))?,
        None => stdout.write_all(body.as_bytes())?,
    }
    writeln!(
        stderr,
        "consistency with closed form: {} (chi-square {:.3}, {} dof)",
        if check.pass { "PASS" } else { "FAIL" },
        check.chi_square,
        check.degrees_of_freedom
    )?;
    Ok(EXIT_OK)
}

pub fn cmd_keyrate(a: &KeyrateArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    for (name, v) in [("--pb", a.pb), ("--pe", a.pe)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(CliError::Usage(format!("{name} {v} is outside [0, 1]")));
        }
    }
    let stats = ObservedStats {
        p_b: a.pb,
        p_e: a.pe,
        eta_avg: 1.0,
    };
    let margin = security_margin(&stats);
    writeln!(stdout, "margin P_B - P_E   {}", fmt6(margin))?;
    writeln!(stdout, "rate 1 - H(P_B)    {}", fmt6(key_rate(a.pb)?))?;
    writeln!(stdout, "rate 1 - H(P_E)    {}", fmt6(key_rate(a.pe)?))?;
    writeln!(stdout, "{}", if margin > 0.0 { "SECURE" } else { "INSECURE" })?;
    Ok(EXIT_OK)
}
