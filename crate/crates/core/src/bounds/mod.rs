//! Bounds on Eve's post-selected guessing probability as a function of the
//! observed detector efficiency: closed forms, a multi-start simplex search
//! over attack parameters, and the critical efficiency below which Eve
//! matches Bob.

pub mod analytic;
mod critical;
pub mod nelder_mead;
mod search;

use alloc::vec::Vec;

pub use analytic::{
    analytic_pe_max, analytic_pe_max_2to1, analytic_pe_max_3to1_fixed, analytic_pe_max_3to1_tampered,
    beta_symmetry_3to1, tampered_breakpoint_eta,
};
pub use critical::{critical_efficiency, plateau_start, CRITICAL_TOL};
pub use search::{restart_stream, select_best, RestartOutcome, SearchProblem};

use crate::attack::ObservedStats;
use crate::error::{Error, Result};
use crate::protocol::check_n;

/// Which eavesdropping channel the curve bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttackKind {
    InterceptResend,
    DelayedMeasurement,
}

/// Whether Eve also picks Alice's encoded states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tamper {
    FixedStates,
    EveControlsAlice,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Source {
    Analytic,
    Optimized,
}

/// A configuration and the `η_avg` values to evaluate it at.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveSpec {
    pub n: usize,
    pub attack_kind: AttackKind,
    pub tamper: Tamper,
    pub grid: Vec<f64>,
}

/// Number of grid points when none is requested.
pub const DEFAULT_GRID_POINTS: usize = 101;

/// `[1/n, 1]`, the `η_avg` range reachable with `η ∈ [0, 1]`.
pub fn domain(n: usize) -> Result<(f64, f64)> {
    Ok((1.0 / check_n(n)? as f64, 1.0))
}

impl CurveSpec {
    pub fn new(n: usize, attack_kind: AttackKind, tamper: Tamper, grid: Vec<f64>) -> Result<Self> {
        let (lo, hi) = domain(n)?;
        for &x in &grid {
            if !x.is_finite() {
                return Err(Error::NonFinite("grid point"));
            }
            if x < lo - 1e-12 || x > hi + 1e-12 {
                return Err(Error::OutOfDomain {
                    what: "eta_avg",
                    value: x,
                    lo,
                    hi,
                });
            }
        }
        Ok(CurveSpec {
            n,
            attack_kind,
            tamper,
            grid,
        })
    }

    /// `points` evenly spaced values covering the whole domain.
    pub fn uniform(n: usize, attack_kind: AttackKind, tamper: Tamper, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidConfig("a uniform grid needs at least 2 points"));
        }
        let (lo, hi) = domain(n)?;
        let step = (hi - lo) / (points - 1) as f64;
        let grid = (0..points)
            .map(|i| if i + 1 == points { hi } else { lo + i as f64 * step })
            .collect();
        Self::new(n, attack_kind, tamper, grid)
    }

    /// The search problem at grid point `i`.
    pub fn problem(&self, i: usize) -> Result<SearchProblem> {
        let x = *self.grid.get(i).ok_or(Error::SizeMismatch {
            what: "grid index",
            expected: self.grid.len(),
            got: i,
        })?;
        SearchProblem::new(self.n, self.attack_kind, self.tamper, x)
    }
}

/// Diagnostics attached to an optimized point.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerMeta {
    pub restarts_used: usize,
    pub best_restart: usize,
    pub best_objective: f64,
    pub converged: bool,
    pub evaluations: usize,
    /// Statistics of the best attack, recomputed through the attack module.
    pub stats: ObservedStats,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub eta_avg: f64,
    pub pe_max: f64,
    pub source: Source,
    pub optimizer: Option<OptimizerMeta>,
}

impl CurvePoint {
    /// Analytic points always count as converged.
    pub fn converged(&self) -> bool {
        self.optimizer.as_ref().map_or(true, |m| m.converged)
    }
}

/// Multi-start search settings. `max_iterations` is the objective
/// evaluation budget of a single restart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub xtol: f64,
    pub ftol: f64,
    pub initial_step: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 32,
            max_iterations: 20_000,
            xtol: 1e-7,
            ftol: 1e-12,
            initial_step: 0.5,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    /// Defaults scaled to the number of parameters: 32 restarts up to 12
    /// parameters, 128 beyond, with a larger budget for larger problems.
    pub fn for_dimension(dim: usize, seed: u64) -> Self {
        let base = Self::default();
        if dim <= 12 {
            OptimizerConfig { seed, ..base }
        } else {
            OptimizerConfig {
                restarts: 128,
                max_iterations: 2_000 * dim,
                seed,
                ..base
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1"));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.xtol) || !positive(self.ftol) || !positive(self.initial_step) {
            return Err(Error::InvalidConfig("tolerances and step must be positive and finite"));
        }
        Ok(())
    }
}

/// Closed-form curve. Delayed-measurement specs get the intercept/resend
/// values.
pub fn analytic_curve(spec: &CurveSpec) -> Result<Vec<CurvePoint>> {
    spec.grid
        .iter()
        .map(|&x| {
            Ok(CurvePoint {
                eta_avg: x,
                pe_max: analytic_pe_max(spec.n, spec.tamper, x)?,
                source: Source::Analytic,
                optimizer: None,
            })
        })
        .collect()
}

/// Optimized intercept/resend curve.
pub fn optimize_ir(spec: &CurveSpec, config: &OptimizerConfig) -> Result<Vec<CurvePoint>> {
    if spec.attack_kind != AttackKind::InterceptResend {
        return Err(Error::InvalidConfig("optimize_ir needs an intercept/resend spec"));
    }
    config.validate()?;
    (0..spec.grid.len())
        .map(|i| spec.problem(i)?.solve(config, i))
        .collect()
}

/// The intercept/resend optimum at a grid point, embedded as a warm start
/// for the delayed-measurement search there.
pub fn dm_warm_start(spec: &CurveSpec, i: usize, ir_config: &OptimizerConfig) -> Result<SearchProblem> {
    let dm = spec.problem(i)?;
    let ir = SearchProblem::new(spec.n, AttackKind::InterceptResend, spec.tamper, dm.eta_avg())?;
    let ir_point = ir.solve(ir_config, i)?;
    let params = ir_point
        .optimizer
        .map(|m| m.params)
        .ok_or(Error::InvalidConfig("intercept/resend search returned no parameters"))?;
    dm.with_warm_start(ir.embed_ir_params(&params)?)
}

/// Optimized delayed-measurement curve. Each point first solves the
/// intercept/resend problem and seeds restart 0 with its embedding, so the
/// result never falls below the intercept/resend value.
pub fn optimize_dm(spec: &CurveSpec, config: &OptimizerConfig) -> Result<Vec<CurvePoint>> {
    if spec.attack_kind != AttackKind::DelayedMeasurement {
        return Err(Error::InvalidConfig("optimize_dm needs a delayed-measurement spec"));
    }
    config.validate()?;
    let ir_dim = SearchProblem::new(spec.n, AttackKind::InterceptResend, spec.tamper, 1.0)?.dim();
    let ir_config = OptimizerConfig::for_dimension(ir_dim, config.seed);
    (0..spec.grid.len())
        .map(|i| dm_warm_start(spec, i, &ir_config)?.solve(config, i))
        .collect()
}

/// Dispatches on the curve's attack kind.
pub fn optimize(spec: &CurveSpec, config: &OptimizerConfig) -> Result<Vec<CurvePoint>> {
    match spec.attack_kind {
        AttackKind::InterceptResend => optimize_ir(spec, config),
        AttackKind::DelayedMeasurement => optimize_dm(spec, config),
    }
}
