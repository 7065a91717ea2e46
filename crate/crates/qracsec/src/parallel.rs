//! Rayon drivers for the curve search and the simulator. Both reproduce the
//! sequential core results exactly: restart seeds and round streams are
//! fixed by index, and reductions pick by index.

use rayon::prelude::*;

use qracsec_core::bounds::{
    dm_warm_start, AttackKind, CurvePoint, CurveSpec, OptimizerConfig, RestartOutcome, SearchProblem,
};
use qracsec_core::sim::{report_from_counts, run_range, SimConfig, SimCounts, SimReport};
use qracsec_core::{Error, Result};

/// Rounds per simulation work unit.
const SIM_CHUNK: u64 = 1 << 16;

/// Optimizer settings matched to the curve's parameter count, with optional
/// overrides.
pub fn config_for(
    spec: &CurveSpec,
    seed: u64,
    restarts: Option<usize>,
    max_iterations: Option<usize>,
) -> Result<OptimizerConfig> {
    let dim = SearchProblem::new(spec.n, spec.attack_kind, spec.tamper, 1.0)?.dim();
    let mut config = OptimizerConfig::for_dimension(dim, seed);
    if let Some(r) = restarts {
        config.restarts = r;
    }
    if let Some(m) = max_iterations {
        config.max_iterations = m;
    }
    config.validate()?;
    Ok(config)
}

/// Same result as `qracsec_core::bounds::optimize`, with grid points and
/// restarts spread over the rayon pool.
pub fn optimize_curve(spec: &CurveSpec, config: &OptimizerConfig) -> Result<Vec<CurvePoint>> {
    config.validate()?;
    let points = spec.grid.len();
    let problems: Vec<SearchProblem> = match spec.attack_kind {
        AttackKind::InterceptResend => (0..points).map(|i| spec.problem(i)).collect::<Result<_>>()?,
        AttackKind::DelayedMeasurement => {
            let ir_dim = SearchProblem::new(spec.n, AttackKind::InterceptResend, spec.tamper, 1.0)?.dim();
            let ir_config = OptimizerConfig::for_dimension(ir_dim, config.seed);
            (0..points)
                .into_par_iter()
                .map(|i| dm_warm_start(spec, i, &ir_config))
                .collect::<Result<_>>()?
        }
    };
    let outcomes: Vec<RestartOutcome> = (0..points * config.restarts)
        .into_par_iter()
        .map(|k| {
            let (i, r) = (k / config.restarts, k % config.restarts);
            problems[i].run_restart(config, r, qracsec_core::bounds::restart_stream(i, r))
        })
        .collect();
    problems
        .iter()
        .zip(outcomes.chunks(config.restarts))
        .map(|(p, outs)| p.finish(outs))
        .collect()
}

/// Same result as `qracsec_core::sim::run`, in chunks over the rayon pool.
pub fn simulate(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let chunks = config.rounds.div_ceil(SIM_CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * SIM_CHUNK;
            run_range(config, start..(start + SIM_CHUNK).min(config.rounds))
        })
        .try_reduce(SimCounts::default, |a, b| Ok(a.merge(b)))?;
    if counts.emitted != config.rounds {
        return Err(Error::InvalidConfig("simulation lost rounds"));
    }
    Ok(report_from_counts(counts, config.attack.is_some()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qracsec_core::bounds::{optimize, Tamper};
    use qracsec_core::protocol::{EncodingParams, RacProtocol};
    use qracsec_core::sim::run;

    #[test]
    fn parallel_optimizer_matches_sequential() {
        let spec = CurveSpec::uniform(2, AttackKind::InterceptResend, Tamper::EveControlsAlice, 3).unwrap();
        let config = OptimizerConfig {
            restarts: 4,
            seed: 17,
            ..OptimizerConfig::default()
        };
        assert_eq!(
            optimize_curve(&spec, &config).unwrap(),
            optimize(&spec, &config).unwrap()
        );
    }

    #[test]
    fn parallel_simulation_matches_sequential() {
        let proto = RacProtocol::honest(&EncodingParams::Fixed3to1).unwrap();
        let config = SimConfig::honest(proto, 0.6, 3 * SIM_CHUNK + 17, 5);
        assert_eq!(simulate(&config).unwrap(), run(&config).unwrap());
    }
}
