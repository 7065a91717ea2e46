//! Parameterized attack families and the multi-start search over them.
//!
//! A parameter vector lists Bloch angle pairs `(α, β)` for Alice's states
//! first (only when Eve controls Alice's device, one pair per input), then
//! either Eve's intercept/resend measurement angle pairs (one per `e`) or
//! her delayed-measurement generators (16 reals per `e`, see
//! [`hermitian_from_params`]).
//!
//! Measurements that act after the interaction (Eve's memory readout and
//! Bob's measurement in the delayed setting) are not searched over: for
//! fixed unitaries, each cell's optimum is the measurement along the signed
//! mean Bloch vector of the reduced states, with success `1/2 + |v|/2`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

// Unused whenever std is linked, which provides these methods inherently.
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::nelder_mead::minimize;
use super::{AttackKind, CurvePoint, OptimizerConfig, OptimizerMeta, Source, Tamper};
use crate::attack::{
    controlled_copy_generator, postselected_stats_dm, postselected_stats_ir, AttackModel, DmAttack, EfficiencyModel,
    IrAttack, ObservedStats,
};
use crate::error::{Error, Result};
use crate::protocol::{build_states, check_n, input_bit, EncodingParams};
use crate::qmath::{
    exp_i_hermitian, hermitian_from_params, projector_pair_from_bloch, unitary_from_generator, BlochAngles, Mat4, C64,
};

const GENERATOR_LEN: usize = 16;

/// One point of one attack family: everything the objective needs.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchProblem {
    n: usize,
    kind: AttackKind,
    tamper: Tamper,
    model: EfficiencyModel,
    fixed_bloch: Vec<[f64; 3]>,
    warm_start: Option<Vec<f64>>,
}

/// Result of a single restart.
#[derive(Clone, Debug, PartialEq)]
pub struct RestartOutcome {
    pub index: usize,
    pub params: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl SearchProblem {
    pub fn new(n: usize, kind: AttackKind, tamper: Tamper, eta_avg: f64) -> Result<Self> {
        let n = check_n(n)?;
        let model = EfficiencyModel::from_eta_avg(n, eta_avg)?;
        let fixed_bloch = match tamper {
            Tamper::FixedStates => build_states(&fixed_encoding(n))?
                .iter()
                .map(|s| s.bloch_vector())
                .collect(),
            Tamper::EveControlsAlice => Vec::new(),
        };
        Ok(SearchProblem {
            n,
            kind,
            tamper,
            model,
            fixed_bloch,
            warm_start: None,
        })
    }

    /// Makes restart 0 start from `params` instead of a random point.
    pub fn with_warm_start(mut self, params: Vec<f64>) -> Result<Self> {
        if params.len() != self.dim() {
            return Err(Error::SizeMismatch {
                what: "warm start parameters",
                expected: self.dim(),
                got: params.len(),
            });
        }
        self.warm_start = Some(params);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> AttackKind {
        self.kind
    }

    pub fn tamper(&self) -> Tamper {
        self.tamper
    }

    pub fn model(&self) -> &EfficiencyModel {
        &self.model
    }

    pub fn eta_avg(&self) -> f64 {
        self.model.eta_avg()
    }

    fn state_params(&self) -> usize {
        match self.tamper {
            Tamper::FixedStates => 0,
            Tamper::EveControlsAlice => 2 << self.n,
        }
    }

    /// Number of real parameters.
    pub fn dim(&self) -> usize {
        self.state_params()
            + match self.kind {
                AttackKind::InterceptResend => 2 * self.n,
                AttackKind::DelayedMeasurement => GENERATOR_LEN * self.n,
            }
    }

    fn angle_params(&self) -> usize {
        match self.kind {
            AttackKind::InterceptResend => self.dim(),
            AttackKind::DelayedMeasurement => self.state_params(),
        }
    }

    /// Uniform sample from the search box: `α ∈ [0, π]`, `β ∈ [−π, π)`,
    /// generator entries in `[−π, π]`.
    pub fn random_start(&self, rng: &mut impl Rng) -> Vec<f64> {
        let angles = self.angle_params();
        (0..self.dim())
            .map(|i| {
                if i < angles && i % 2 == 0 {
                    rng.random_range(0.0..=PI)
                } else if i < angles {
                    rng.random_range(-PI..PI)
                } else {
                    rng.random_range(-PI..=PI)
                }
            })
            .collect()
    }

    /// Folds every angle pair into `α ∈ [0, π]`, `β ∈ [−π, π)`. Generator
    /// entries are left alone; the exponential is not periodic in them.
    pub fn wrap(&self, params: &[f64]) -> Vec<f64> {
        let mut out = params.to_vec();
        for pair in out[..self.angle_params()].chunks_exact_mut(2) {
            if let Ok(a) = BlochAngles::new(pair[0], pair[1]) {
                pair[0] = a.alpha();
                pair[1] = a.beta();
            }
        }
        out
    }

    fn state_bloch(&self, params: &[f64]) -> Vec<[f64; 3]> {
        match self.tamper {
            Tamper::FixedStates => self.fixed_bloch.clone(),
            Tamper::EveControlsAlice => params[..self.state_params()]
                .chunks_exact(2)
                .map(|p| bloch_from_angles(p[0], p[1]))
                .collect(),
        }
    }

    /// The objective, evaluated on Bloch vectors without building attack
    /// objects. Intercept/resend: `P_E` (Bob mirrors Eve, so `P_B = P_E`).
    /// Delayed measurement: `min(P_E, P_B)`, so the search cannot trade
    /// Bob's success for Eve's.
    pub fn objective(&self, params: &[f64]) -> f64 {
        if params.len() != self.dim() || params.iter().any(|p| !p.is_finite()) {
            return f64::NAN;
        }
        match self.kind {
            AttackKind::InterceptResend => self.ir_objective(params),
            AttackKind::DelayedMeasurement => self.dm_objective(params),
        }
    }

    fn ir_objective(&self, params: &[f64]) -> f64 {
        let n = self.n;
        let bloch = self.state_bloch(params);
        let means = signed_means(&bloch, n);
        let eve = &params[self.state_params()..];
        let mut acc = 0.0;
        for e in 0..n {
            let m = bloch_from_angles(eve[2 * e], eve[2 * e + 1]);
            for (b, v) in means.iter().enumerate() {
                acc += self.model.weight(e, b) * dot(m, *v);
            }
        }
        0.5 + 0.5 * acc / self.model.total_weight()
    }

    fn dm_objective(&self, params: &[f64]) -> f64 {
        let n = self.n;
        let kets: Vec<[C64; 2]> = self
            .state_bloch(params)
            .into_iter()
            .map(|r| BlochAngles::from_vector(r).ket())
            .collect();
        let gens = &params[self.state_params()..];
        let mut eve_acc = 0.0;
        let mut bob_acc = 0.0;
        let mut bob_bloch = vec![[0.0; 3]; kets.len()];
        let mut eve_bloch = vec![[0.0; 3]; kets.len()];
        for e in 0..n {
            let mut g = [0.0; GENERATOR_LEN];
            g.copy_from_slice(&gens[GENERATOR_LEN * e..GENERATOR_LEN * (e + 1)]);
            let u = match hermitian_from_params(&g) {
                Ok(h) => exp_i_hermitian(&h),
                Err(_) => return f64::NAN,
            };
            for (x, ket) in kets.iter().enumerate() {
                let (rb, re) = reduced_blochs(&u, ket);
                bob_bloch[x] = rb;
                eve_bloch[x] = re;
            }
            let vb = signed_means(&bob_bloch, n);
            let ve = signed_means(&eve_bloch, n);
            for b in 0..n {
                let w = self.model.weight(e, b);
                bob_acc += w * norm(vb[b]);
                eve_acc += w * norm(ve[b]);
            }
        }
        let total = self.model.total_weight();
        let p_e = 0.5 + 0.5 * eve_acc / total;
        let p_b = 0.5 + 0.5 * bob_acc / total;
        p_e.min(p_b)
    }

    fn encoding(&self, params: &[f64]) -> Result<EncodingParams> {
        match self.tamper {
            Tamper::FixedStates => Ok(fixed_encoding(self.n)),
            Tamper::EveControlsAlice => Ok(EncodingParams::General(
                params[..self.state_params()]
                    .chunks_exact(2)
                    .map(|p| BlochAngles::new(p[0], p[1]))
                    .collect::<Result<Vec<_>>>()?,
            )),
        }
    }

    /// Builds the attack the parameters describe.
    pub fn attack(&self, params: &[f64]) -> Result<AttackModel> {
        if params.len() != self.dim() {
            return Err(Error::SizeMismatch {
                what: "search parameters",
                expected: self.dim(),
                got: params.len(),
            });
        }
        let encoding = self.encoding(params)?;
        let rest = &params[self.state_params()..];
        match self.kind {
            AttackKind::InterceptResend => {
                let eve = rest
                    .chunks_exact(2)
                    .map(|p| BlochAngles::new(p[0], p[1]).map(projector_pair_from_bloch))
                    .collect::<Result<Vec<_>>>()?;
                Ok(AttackModel::InterceptResend(IrAttack::mirrored(encoding, eve)?))
            }
            AttackKind::DelayedMeasurement => {
                let unitaries = rest
                    .chunks_exact(GENERATOR_LEN)
                    .map(|g| {
                        let mut arr = [0.0; GENERATOR_LEN];
                        arr.copy_from_slice(g);
                        unitary_from_generator(&arr)
                    })
                    .collect::<Result<Vec<Mat4>>>()?;
                Ok(AttackModel::DelayedMeasurement(DmAttack::with_optimal_measurements(
                    encoding, unitaries,
                )?))
            }
        }
    }

    /// Statistics of [`attack`](Self::attack), computed through the attack
    /// module rather than the search's shortcut.
    pub fn evaluate(&self, params: &[f64]) -> Result<ObservedStats> {
        match self.attack(params)? {
            AttackModel::InterceptResend(a) => postselected_stats_ir(&a, &self.model),
            AttackModel::DelayedMeasurement(a) => postselected_stats_dm(&a, &self.model),
        }
    }

    /// The objective recomputed from [`evaluate`](Self::evaluate).
    pub fn reevaluate(&self, params: &[f64]) -> Result<f64> {
        let stats = self.evaluate(params)?;
        Ok(match self.kind {
            AttackKind::InterceptResend => stats.p_e,
            AttackKind::DelayedMeasurement => stats.p_e.min(stats.p_b),
        })
    }

    /// Delayed-measurement parameters realizing the intercept/resend attack
    /// `ir_params` of this (intercept/resend) problem: same states, and a
    /// controlled copy of Alice's qubit in Eve's basis for each `e`.
    pub fn embed_ir_params(&self, ir_params: &[f64]) -> Result<Vec<f64>> {
        if self.kind != AttackKind::InterceptResend {
            return Err(Error::InvalidConfig("embedding needs an intercept/resend problem"));
        }
        if ir_params.len() != self.dim() {
            return Err(Error::SizeMismatch {
                what: "intercept/resend parameters",
                expected: self.dim(),
                got: ir_params.len(),
            });
        }
        let split = self.state_params();
        let mut out = ir_params[..split].to_vec();
        for p in ir_params[split..].chunks_exact(2) {
            let eve = projector_pair_from_bloch(BlochAngles::new(p[0], p[1])?);
            out.extend_from_slice(&controlled_copy_generator(&eve));
        }
        Ok(out)
    }

    /// Runs restart `index`, seeded from `config.seed` on stream `stream`.
    /// Each restart repeats the simplex search from its last best point
    /// until a fresh simplex no longer improves the objective by more than
    /// `ftol`, or the evaluation budget is spent.
    pub fn run_restart(&self, config: &OptimizerConfig, index: usize, stream: u64) -> RestartOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        let mut x = match (&self.warm_start, index) {
            (Some(w), 0) => w.clone(),
            _ => self.random_start(&mut rng),
        };
        let mut neg = |p: &[f64]| -self.objective(p);
        let mut best = neg(&x);
        let mut evaluations = 1;
        let mut converged = false;
        while evaluations < config.max_iterations {
            let local = minimize(
                &mut neg,
                &x,
                config.initial_step,
                config.max_iterations - evaluations,
                config.xtol,
                config.ftol,
            );
            evaluations += local.evaluations;
            converged = local.converged;
            let improved = local.fx < best;
            let gain = best - local.fx;
            if improved {
                best = local.fx;
                x = self.wrap(&local.x);
            }
            if !local.converged || gain <= config.ftol {
                break;
            }
        }
        RestartOutcome {
            index,
            params: self.wrap(&x),
            objective: -best,
            converged,
            evaluations,
        }
    }

    /// All restarts in sequence. Point `point` uses streams
    /// `point·2³² + restart`, so results do not depend on how the work is
    /// split.
    pub fn run_all(&self, config: &OptimizerConfig, point: usize) -> Vec<RestartOutcome> {
        (0..config.restarts)
            .map(|r| self.run_restart(config, r, restart_stream(point, r)))
            .collect()
    }

    /// Picks the best restart and re-evaluates it through the attack module.
    pub fn finish(&self, outcomes: &[RestartOutcome]) -> Result<CurvePoint> {
        let best = select_best(outcomes).ok_or(Error::InvalidConfig("no restarts were run"))?;
        let stats = self.evaluate(&best.params)?;
        Ok(CurvePoint {
            eta_avg: self.eta_avg(),
            pe_max: best.objective,
            source: Source::Optimized,
            optimizer: Some(OptimizerMeta {
                restarts_used: outcomes.len(),
                best_restart: best.index,
                best_objective: best.objective,
                converged: best.converged,
                evaluations: outcomes.iter().map(|o| o.evaluations).sum(),
                stats,
                params: best.params.clone(),
            }),
        })
    }

    /// Sequential multi-start search for this point.
    pub fn solve(&self, config: &OptimizerConfig, point: usize) -> Result<CurvePoint> {
        config.validate()?;
        self.finish(&self.run_all(config, point))
    }
}

/// RNG stream for restart `restart` of grid point `point`.
pub fn restart_stream(point: usize, restart: usize) -> u64 {
    ((point as u64) << 32) | (restart as u64 & 0xffff_ffff)
}

/// Highest objective; ties go to the lowest restart index. NaN never wins.
pub fn select_best(outcomes: &[RestartOutcome]) -> Option<&RestartOutcome> {
    let mut best: Option<&RestartOutcome> = None;
    for o in outcomes {
        if o.objective.is_nan() {
            continue;
        }
        best = match best {
            Some(b) if b.objective > o.objective || (b.objective == o.objective && b.index < o.index) => Some(b),
            _ => Some(o),
        };
    }
    best
}

pub(crate) fn fixed_encoding(n: usize) -> EncodingParams {
    if n == 2 {
        EncodingParams::Fixed2to1
    } else {
        EncodingParams::Fixed3to1
    }
}

fn bloch_from_angles(alpha: f64, beta: f64) -> [f64; 3] {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    [sa * cb, sa * sb, ca]
}

fn signed_means(bloch: &[[f64; 3]], n: usize) -> Vec<[f64; 3]> {
    let inv = 1.0 / bloch.len() as f64;
    (0..n)
        .map(|b| {
            let mut v = [0.0; 3];
            for (x, r) in bloch.iter().enumerate() {
                let s = if input_bit(x, b, n) == 0 { inv } else { -inv };
                v[0] += s * r[0];
                v[1] += s * r[1];
                v[2] += s * r[2];
            }
            v
        })
        .collect()
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Bloch vectors of both halves of `U(|φ⟩ ⊗ |0⟩)`.
fn reduced_blochs(u: &Mat4, ket: &[C64; 2]) -> ([f64; 3], [f64; 3]) {
    let psi: [C64; 4] = core::array::from_fn(|r| u.0[r][0] * ket[0] + u.0[r][2] * ket[1]);
    // Amplitude of |i k⟩ sits at 2i + k; Bob holds i, Eve holds k.
    let bob_01 = psi[0] * psi[2].conj() + psi[1] * psi[3].conj();
    let bob_z = psi[0].norm_sqr() + psi[1].norm_sqr() - psi[2].norm_sqr() - psi[3].norm_sqr();
    let eve_01 = psi[0] * psi[1].conj() + psi[2] * psi[3].conj();
    let eve_z = psi[0].norm_sqr() + psi[2].norm_sqr() - psi[1].norm_sqr() - psi[3].norm_sqr();
    // ρ[1][0] = conj(ρ[0][1]); Bloch x = 2 Re ρ[1][0], y = 2 Im ρ[1][0].
    (
        [2.0 * bob_01.re, -2.0 * bob_01.im, bob_z],
        [2.0 * eve_01.re, -2.0 * eve_01.im, eve_z],
    )
}
