//! Round-by-round Monte Carlo of the protocol, honest or under attack, with
//! detector-click post-selection.
//!
//! Round `i` draws all of its randomness from ChaCha8 stream `i` of the
//! configured seed, so any split of the rounds into ranges gives the same
//! counts.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

// Unused whenever std is linked, which provides these methods inherently.
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attack::{AttackModel, DmAttack, EfficiencyModel, IrAttack, ObservedStats};
use crate::error::{check_probability, Error, Result};
use crate::protocol::{input_bit, RacProtocol};

/// Pass threshold of [`chi_square_consistency`], in standard errors.
pub const CONSISTENCY_SIGMAS: f64 = 4.0;

/// How delayed-measurement rounds draw the two outcomes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum DmSampling {
    /// Bob's outcome from his marginal, then Eve's from the conditional.
    #[default]
    BobThenEve,
    /// Both outcomes at once from the joint distribution.
    Joint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    /// Alice's states and Bob's measurements in honest rounds.
    pub protocol: RacProtocol,
    /// Eavesdropper; its own encoding and measurements replace the
    /// protocol's while it is present.
    pub attack: Option<AttackModel>,
    pub rounds: u64,
    pub seed: u64,
    /// Click probability: every round when honest, `e ≠ b` rounds under attack.
    pub eta: f64,
    pub dm_sampling: DmSampling,
}

impl SimConfig {
    pub fn honest(protocol: RacProtocol, eta: f64, rounds: u64, seed: u64) -> Self {
        SimConfig {
            protocol,
            attack: None,
            rounds,
            seed,
            eta,
            dm_sampling: DmSampling::default(),
        }
    }

    pub fn attacked(protocol: RacProtocol, attack: AttackModel, eta: f64, rounds: u64, seed: u64) -> Self {
        SimConfig {
            attack: Some(attack),
            ..Self::honest(protocol, eta, rounds, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidConfig("rounds must be at least 1"));
        }
        check_probability("eta", self.eta)?;
        if let Some(a) = &self.attack {
            if a.n() != self.protocol.n() {
                return Err(Error::SizeMismatch {
                    what: "attack n",
                    expected: self.protocol.n(),
                    got: a.n(),
                });
            }
        }
        Ok(())
    }

    /// Closed-form statistics of the simulated setting. Honest rounds have
    /// no eavesdropper; `p_e` is then reported as a blind guess, 1/2.
    pub fn predicted(&self) -> Result<ObservedStats> {
        self.validate()?;
        match &self.attack {
            None => Ok(ObservedStats {
                p_b: crate::protocol::success_probability(&self.protocol),
                p_e: 0.5,
                eta_avg: self.eta,
            }),
            Some(a) => a.postselected_stats(&EfficiencyModel::new(a.n(), self.eta)?),
        }
    }
}

/// Exact integer tallies; ranges merge by addition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SimCounts {
    pub emitted: u64,
    pub clicked: u64,
    pub bob_correct: u64,
    pub eve_correct: u64,
    /// Clicked rounds in which Eve guessed Bob's setting.
    pub matched_setting: u64,
}

impl SimCounts {
    pub fn merge(self, other: SimCounts) -> SimCounts {
        SimCounts {
            emitted: self.emitted + other.emitted,
            clicked: self.clicked + other.clicked,
            bob_correct: self.bob_correct + other.bob_correct,
            eve_correct: self.eve_correct + other.eve_correct,
            matched_setting: self.matched_setting + other.matched_setting,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StandardErrors {
    pub p_b: f64,
    pub p_e: f64,
    pub eta_avg: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimReport {
    pub emitted_rounds: u64,
    pub clicked_rounds: u64,
    pub empirical: ObservedStats,
    /// Binomial standard errors of the empirical frequencies.
    pub standard_errors: StandardErrors,
    pub sifted_key_agreement: f64,
    /// `None` in honest runs.
    pub eve_key_agreement: Option<f64>,
    /// Fraction of clicked rounds with `e = b`; `None` in honest runs.
    pub matched_setting_fraction: Option<f64>,
    pub counts: SimCounts,
    pub attacked: bool,
}

/// Per-round outcome distributions, tabulated once per run.
enum Tables {
    Honest {
        /// `[x][b]`: P(Bob outputs 0).
        bob0: Vec<Vec<f64>>,
    },
    InterceptResend {
        /// `[x][e]`: P(Eve outputs 0).
        eve0: Vec<Vec<f64>>,
        /// `[e][b][j]`: P(Bob outputs 0 | Eve resent eigenstate `j`).
        bob0: Vec<Vec<[f64; 2]>>,
    },
    DelayedMeasurement {
        /// `[x][e][b]`: joint probabilities of (Bob, Eve) = 00, 01, 10, 11.
        joint: Vec<Vec<Vec<[f64; 4]>>>,
    },
}

struct Sampler {
    n: usize,
    inputs: usize,
    model: EfficiencyModel,
    eta: f64,
    tables: Tables,
    dm_sampling: DmSampling,
}

impl Sampler {
    fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let n = config.protocol.n();
        let tables = match &config.attack {
            None => honest_tables(&config.protocol),
            Some(AttackModel::InterceptResend(a)) => ir_tables(a),
            Some(AttackModel::DelayedMeasurement(a)) => dm_tables(a)?,
        };
        Ok(Sampler {
            n,
            inputs: 1 << n,
            model: EfficiencyModel::new(n, config.eta)?,
            eta: config.eta,
            tables,
            dm_sampling: config.dm_sampling,
        })
    }

    fn round(&self, rng: &mut ChaCha8Rng, counts: &mut SimCounts) {
        counts.emitted += 1;
        let x = rng.random_range(0..self.inputs);
        let b = rng.random_range(0..self.n);
        let truth = input_bit(x, b, self.n);
        match &self.tables {
            Tables::Honest { bob0 } => {
                if rng.random::<f64>() >= self.eta {
                    return;
                }
                counts.clicked += 1;
                let bob = outcome(rng, bob0[x][b]);
                counts.bob_correct += (bob == truth) as u64;
            }
            Tables::InterceptResend { eve0, bob0 } => {
                let e = rng.random_range(0..self.n);
                let eve = outcome(rng, eve0[x][e]);
                if rng.random::<f64>() >= self.model.weight(e, b) {
                    return;
                }
                let bob = outcome(rng, bob0[e][b][eve]);
                self.tally(counts, e, b, truth, bob, eve);
            }
            Tables::DelayedMeasurement { joint } => {
                let e = rng.random_range(0..self.n);
                if rng.random::<f64>() >= self.model.weight(e, b) {
                    return;
                }
                let p = &joint[x][e][b];
                let (bob, eve) = match self.dm_sampling {
                    DmSampling::BobThenEve => {
                        let bob_zero = p[0] + p[1];
                        let bob = outcome(rng, bob_zero);
                        let (p0, p1) = if bob == 0 { (p[0], p[1]) } else { (p[2], p[3]) };
                        let total = p0 + p1;
                        let eve0 = if total > 0.0 { p0 / total } else { 0.5 };
                        (bob, outcome(rng, eve0))
                    }
                    DmSampling::Joint => {
                        let u: f64 = rng.random();
                        let mut acc = 0.0;
                        let mut k = 3;
                        for (i, q) in p.iter().enumerate() {
                            acc += q;
                            if u < acc {
                                k = i;
                                break;
                            }
                        }
                        (k >> 1, k & 1)
                    }
                };
                self.tally(counts, e, b, truth, bob, eve);
            }
        }
    }

    fn tally(&self, counts: &mut SimCounts, e: usize, b: usize, truth: usize, bob: usize, eve: usize) {
        counts.clicked += 1;
        counts.bob_correct += (bob == truth) as u64;
        counts.eve_correct += (eve == truth) as u64;
        counts.matched_setting += (e == b) as u64;
    }
}

fn outcome(rng: &mut ChaCha8Rng, p_zero: f64) -> usize {
    if rng.random::<f64>() < p_zero {
        0
    } else {
        1
    }
}

fn honest_tables(protocol: &RacProtocol) -> Tables {
    let bob = protocol.bob_measurements();
    let bob0 = protocol
        .states()
        .iter()
        .map(|rho| bob.iter().map(|m| m.probability(0, rho)).collect())
        .collect();
    Tables::Honest { bob0 }
}

fn ir_tables(attack: &IrAttack) -> Tables {
    let eve = attack.eve_measurements();
    let eve0 = attack
        .states()
        .iter()
        .map(|rho| eve.iter().map(|m| m.probability(0, rho)).collect())
        .collect();
    let bob0 = attack
        .bob_measurements()
        .iter()
        .zip(eve)
        .map(|(row, m_eve)| {
            row.iter()
                .map(|m_bob| core::array::from_fn(|j| m_bob.probability(0, &m_eve.eigenstate(j))))
                .collect()
        })
        .collect();
    Tables::InterceptResend { eve0, bob0 }
}

fn dm_tables(attack: &DmAttack) -> Result<Tables> {
    let n = attack.n();
    let mut joint = vec![vec![vec![[0.0; 4]; n]; n]; 1 << n];
    for (x, per_x) in joint.iter_mut().enumerate() {
        for (e, per_e) in per_x.iter_mut().enumerate() {
            for (b, cell) in per_e.iter_mut().enumerate() {
                for (k, p) in cell.iter_mut().enumerate() {
                    *p = attack.joint_outcome_probability(x, e, b, k >> 1, k & 1)?;
                }
            }
        }
    }
    Ok(Tables::DelayedMeasurement { joint })
}

/// Counts for rounds `range` of `config`.
pub fn run_range(config: &SimConfig, range: Range<u64>) -> Result<SimCounts> {
    let sampler = Sampler::new(config)?;
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let mut counts = SimCounts::default();
    for i in range {
        let mut rng = base.clone();
        rng.set_stream(i);
        sampler.round(&mut rng, &mut counts);
    }
    Ok(counts)
}

/// Runs every round of `config`.
pub fn run(config: &SimConfig) -> Result<SimReport> {
    let counts = run_range(config, 0..config.rounds)?;
    Ok(report_from_counts(counts, config.attack.is_some()))
}

/// Frequencies and binomial errors from raw tallies.
pub fn report_from_counts(counts: SimCounts, attacked: bool) -> SimReport {
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let se = |p: f64, trials: u64| {
        if trials == 0 {
            0.0
        } else {
            (p * (1.0 - p) / trials as f64).sqrt()
        }
    };
    let p_b = ratio(counts.bob_correct, counts.clicked);
    let p_e = if attacked {
        ratio(counts.eve_correct, counts.clicked)
    } else {
        0.5
    };
    let eta_avg = ratio(counts.clicked, counts.emitted);
    SimReport {
        emitted_rounds: counts.emitted,
        clicked_rounds: counts.clicked,
        empirical: ObservedStats { p_b, p_e, eta_avg },
        standard_errors: StandardErrors {
            p_b: se(p_b, counts.clicked),
            p_e: if attacked { se(p_e, counts.clicked) } else { 0.0 },
            eta_avg: se(eta_avg, counts.emitted),
        },
        sifted_key_agreement: p_b,
        eve_key_agreement: attacked.then_some(p_e),
        matched_setting_fraction: attacked.then(|| ratio(counts.matched_setting, counts.clicked)),
        counts,
        attacked,
    }
}

/// One statistic's comparison against its prediction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Deviation {
    pub empirical: f64,
    pub predicted: f64,
    /// Binomial standard error under the prediction.
    pub sigma: f64,
    /// `(empirical − predicted)/σ`; infinite when σ = 0 and they differ.
    pub z: f64,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Consistency {
    pub p_b: Deviation,
    /// `None` for honest runs.
    pub p_e: Option<Deviation>,
    pub eta_avg: Deviation,
    /// Sum of squared z-scores.
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub pass: bool,
}

fn deviation(empirical: f64, predicted: f64, trials: u64) -> Deviation {
    let sigma = if trials == 0 {
        0.0
    } else {
        (predicted * (1.0 - predicted) / trials as f64).max(0.0).sqrt()
    };
    let diff = empirical - predicted;
    let (z, pass) = if sigma > 0.0 {
        let z = diff / sigma;
        (z, z.abs() <= CONSISTENCY_SIGMAS)
    } else if diff == 0.0 {
        (0.0, true)
    } else {
        (f64::INFINITY.copysign(diff), false)
    };
    Deviation {
        empirical,
        predicted,
        sigma,
        z,
        pass,
    }
}

/// Compares a report with closed-form statistics: each frequency must lie
/// within [`CONSISTENCY_SIGMAS`] binomial standard errors (computed from the
/// prediction) of its predicted value.
pub fn chi_square_consistency(report: &SimReport, predicted: &ObservedStats) -> Consistency {
    let p_b = deviation(report.empirical.p_b, predicted.p_b, report.clicked_rounds);
    let p_e = report
        .eve_key_agreement
        .map(|p| deviation(p, predicted.p_e, report.clicked_rounds));
    let eta_avg = deviation(report.empirical.eta_avg, predicted.eta_avg, report.emitted_rounds);
    let devs: Vec<&Deviation> = [Some(&p_b), p_e.as_ref(), Some(&eta_avg)]
        .into_iter()
        .flatten()
        .collect();
    Consistency {
        chi_square: devs.iter().map(|d| d.z * d.z).sum(),
        degrees_of_freedom: devs.len(),
        pass: devs.iter().all(|d| d.pass),
        p_b,
        p_e,
        eta_avg,
    }
}
