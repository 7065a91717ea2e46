//! JSON description of a simulation setting: Alice's encoding, the
//! eavesdropper (if any) and the blinded click probability.
//!
//! ```json
//! {
//!   "n": 2,
//!   "eta": 0.0,
//!   "encoding": { "kind": "fixed" },
//!   "attack": {
//!     "kind": "intercept_resend",
//!     "eve": [[0.7853981633974483, 0.0], [0.7853981633974483, 3.141592653589793]]
//!   }
//! }
//! ```
//!
//! Angle pairs are Bloch `[alpha, beta]`. Intercept/resend Bob
//! measurements default to mirroring Eve; delayed-measurement readouts
//! default to the optimal ones for the given generators.

use std::path::Path;

use qracsec_core::attack::{AttackModel, DmAttack, IrAttack};
use qracsec_core::protocol::{EncodingParams, RacProtocol};
use qracsec_core::qmath::{projector_pair_from_bloch, unitary_from_generator, BlochAngles, ProjectorPair};
use qracsec_core::sim::{DmSampling, SimConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed attack spec: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid attack spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] qracsec_core::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    pub n: usize,
    /// Click probability when Eve's guess misses (every round when honest).
    pub eta: f64,
    pub encoding: EncodingSpec,
    #[serde(default)]
    pub attack: Option<EavesdropperSpec>,
    #[serde(default)]
    pub dm_sampling: Option<DmSamplingSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EncodingSpec {
    /// The standard encoding for `n`.
    Fixed,
    TamperedSymmetric {
        alpha: f64,
        beta: f64,
    },
    General {
        states: Vec<[f64; 2]>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EavesdropperSpec {
    InterceptResend {
        eve: Vec<[f64; 2]>,
        #[serde(default)]
        bob: Option<Vec<Vec<[f64; 2]>>>,
    },
    DelayedMeasurement {
        generators: Vec<Vec<f64>>,
        #[serde(default)]
        eve: Option<Vec<Vec<[f64; 2]>>>,
        #[serde(default)]
        bob: Option<Vec<Vec<[f64; 2]>>>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmSamplingSpec {
    BobThenEve,
    Joint,
}

impl AttackSpec {
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn encoding(&self) -> Result<EncodingParams, SpecError> {
        let params = match (&self.encoding, self.n) {
            (EncodingSpec::Fixed, 2) => EncodingParams::Fixed2to1,
            (EncodingSpec::Fixed, 3) => EncodingParams::Fixed3to1,
            (EncodingSpec::TamperedSymmetric { alpha, beta }, 3) => {
                let folded = BlochAngles::new(*alpha, *beta)?;
                EncodingParams::Tampered3to1Symmetric {
                    alpha: folded.alpha(),
                    beta: folded.beta(),
                }
            }
            (EncodingSpec::General { states }, _) => EncodingParams::General(
                states
                    .iter()
                    .map(|&[a, b]| BlochAngles::new(a, b))
                    .collect::<Result<_, _>>()?,
            ),
            (_, n) => {
                return Err(SpecError::Invalid(format!("encoding not available for n = {n}")));
            }
        };
        let n = params.n()?;
        if n != self.n {
            return Err(SpecError::Invalid(format!(
                "encoding describes n = {n}, spec says n = {}",
                self.n
            )));
        }
        Ok(params)
    }

    pub fn attack(&self) -> Result<Option<AttackModel>, SpecError> {
        let encoding = self.encoding()?;
        let n = self.n;
        let model = match &self.attack {
            None => return Ok(None),
            Some(EavesdropperSpec::InterceptResend { eve, bob }) => {
                let eve = measurements(eve, n, "eve")?;
                let attack = match bob {
                    None => IrAttack::mirrored(encoding, eve)?,
                    Some(bob) => IrAttack::new(encoding, eve, measurement_grid(bob, n, "bob")?)?,
                };
                AttackModel::InterceptResend(attack)
            }
            Some(EavesdropperSpec::DelayedMeasurement { generators, eve, bob }) => {
                if generators.len() != n {
                    return Err(SpecError::Invalid(format!("expected {n} generators")));
                }
                let unitaries = generators
                    .iter()
                    .map(|g| {
                        let arr: [f64; 16] = g
                            .as_slice()
                            .try_into()
                            .map_err(|_| SpecError::Invalid("generators have 16 entries".into()))?;
                        Ok(unitary_from_generator(&arr)?)
                    })
                    .collect::<Result<Vec<_>, SpecError>>()?;
                let optimal = DmAttack::with_optimal_measurements(encoding.clone(), unitaries.clone())?;
                let eve = match eve {
                    Some(e) => measurement_grid(e, n, "eve")?,
                    None => optimal.eve_measurements().to_vec(),
                };
                let bob = match bob {
                    Some(b) => measurement_grid(b, n, "bob")?,
                    None => optimal.bob_measurements().to_vec(),
                };
                AttackModel::DelayedMeasurement(DmAttack::new(
                    encoding,
                    unitaries,
                    eve,
                    bob,
                    DmAttack::default_blank(),
                )?)
            }
        };
        Ok(Some(model))
    }

    /// Simulation settings for `rounds` rounds from `seed`.
    pub fn sim_config(&self, rounds: u64, seed: u64) -> Result<SimConfig, SpecError> {
        let attack = self.attack()?;
        // Honest rounds use the document's encoding with mean-direction
        // measurements; under attack the protocol only fixes n.
        let protocol = match attack {
            None => RacProtocol::honest(&self.encoding()?)?,
            Some(_) => RacProtocol::honest(&match self.n {
                2 => EncodingParams::Fixed2to1,
                _ => EncodingParams::Fixed3to1,
            })?,
        };
        let mut config = match attack {
            None => SimConfig::honest(protocol, self.eta, rounds, seed),
            Some(a) => SimConfig::attacked(protocol, a, self.eta, rounds, seed),
        };
        config.dm_sampling = match self.dm_sampling {
            None | Some(DmSamplingSpec::BobThenEve) => DmSampling::BobThenEve,
            Some(DmSamplingSpec::Joint) => DmSampling::Joint,
        };
        config.validate()?;
        Ok(config)
    }
}

fn measurements(pairs: &[[f64; 2]], n: usize, what: &str) -> Result<Vec<ProjectorPair>, SpecError> {
    if pairs.len() != n {
        return Err(SpecError::Invalid(format!("expected {n} {what} measurements")));
    }
    pairs
        .iter()
        .map(|&[a, b]| Ok(projector_pair_from_bloch(BlochAngles::new(a, b)?)))
        .collect()
}

fn measurement_grid(rows: &[Vec<[f64; 2]>], n: usize, what: &str) -> Result<Vec<Vec<ProjectorPair>>, SpecError> {
    if rows.len() != n {
        return Err(SpecError::Invalid(format!("expected {n} rows of {what} measurements")));
    }
    rows.iter().map(|r| measurements(r, n, what)).collect()
}
