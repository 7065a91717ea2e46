//! The 2→1 and 3→1 QRAC protocols: Alice's encodings, Bob's honest
//! measurements, the average success probability and the key-rate bound.
//!
//! An input tuple `(a₀, …, a_{n−1})` is stored as the integer whose binary
//! digits read `a₀a₁…a_{n−1}`, most significant first, so `|100⟩` is index 4.

use alloc::vec::Vec;
use core::f64::consts::PI;

// Unused whenever std is linked, which provides these methods inherently.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{check_probability, Error, Result};
use crate::qmath::{
    norm3, projector_pair_from_bloch, state_from_bloch, BlochAngles, DensityOperator, Mat2, ProjectorPair, C64,
};

/// Bit `a_b` of input `x` in an `n`-bit QRAC.
#[inline]
pub fn input_bit(x: usize, b: usize, n: usize) -> usize {
    (x >> (n - 1 - b)) & 1
}

pub fn check_n(n: usize) -> Result<usize> {
    if n == 2 || n == 3 {
        Ok(n)
    } else {
        Err(Error::UnsupportedN(n))
    }
}

/// How Alice's preparation device maps inputs to qubit states.
#[derive(Clone, Debug, PartialEq)]
pub enum EncodingParams {
    /// Poles and ±X equator points; the standard optimal 2→1 encoding.
    Fixed2to1,
    /// The standard optimal 3→1 encoding.
    Fixed3to1,
    /// 3→1 encoding with a shared polar angle and a symmetric phase, with
    /// antipodal complements.
    Tampered3to1Symmetric { alpha: f64, beta: f64 },
    /// One free pure state per input, `2ⁿ` entries, no complement constraint.
    General(Vec<BlochAngles>),
}

impl EncodingParams {
    pub fn n(&self) -> Result<usize> {
        match self {
            EncodingParams::Fixed2to1 => Ok(2),
            EncodingParams::Fixed3to1 | EncodingParams::Tampered3to1Symmetric { .. } => Ok(3),
            EncodingParams::General(angles) => match angles.len() {
                4 => Ok(2),
                8 => Ok(3),
                got => Err(Error::SizeMismatch {
                    what: "general encoding (expected 4 or 8 states)",
                    expected: 8,
                    got,
                }),
            },
        }
    }
}

/// Encoded state for every input, indexed as described in the module docs.
pub fn build_states(params: &EncodingParams) -> Result<Vec<DensityOperator<2>>> {
    match params {
        EncodingParams::Fixed2to1 => {
            let poles = [
                BlochAngles::zero(),
                BlochAngles::new(PI / 2.0, 0.0)?,
                BlochAngles::new(PI / 2.0, PI)?,
                BlochAngles::new(PI, 0.0)?,
            ];
            Ok(poles.into_iter().map(state_from_bloch).collect())
        }
        EncodingParams::Fixed3to1 => {
            let a = (6.0f64).sqrt() / 3.0;
            let b = (3.0f64).sqrt() / 3.0;
            let ket = |phase: f64| [C64::new(a, 0.0), C64::from_polar(b, phase)];
            let base = [
                DensityOperator::new_unchecked(Mat2::from_real_diagonal([1.0, 0.0])),
                DensityOperator::new_unchecked(Mat2::outer(&ket(0.0))),
                DensityOperator::new_unchecked(Mat2::outer(&ket(2.0 * PI / 3.0))),
                DensityOperator::new_unchecked(Mat2::outer(&ket(-2.0 * PI / 3.0))),
            ];
            Ok(with_complements(base))
        }
        &EncodingParams::Tampered3to1Symmetric { alpha, beta } => {
            if !(0.0..=PI).contains(&alpha) || !(-PI..PI).contains(&beta) {
                return Err(Error::InvalidConfig(
                    "tampered encoding angles outside alpha in [0, pi], beta in [-pi, pi)",
                ));
            }
            let base = [
                state_from_bloch(BlochAngles::zero()),
                state_from_bloch(BlochAngles::new(alpha, 0.0)?),
                state_from_bloch(BlochAngles::new(alpha, beta)?),
                state_from_bloch(BlochAngles::new(alpha, -beta)?),
            ];
            Ok(with_complements(base))
        }
        EncodingParams::General(angles) => {
            params.n()?;
            Ok(angles.iter().copied().map(state_from_bloch).collect())
        }
    }
}

/// Expands the states of inputs 000, 001, 010, 100 to all eight, with
/// `ρ_{x̄} = I − ρ_x`.
fn with_complements(base: [DensityOperator<2>; 4]) -> Vec<DensityOperator<2>> {
    let mut states = [DensityOperator::<2>::maximally_mixed(); 8];
    for (state, x) in base.into_iter().zip([0b000usize, 0b001, 0b010, 0b100]) {
        states[x] = state;
        states[7 - x] = state.complement();
    }
    states.to_vec()
}

/// `(1/2ⁿ) Σ_x (−1)^{a_b} r_x` for each bit `b`, from Bloch vectors `r_x`.
pub(crate) fn signed_mean_vectors(bloch: &[[f64; 3]], n: usize) -> Vec<[f64; 3]> {
    let inv = 1.0 / bloch.len() as f64;
    (0..n)
        .map(|b| {
            let mut v = [0.0; 3];
            for (x, r) in bloch.iter().enumerate() {
                let sign = if input_bit(x, b, n) == 0 { inv } else { -inv };
                for k in 0..3 {
                    v[k] += sign * r[k];
                }
            }
            v
        })
        .collect()
}

/// Measurements along the normalized signed mean Bloch direction of each
/// bit. A vanishing mean leaves the computational basis.
pub fn mean_direction_measurements(states: &[DensityOperator<2>]) -> Result<Vec<ProjectorPair>> {
    let n = match states.len() {
        4 => 2,
        8 => 3,
        got => {
            return Err(Error::SizeMismatch {
                what: "encoded states",
                expected: 8,
                got,
            })
        }
    };
    let bloch: Vec<[f64; 3]> = states.iter().map(|s| s.bloch_vector()).collect();
    Ok(signed_mean_vectors(&bloch, n)
        .into_iter()
        .map(|v| {
            if norm3(v) < 1e-14 {
                ProjectorPair::computational()
            } else {
                projector_pair_from_bloch(BlochAngles::from_vector(v))
            }
        })
        .collect())
}

/// Bob's honest measurements for the standard encoding of size `n`.
pub fn honest_bob_measurements(n: usize) -> Result<Vec<ProjectorPair>> {
    let params = match check_n(n)? {
        2 => EncodingParams::Fixed2to1,
        _ => EncodingParams::Fixed3to1,
    };
    mean_direction_measurements(&build_states(&params)?)
}

/// A complete protocol instance.
#[derive(Clone, Debug, PartialEq)]
pub struct RacProtocol {
    n: usize,
    states: Vec<DensityOperator<2>>,
    bob: Vec<ProjectorPair>,
}

impl RacProtocol {
    pub fn new(states: Vec<DensityOperator<2>>, bob: Vec<ProjectorPair>) -> Result<Self> {
        let n = match states.len() {
            4 => 2,
            8 => 3,
            got => {
                return Err(Error::SizeMismatch {
                    what: "encoded states",
                    expected: 8,
                    got,
                })
            }
        };
        if bob.len() != n {
            return Err(Error::SizeMismatch {
                what: "Bob measurements",
                expected: n,
                got: bob.len(),
            });
        }
        Ok(RacProtocol { n, states, bob })
    }

    /// States from `params`, measured along their mean directions.
    pub fn honest(params: &EncodingParams) -> Result<Self> {
        let states = build_states(params)?;
        let bob = mean_direction_measurements(&states)?;
        Self::new(states, bob)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> &[DensityOperator<2>] {
        &self.states
    }

    pub fn bob_measurements(&self) -> &[ProjectorPair] {
        &self.bob
    }

    /// Success probability for guessing bit `b`, averaged over inputs.
    pub fn bit_success(&self, b: usize) -> f64 {
        let total: f64 = self
            .states
            .iter()
            .enumerate()
            .map(|(x, rho)| self.bob[b].probability(input_bit(x, b, self.n), rho))
            .sum();
        total / self.states.len() as f64
    }
}

/// Average over inputs and bits of `Tr(M_b^{B=a_b} ρ_x)`.
pub fn success_probability(proto: &RacProtocol) -> f64 {
    let total: f64 = (0..proto.n).map(|b| proto.bit_success(b)).sum();
    total / proto.n as f64
}

/// `1/2 + 1/(2√n)`: (2+√2)/4 for n = 2 and (3+√3)/6 for n = 3.
pub fn quantum_max(n: usize) -> Result<f64> {
    match check_n(n)? {
        2 => Ok((2.0 + 2.0f64.sqrt()) / 4.0),
        _ => Ok((3.0 + 3.0f64.sqrt()) / 6.0),
    }
}

/// Best deterministic one-bit strategy; 3/4 for both supported sizes.
pub fn classical_max(n: usize) -> Result<f64> {
    check_n(n).map(|_| 0.75)
}

/// Binary Shannon entropy in bits, with `H(0) = H(1) = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    let p = check_probability("entropy argument", p)?;
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    Ok(term(p) + term(1.0 - p))
}

/// `1 − H(p)`.
pub fn key_rate(p: f64) -> Result<f64> {
    Ok(1.0 - binary_entropy(p)?)
}
