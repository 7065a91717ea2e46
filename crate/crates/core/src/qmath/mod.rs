//! Complex linear algebra for one and two qubits: states, projective
//! measurements, Born probabilities, partial traces and unitaries generated
//! by Hermitian matrices.

mod eigen;
mod matrix;

use core::f64::consts::PI;

// Unused whenever std is linked, which provides these methods inherently.
#[allow(unused_imports)]
use num_traits::{Euclid, Float};

pub use eigen::{exp_i_hermitian, hermitian_eigen};
#[cfg(test)]
pub(crate) use matrix::dot3;
pub(crate) use matrix::norm3;
pub use matrix::{
    bloch_vector_of, operator_from_bloch_vector, partial_trace, tensor, Mat2, Mat4, Matrix, Subsystem, C64,
};

use crate::error::{Error, Result};

/// Structural tolerance for Hermiticity, trace and projector identities.
pub const STRUCTURE_TOL: f64 = 1e-12;
/// Tolerance for unitarity and positivity, which accumulate eigensolver error.
pub const SPECTRAL_TOL: f64 = 1e-10;

/// Polar/azimuthal angles of a point on the Bloch sphere.
///
/// Stored in canonical form: `alpha ∈ [0, π]`, `beta ∈ [-π, π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochAngles {
    alpha: f64,
    beta: f64,
}

impl BlochAngles {
    /// Builds angles from arbitrary reals, folding them onto the canonical
    /// box. The folding never changes the physical state: `α → -α` is the
    /// same point as `β → β + π`, and `α → α + 2π` is a global phase.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::NonFinite("Bloch angles"));
        }
        let mut a = Euclid::rem_euclid(&alpha, &(2.0 * PI));
        let mut b = beta;
        if a > PI {
            a = 2.0 * PI - a;
            b += PI;
        }
        Ok(BlochAngles {
            alpha: a,
            beta: wrap_angle(b),
        })
    }

    pub const fn zero() -> Self {
        BlochAngles { alpha: 0.0, beta: 0.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Unit Bloch vector `(sin α cos β, sin α sin β, cos α)`.
    pub fn vector(&self) -> [f64; 3] {
        let (sa, ca) = self.alpha.sin_cos();
        let (sb, cb) = self.beta.sin_cos();
        [sa * cb, sa * sb, ca]
    }

    /// Direction of a non-zero vector. The zero vector maps to the north pole.
    pub fn from_vector(v: [f64; 3]) -> Self {
        let r = norm3(v);
        if r == 0.0 || !r.is_finite() {
            return Self::zero();
        }
        let alpha = (v[2] / r).clamp(-1.0, 1.0).acos();
        let beta = if v[0] == 0.0 && v[1] == 0.0 {
            0.0
        } else {
            v[1].atan2(v[0])
        };
        BlochAngles {
            alpha,
            beta: wrap_angle(beta),
        }
    }

    /// The orthogonal state: angles `(π - α, β + π)`.
    pub fn antipode(&self) -> Self {
        BlochAngles {
            alpha: PI - self.alpha,
            beta: wrap_angle(self.beta + PI),
        }
    }

    /// `cos(α/2)|0⟩ + e^{iβ} sin(α/2)|1⟩`.
    pub fn ket(&self) -> [C64; 2] {
        let (s, c) = (0.5 * self.alpha).sin_cos();
        [C64::new(c, 0.0), C64::from_polar(s, self.beta)]
    }
}

/// Folds an angle into `[-π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = Euclid::rem_euclid(&(x + PI), &(2.0 * PI)) - PI;
    if y >= PI {
        -PI
    } else {
        y
    }
}

/// A validated density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityOperator<const D: usize> {
    matrix: Matrix<D>,
}

impl<const D: usize> DensityOperator<D> {
    pub fn try_new(matrix: Matrix<D>) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::NonFinite("density operator"));
        }
        if matrix.hermiticity_error() > STRUCTURE_TOL {
            return Err(Error::InvalidState("not Hermitian"));
        }
        if (matrix.trace() - C64::new(1.0, 0.0)).norm() > STRUCTURE_TOL {
            return Err(Error::InvalidState("trace differs from 1"));
        }
        let (eig, _) = hermitian_eigen(&matrix);
        if eig.iter().any(|&l| l < -SPECTRAL_TOL) {
            return Err(Error::InvalidState("negative eigenvalue"));
        }
        Ok(DensityOperator { matrix })
    }

    /// Caller guarantees validity (e.g. a unitary conjugate of a valid state).
    pub(crate) fn new_unchecked(matrix: Matrix<D>) -> Self {
        DensityOperator { matrix }
    }

    pub fn maximally_mixed() -> Self {
        DensityOperator {
            matrix: Matrix::<D>::identity().scale_real(1.0 / D as f64),
        }
    }

    pub fn matrix(&self) -> &Matrix<D> {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    /// `U ρ U†`, valid whenever `u` is unitary.
    pub fn evolve(&self, u: &Matrix<D>) -> Self {
        DensityOperator {
            matrix: self.matrix.conjugate_by(u),
        }
    }
}

impl DensityOperator<2> {
    pub fn bloch_vector(&self) -> [f64; 3] {
        bloch_vector_of(&self.matrix)
    }

    /// `I - ρ`, the antipodal state of a pure qubit state.
    pub fn complement(&self) -> Self {
        DensityOperator {
            matrix: Mat2::identity() - self.matrix,
        }
    }
}

impl DensityOperator<4> {
    pub fn reduced(&self, keep: Subsystem) -> DensityOperator<2> {
        DensityOperator {
            matrix: partial_trace(&self.matrix, keep),
        }
    }
}

/// Pure qubit state `|ψ⟩⟨ψ|` with `|ψ⟩ = cos(α/2)|0⟩ + e^{iβ} sin(α/2)|1⟩`.
pub fn state_from_bloch(angles: BlochAngles) -> DensityOperator<2> {
    DensityOperator {
        matrix: Mat2::outer(&angles.ket()),
    }
}

/// Two-outcome projective qubit measurement `{p0, p1}` with `p0 + p1 = I`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectorPair {
    p0: Mat2,
    p1: Mat2,
    direction: BlochAngles,
}

impl ProjectorPair {
    pub fn computational() -> Self {
        projector_pair_from_bloch(BlochAngles::zero())
    }

    /// Projector onto outcome `i ∈ {0, 1}`.
    pub fn effect(&self, outcome: usize) -> &Mat2 {
        if outcome == 0 {
            &self.p0
        } else {
            &self.p1
        }
    }

    pub fn p0(&self) -> &Mat2 {
        &self.p0
    }

    pub fn p1(&self) -> &Mat2 {
        &self.p1
    }

    /// Bloch direction of the outcome-0 projector.
    pub fn direction(&self) -> BlochAngles {
        self.direction
    }

    /// The post-measurement state for `outcome`, i.e. the projector itself.
    pub fn eigenstate(&self, outcome: usize) -> DensityOperator<2> {
        DensityOperator::new_unchecked(*self.effect(outcome))
    }

    /// Born probability of `outcome` on a valid state, clamped into `[0, 1]`.
    pub fn probability(&self, outcome: usize, state: &DensityOperator<2>) -> f64 {
        self.effect(outcome).trace_product(state.matrix()).re.clamp(0.0, 1.0)
    }

    pub fn completeness_error(&self) -> f64 {
        (self.p0 + self.p1).max_abs_diff(&Mat2::identity())
    }

    pub fn idempotence_error(&self) -> f64 {
        let e0 = (self.p0 * self.p0).max_abs_diff(&self.p0);
        let e1 = (self.p1 * self.p1).max_abs_diff(&self.p1);
        e0.max(e1)
    }
}

/// `p0 = |ψ(angles)⟩⟨ψ(angles)|`, `p1 = I - p0`.
pub fn projector_pair_from_bloch(angles: BlochAngles) -> ProjectorPair {
    let p0 = *state_from_bloch(angles).matrix();
    ProjectorPair {
        p0,
        p1: Mat2::identity() - p0,
        direction: angles,
    }
}

const BORN_SLACK: f64 = 1e-10;

/// `Tr(effect · state)`; rounding noise within `1e-10` of `[0, 1]` is
/// clamped, anything further out is rejected.
pub fn born_probability<const D: usize>(effect: &Matrix<D>, state: &DensityOperator<D>) -> Result<f64> {
    let p = effect.trace_product(state.matrix()).re;
    if !p.is_finite() {
        return Err(Error::NonFinite("Born probability"));
    }
    if !(-BORN_SLACK..=1.0 + BORN_SLACK).contains(&p) {
        return Err(Error::ProbabilityOutOfRange {
            what: "Born probability",
            value: p,
        });
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Upper-triangle index pairs in generator parameter order.
const OFF_DIAGONAL: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Hermitian generator from 16 reals: four diagonal entries, then the real
/// and imaginary parts of the six upper off-diagonal entries in row order.
pub fn hermitian_from_params(params: &[f64; 16]) -> Result<Mat4> {
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("unitary generator parameters"));
    }
    let mut h = Mat4::from_real_diagonal([params[0], params[1], params[2], params[3]]);
    for (k, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        let z = C64::new(params[4 + 2 * k], params[5 + 2 * k]);
        h.0[i][j] = z;
        h.0[j][i] = z.conj();
    }
    Ok(h)
}

/// Inverse of [`hermitian_from_params`]; reads the upper triangle.
pub fn params_from_hermitian(h: &Mat4) -> [f64; 16] {
    let mut p = [0.0; 16];
    for i in 0..4 {
        p[i] = h.0[i][i].re;
    }
    for (k, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        p[4 + 2 * k] = h.0[i][j].re;
        p[5 + 2 * k] = h.0[i][j].im;
    }
    p
}

/// `U = exp(iH)` with `H` assembled by [`hermitian_from_params`].
pub fn unitary_from_generator(params: &[f64; 16]) -> Result<Mat4> {
    Ok(exp_i_hermitian(&hermitian_from_params(params)?))
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
