use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
// Unused whenever std is linked, which provides these methods inherently.
#[allow(unused_imports)]
use num_traits::Float;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense row-major complex matrix of fixed dimension.
///
/// Only `D = 2` (one qubit) and `D = 4` (two qubits) are used by the crate;
/// the aliases [`Mat2`] and [`Mat4`] name them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix<const D: usize>(pub [[C64; D]; D]);

pub type Mat2 = Matrix<2>;
pub type Mat4 = Matrix<4>;

impl<const D: usize> Matrix<D> {
    pub const fn zeros() -> Self {
        Matrix([[ZERO; D]; D])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..D {
            m.0[i][i] = ONE;
        }
        m
    }

    pub fn from_real_diagonal(diag: [f64; D]) -> Self {
        let mut m = Self::zeros();
        for (i, d) in diag.into_iter().enumerate() {
            m.0[i][i] = C64::new(d, 0.0);
        }
        m
    }

    /// `|v⟩⟨v|` for an (unnormalized) ket `v`.
    pub fn outer(v: &[C64; D]) -> Self {
        let mut m = Self::zeros();
        for i in 0..D {
            for j in 0..D {
                m.0[i][j] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..D {
            for j in 0..D {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|z| *z *= s);
        m
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..D).map(|i| self.0[i][i]).fold(ZERO, |a, b| a + b)
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let mut acc = ZERO;
        for i in 0..D {
            for k in 0..D {
                acc += self.0[i][k] * other.0[k][i];
            }
        }
        acc
    }

    /// `U · self · U†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        *u * *self * u.adjoint()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entry deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Self::identity())
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> C64 {
        let mut a = self.0;
        let mut det = ONE;
        for col in 0..D {
            let pivot = (col..D)
                .max_by(|&r, &s| a[r][col].norm().total_cmp(&a[s][col].norm()))
                .unwrap_or(col);
            if a[pivot][col].norm() == 0.0 {
                return ZERO;
            }
            if pivot != col {
                a.swap(pivot, col);
                det = -det;
            }
            det *= a[col][col];
            for r in (col + 1)..D {
                let f = a[r][col] / a[col][col];
                for c in col..D {
                    let v = a[col][c];
                    a[r][c] -= f * v;
                }
            }
        }
        det
    }
}

impl<const D: usize> Default for Matrix<D> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const D: usize> Index<(usize, usize)> for Matrix<D> {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.0[r][c]
    }
}

impl<const D: usize> IndexMut<(usize, usize)> for Matrix<D> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.0[r][c]
    }
}

impl<const D: usize> Mul for Matrix<D> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..D {
            for k in 0..D {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..D {
                    m.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        m
    }
}

impl<const D: usize> Add for Matrix<D> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut m = self;
        for i in 0..D {
            for j in 0..D {
                m.0[i][j] += rhs.0[i][j];
            }
        }
        m
    }
}

impl<const D: usize> Sub for Matrix<D> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut m = self;
        for i in 0..D {
            for j in 0..D {
                m.0[i][j] -= rhs.0[i][j];
            }
        }
        m
    }
}

/// Kronecker product `a ⊗ b`; `a` indexes the outer 2×2 blocks.
pub fn tensor(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut m = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m.0[2 * i + k][2 * j + l] = a.0[i][j] * b.0[k][l];
                }
            }
        }
    }
    m
}

/// Which factor of a two-qubit operator survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subsystem {
    First,
    Second,
}

/// Traces out the factor not named by `keep`.
pub fn partial_trace(m: &Mat4, keep: Subsystem) -> Mat2 {
    let mut out = Mat2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = ZERO;
            for k in 0..2 {
                acc += match keep {
                    Subsystem::First => m.0[2 * i + k][2 * j + k],
                    Subsystem::Second => m.0[2 * k + i][2 * k + j],
                };
            }
            out.0[i][j] = acc;
        }
    }
    out
}

/// Bloch vector `(⟨X⟩, ⟨Y⟩, ⟨Z⟩)` of a single-qubit operator.
pub fn bloch_vector_of(m: &Mat2) -> [f64; 3] {
    let off = m.0[1][0];
    [2.0 * off.re, 2.0 * off.im, (m.0[0][0] - m.0[1][1]).re]
}

/// `(I + r·σ)/2`.
pub fn operator_from_bloch_vector(r: [f64; 3]) -> Mat2 {
    Matrix([
        [C64::new(0.5 * (1.0 + r[2]), 0.0), C64::new(0.5 * r[0], -0.5 * r[1])],
        [C64::new(0.5 * r[0], 0.5 * r[1]), C64::new(0.5 * (1.0 - r[2]), 0.0)],
    ])
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[cfg(test)]
pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
