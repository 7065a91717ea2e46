//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.

// Unused whenever std is linked, which provides these methods inherently.
#[allow(unused_imports)]
use num_traits::Float;

use super::matrix::{Matrix, C64, ZERO};

const MAX_SWEEPS: usize = 64;

/// Eigenvalues (unsorted) and eigenvectors (as columns of the returned
/// matrix) of a Hermitian matrix.
///
/// Only the upper triangle's Hermitian part is trusted; callers are
/// expected to pass a Hermitian input.
pub fn hermitian_eigen<const D: usize>(h: &Matrix<D>) -> ([f64; D], Matrix<D>) {
    let mut a = *h;
    let mut v = Matrix::<D>::identity();
    let scale = a.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);

    if scale > 0.0 {
        let threshold = (scale * f64::EPSILON) * (scale * f64::EPSILON);
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..D)
                .flat_map(|p| ((p + 1)..D).map(move |q| (p, q)))
                .map(|(p, q)| a.0[p][q].norm_sqr())
                .sum();
            if off <= threshold {
                break;
            }
            for p in 0..D {
                for q in (p + 1)..D {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut eig = [0.0; D];
    for (i, e) in eig.iter_mut().enumerate() {
        *e = a.0[i][i].re;
    }
    (eig, v)
}

/// One Jacobi rotation annihilating `a[p][q]`.
fn rotate<const D: usize>(a: &mut Matrix<D>, v: &mut Matrix<D>, p: usize, q: usize) {
    let apq = a.0[p][q];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r;
    let app = a.0[p][p].re;
    let aqq = a.0[q][q].re;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // J = diag(1, e^{-iφ}) on (p, q) followed by the real rotation [[c, s], [-s, c]].
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    for k in 0..D {
        let akp = a.0[k][p];
        let akq = a.0[k][q];
        a.0[k][p] = akp * jpp + akq * jqp;
        a.0[k][q] = akp * jpq + akq * jqq;
    }
    for k in 0..D {
        let apk = a.0[p][k];
        let aqk = a.0[q][k];
        a.0[p][k] = jpp.conj() * apk + jqp.conj() * aqk;
        a.0[q][k] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a.0[p][q] = ZERO;
    a.0[q][p] = ZERO;
    a.0[p][p] = C64::new(a.0[p][p].re, 0.0);
    a.0[q][q] = C64::new(a.0[q][q].re, 0.0);

    for k in 0..D {
        let vkp = v.0[k][p];
        let vkq = v.0[k][q];
        v.0[k][p] = vkp * jpp + vkq * jqp;
        v.0[k][q] = vkp * jpq + vkq * jqq;
    }
}

/// `exp(i·H)` for Hermitian `H`, via `V diag(e^{iλ}) V†`.
pub fn exp_i_hermitian<const D: usize>(h: &Matrix<D>) -> Matrix<D> {
    let (eig, v) = hermitian_eigen(h);
    let mut out = Matrix::<D>::zeros();
    for (k, &lambda) in eig.iter().enumerate() {
        let phase = C64::new(lambda.cos(), lambda.sin());
        for i in 0..D {
            let vik = v.0[i][k] * phase;
            if vik == ZERO {
                continue;
            }
            for j in 0..D {
                out.0[i][j] += vik * v.0[j][k].conj();
            }
        }
    }
    out
}
