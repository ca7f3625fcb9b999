//! Dense Hermitian spectral helpers.
//!
//! nalgebra's `SymmetricEigen` iteration can return non-finite eigenvalues on
//! sparse, low-rank matrices (seen on pure-state projectors and truncated
//! tensor-product Hamiltonians), so only its Householder tridiagonalization is
//! used and the tridiagonal problem goes to the local implicit-QL solver.
//! Complex matrices are handled through the real embedding
//! `[[A, -B], [B, A]]` of `A + iB`, whose spectrum is that of `A + iB` with
//! every eigenvalue doubled.

use nalgebra::{DMatrix, SymmetricTridiagonal};
use num_complex::Complex64;

use crate::error::{PdcError, Result};
use crate::tridiag::TridiagonalEigen;

struct RealSpectrum {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
    /// Whether the spectrum belongs to the 2n-dimensional embedding.
    embedded: bool,
}

fn embed(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let z = m[(i, j)];
            r[(i, j)] = z.re;
            r[(i + n, j + n)] = z.re;
            r[(i, j + n)] = -z.im;
            r[(i + n, j)] = z.im;
        }
    }
    r
}

fn spectrum(m: &DMatrix<Complex64>) -> Result<RealSpectrum> {
    let hermitian = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let embedded = hermitian.iter().any(|z| z.im != 0.0);
    let real = if embedded {
        embed(&hermitian)
    } else {
        hermitian.map(|z| z.re)
    };
    let dim = real.nrows();
    if dim == 0 {
        return Ok(RealSpectrum {
            values: Vec::new(),
            vectors: real,
            embedded,
        });
    }
    let (q, diag, off) = SymmetricTridiagonal::new(real).unpack();
    let eig = TridiagonalEigen::new(diag.as_slice(), off.as_slice())?;
    if eig.values.iter().any(|v| !v.is_finite()) {
        return Err(PdcError::Eigensolver {
            reason: "non-finite eigenvalue in dense Hermitian solve".into(),
        });
    }
    let local = DMatrix::from_fn(dim, dim, |i, j| eig.vectors[j][i]);
    Ok(RealSpectrum {
        values: eig.values,
        vectors: q * local,
        embedded,
    })
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let s = spectrum(m)?;
    let mut values = s.values;
    values.sort_by(f64::total_cmp);
    if s.embedded {
        // doubled spectrum: average each pair
        values = values.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    }
    Ok(values)
}

/// Real spectral functions `f_k(M)` of the Hermitian part of `m`, sharing a
/// single eigendecomposition.
pub fn hermitian_functions<const K: usize>(
    m: &DMatrix<Complex64>,
    f: impl Fn(f64) -> [f64; K],
) -> Result<[DMatrix<Complex64>; K]> {
    let n = m.nrows();
    let s = spectrum(m)?;
    let dim = s.vectors.nrows();
    let mut real: [DMatrix<f64>; K] = std::array::from_fn(|_| DMatrix::zeros(dim, dim));
    for (k, &lambda) in s.values.iter().enumerate() {
        let v = s.vectors.column(k);
        let outer = v * v.transpose();
        for (acc, fk) in real.iter_mut().zip(f(lambda)) {
            *acc += &outer * fk;
        }
    }
    Ok(real.map(|r| {
        if s.embedded {
            DMatrix::from_fn(n, n, |i, j| Complex64::new(r[(i, j)], r[(i + n, j)]))
        } else {
            r.map(|x| Complex64::new(x, 0.0))
        }
    }))
}

/// `exp(-iθM)` for Hermitian `M`, assembled as `cos(θM) - i sin(θM)`.
pub fn hermitian_propagator(m: &DMatrix<Complex64>, theta: f64) -> Result<DMatrix<Complex64>> {
    let [c, s] = hermitian_functions(m, |l| [(theta * l).cos(), (theta * l).sin()])?;
    Ok(c - s * Complex64::new(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(1.0, 0.0),
            ],
        )
    }

    #[test]
    fn complex_spectrum() {
        let values = hermitian_eigenvalues(&sample()).unwrap();
        assert!((values[0] - 0.0).abs() < 1e-14);
        assert!((values[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn functions_reconstruct_matrix() {
        let m = sample();
        let [id, same] = hermitian_functions(&m, |l| [1.0, l]).unwrap();
        assert!((id - DMatrix::identity(2, 2)).norm() < 1e-14);
        assert!((same - &m).norm() < 1e-14);
    }

    #[test]
    fn propagator_of_pauli_x() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let x = DMatrix::from_row_slice(2, 2, &[zero, one, one, zero]);
        let u = hermitian_propagator(&x, 0.3).unwrap();
        assert!((u[(0, 0)] - Complex64::new(0.3f64.cos(), 0.0)).norm() < 1e-14);
        assert!((u[(1, 0)] - Complex64::new(0.0, -(0.3f64.sin()))).norm() < 1e-14);
    }

    #[test]
    fn rank_one_projector_has_finite_spectrum() {
        let n = 81;
        let v = nalgebra::DVector::from_fn(n, |i, _| {
            Complex64::from_polar(1.0 / (n as f64).sqrt(), 0.37 * (i * i) as f64)
        });
        let values = hermitian_eigenvalues(&(&v * v.adjoint())).unwrap();
        assert!((values[n - 1] - 1.0).abs() < 1e-12);
        assert!(values[..n - 1].iter().all(|x| x.abs() < 1e-12));
    }
}
