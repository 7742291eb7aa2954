//! Linear maps on `n×n` matrices, stored as `n²×n²` arrays acting on
//! column-stacked vectors: `vec(h)[i + j·n] = h[i, j]`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{c, CMatrix};
use crate::spectral::{eigh, SpectralDecomposition};

pub fn vectorize(h: &CMatrix) -> DVector<Complex64> {
    DVector::from_column_slice(h.as_slice())
}

pub fn unvectorize(n: usize, v: &DVector<Complex64>) -> CMatrix {
    CMatrix::from_column_slice(n, n, v.as_slice())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    n: usize,
    matrix: CMatrix,
}

impl Superoperator {
    pub(crate) fn from_matrix(n: usize, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), n * n);
        Superoperator { n, matrix }
    }

    pub fn try_from_matrix(n: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != n * n || matrix.ncols() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: matrix.nrows(),
            });
        }
        Ok(Superoperator { n, matrix })
    }

    /// Tabulates a linear map by applying it to the matrix units.
    pub fn from_fn(n: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let mut matrix = CMatrix::zeros(n * n, n * n);
        let mut unit = CMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                unit[(i, j)] = c(1.0, 0.0);
                let image = f(&unit);
                matrix.column_mut(i + j * n).copy_from_slice(image.as_slice());
                unit[(i, j)] = c(0.0, 0.0);
            }
        }
        Superoperator { n, matrix }
    }

    pub fn identity(n: usize) -> Self {
        Superoperator {
            n,
            matrix: CMatrix::identity(n * n, n * n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Superoperator {
            n,
            matrix: CMatrix::zeros(n * n, n * n),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, h: &CMatrix) -> CMatrix {
        unvectorize(self.n, &(&self.matrix * vectorize(h)))
    }

    pub fn scale(&self, s: f64) -> Self {
        Superoperator {
            n: self.n,
            matrix: self.matrix.map(|z| z * s),
        }
    }

    pub fn compose(&self, other: &Superoperator) -> Self {
        Superoperator {
            n: self.n,
            matrix: &self.matrix * &other.matrix,
        }
    }

    /// Adjoint with respect to the Hilbert-Schmidt inner product.
    pub fn adjoint(&self) -> Self {
        Superoperator {
            n: self.n,
            matrix: self.matrix.adjoint(),
        }
    }

    /// Largest deviation from Hilbert-Schmidt self-adjointness.
    pub fn self_adjointness_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// Spectral decomposition of a Hilbert-Schmidt self-adjoint map.
    /// Eigenvectors are the column-stacked eigen-matrices.
    pub fn hermitian_eig(&self) -> Result<SpectralDecomposition> {
        eigh(&self.matrix)
    }

    /// Operator norm for the Hilbert-Schmidt norm (largest singular value).
    pub fn operator_norm(&self) -> Result<f64> {
        let gram = self.matrix.adjoint() * &self.matrix;
        let dec = eigh(&gram)?;
        Ok(dec.eigenvalues.last().copied().unwrap_or(0.0).max(0.0).sqrt())
    }

    pub fn inverse(&self) -> Option<Self> {
        self.matrix.clone().try_inverse().map(|matrix| Superoperator { n: self.n, matrix })
    }
}

impl std::ops::Add for &Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: &Superoperator) -> Superoperator {
        Superoperator {
            n: self.n,
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl std::ops::Sub for &Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: &Superoperator) -> Superoperator {
        Superoperator {
            n: self.n,
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::hs_norm;
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tabulated_map_agrees_with_direct_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = sample::complex_matrix(&mut rng, 3);
        let b = sample::complex_matrix(&mut rng, 3);
        let s = Superoperator::from_fn(3, |h| &a * h * &b);
        let h = sample::complex_matrix(&mut rng, 3);
        assert!(hs_norm(&(s.apply(&h) - &a * &h * &b)) < 1e-12);
        // column stacking: vec(A H B) = (Bᵀ ⊗ A) vec(H)
        let kron = b.transpose().kronecker(&a);
        assert!(hs_norm(&(kron - s.matrix())) < 1e-12);
    }

    #[test]
    fn vectorization_round_trip() {
        let h = sample::complex_matrix(&mut ChaCha8Rng::seed_from_u64(1), 4);
        let v = vectorize(&h);
        assert_eq!(v[1 + 2 * 4], h[(1, 2)]);
        assert_eq!(unvectorize(4, &v), h);
    }
}
