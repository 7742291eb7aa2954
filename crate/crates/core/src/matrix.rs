//! Hermitian and density matrices with construction-time cleanup.
//!
//! Everything downstream assumes the invariants enforced here: Hermitian
//! matrices are exactly symmetrized, densities are clamped to the positive
//! cone and renormalized to unit trace.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{eig, SpectralDecomposition};

pub type CMatrix = DMatrix<Complex64>;

/// Eigenvalues below this are treated as rounding noise and clamped to zero.
pub const POSITIVITY_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Hilbert-Schmidt inner product `tr(a* b)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hs_norm(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// A complex Hermitian matrix. Construction symmetrizes `(a + a*)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    entries: CMatrix,
}

impl HermitianMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        if entries.nrows() == 0 {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        Ok(Self::symmetrized(entries))
    }

    pub(crate) fn symmetrized(entries: CMatrix) -> Self {
        let adj = entries.adjoint();
        HermitianMatrix {
            entries: (entries + adj).map(|z| z * 0.5),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        HermitianMatrix {
            entries: CMatrix::from_fn(n, n, |i, j| if i == j { c(diag[i], 0.0) } else { c(0.0, 0.0) }),
        }
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix {
            entries: CMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix {
            entries: CMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn eig(&self) -> Result<SpectralDecomposition> {
        eig(self)
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix {
            entries: self.entries.map(|z| z * s),
        }
    }
}

/// A positive semidefinite matrix of unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    base: HermitianMatrix,
}

impl DensityMatrix {
    /// Clamps eigenvalues in `[-1e-10·scale, 0)` to zero and renormalizes
    /// the trace. Clearly indefinite input is rejected.
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let dec = h.eig()?;
        let scale = dec.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let min = dec.eigenvalues.first().copied().unwrap_or(0.0);
        if min < -1e-8 * scale {
            return Err(Error::NotPositive(min));
        }
        let base = if min < 0.0 {
            dec.map(|l| l.max(0.0))
        } else {
            h
        };
        let tr = base.trace();
        if tr <= 1e-300 {
            return Err(Error::ZeroTrace(tr));
        }
        Ok(DensityMatrix {
            base: base.scale(1.0 / tr),
        })
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    /// Diagonal density; the weights are normalized.
    pub fn from_diagonal(weights: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_diagonal(weights))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix {
            base: HermitianMatrix::identity(n).scale(1.0 / n as f64),
        }
    }

    /// Trusted constructor for values already known to be valid densities.
    pub(crate) fn from_trusted(base: HermitianMatrix) -> Self {
        DensityMatrix { base }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.base
    }

    pub fn as_matrix(&self) -> &CMatrix {
        self.base.as_matrix()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.base.eig()?.eigenvalues[0])
    }
}

impl AsRef<HermitianMatrix> for DensityMatrix {
    fn as_ref(&self) -> &HermitianMatrix {
        &self.base
    }
}

impl AsRef<HermitianMatrix> for HermitianMatrix {
    fn as_ref(&self) -> &HermitianMatrix {
        self
    }
}
