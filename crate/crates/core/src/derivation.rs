//! Inner derivations `∂a = (i[T_k, a])_k` on `M_n(ℂ)`, their adjoint, the
//! Laplacian `Δ = ∂*∂`, the heat semigroup `e^{-tΔ}` and ergodicity.
//!
//! The factor `i` makes every component skew-adjoint (`∂_k* = -∂_k`) while
//! mapping Hermitian matrices to Hermitian matrices.

use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{c, commutator, hs_inner, hs_norm, CMatrix, DensityMatrix, HermitianMatrix};
use crate::spectral::SpectralDecomposition;
use crate::superop::{unvectorize, vectorize, Superoperator};

/// Kernel eigenvalues of `Δ` are those below this fraction of the largest.
pub const KERNEL_TOL: f64 = 1e-9;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

struct LaplacianData {
    laplacian: Superoperator,
    spectrum: SpectralDecomposition,
    kernel: Vec<HermitianMatrix>,
}

pub struct Derivation {
    n: usize,
    generators: Vec<HermitianMatrix>,
    cache: OnceLock<LaplacianData>,
}

impl Clone for Derivation {
    fn clone(&self) -> Self {
        Derivation {
            n: self.n,
            generators: self.generators.clone(),
            cache: OnceLock::new(),
        }
    }
}

impl fmt::Debug for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Derivation")
            .field("n", &self.n)
            .field("generators", &self.generators)
            .finish()
    }
}

impl PartialEq for Derivation {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.generators == other.generators
    }
}

/// Result of [`Derivation::ergodicity`].
#[derive(Debug, Clone)]
pub struct Ergodicity {
    pub ergodic: bool,
    /// Hilbert-Schmidt orthonormal Hermitian basis of `ker Δ`.
    pub kernel: Vec<HermitianMatrix>,
}

impl Derivation {
    pub fn new(n: usize, generators: Vec<HermitianMatrix>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        for g in &generators {
            if g.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: g.dim() });
            }
        }
        Ok(Derivation {
            n,
            generators,
            cache: OnceLock::new(),
        })
    }

    pub fn zero(n: usize) -> Self {
        Derivation {
            n,
            generators: Vec::new(),
            cache: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of components `m`.
    pub fn components(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[HermitianMatrix] {
        &self.generators
    }

    fn check_dim(&self, a: &CMatrix) -> Result<()> {
        if a.nrows() != self.n || a.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: a.nrows(),
            });
        }
        Ok(())
    }

    /// `(i[T_k, a])_k`
    pub fn grad(&self, a: &CMatrix) -> Result<Vec<CMatrix>> {
        self.check_dim(a)?;
        Ok(self.grad_unchecked(a))
    }

    pub(crate) fn grad_unchecked(&self, a: &CMatrix) -> Vec<CMatrix> {
        self.generators
            .iter()
            .map(|t| commutator(t.as_matrix(), a).map(|z| z * I))
            .collect()
    }

    /// `∂*v = Σ_k -i[T_k, v_k]`
    pub fn divergence(&self, v: &[CMatrix]) -> Result<CMatrix> {
        if v.len() != self.generators.len() {
            return Err(Error::ComponentCount {
                expected: self.generators.len(),
                found: v.len(),
            });
        }
        for vk in v {
            self.check_dim(vk)?;
        }
        Ok(self.divergence_unchecked(v))
    }

    pub(crate) fn divergence_unchecked(&self, v: &[CMatrix]) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        for (t, vk) in self.generators.iter().zip(v) {
            out += commutator(t.as_matrix(), vk).map(|z| -z * I);
        }
        out
    }

    /// `Σ_k [T_k, [T_k, a]]`
    pub fn apply_laplacian(&self, a: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        for t in &self.generators {
            let t = t.as_matrix();
            out += commutator(t, &commutator(t, a));
        }
        out
    }

    fn data(&self) -> &LaplacianData {
        self.cache.get_or_init(|| {
            let laplacian = Superoperator::from_fn(self.n, |a| self.apply_laplacian(a));
            let spectrum = laplacian
                .hermitian_eig()
                .expect("Jacobi converges on the small Hermitian Laplacian");
            let kernel = kernel_basis(self.n, &spectrum);
            LaplacianData {
                laplacian,
                spectrum,
                kernel,
            }
        })
    }

    pub fn laplacian(&self) -> &Superoperator {
        &self.data().laplacian
    }

    /// Eigen-decomposition of `Δ` on the `n²`-dimensional matrix space.
    pub fn laplacian_spectrum(&self) -> &SpectralDecomposition {
        &self.data().spectrum
    }

    pub(crate) fn kernel_threshold(&self) -> f64 {
        let top = self.laplacian_spectrum().eigenvalues.last().copied().unwrap_or(0.0);
        KERNEL_TOL * top
    }

    /// Smallest nonzero eigenvalue of `Δ`, or 0 when `Δ = 0`.
    pub fn spectral_gap(&self) -> f64 {
        let thr = self.kernel_threshold();
        self.laplacian_spectrum()
            .eigenvalues
            .iter()
            .copied()
            .find(|&l| l > thr && l > 0.0)
            .unwrap_or(0.0)
    }

    /// Orthonormal Hermitian basis of `ker ∂ = ker Δ`, the joint commutant
    /// of the generators.
    pub fn kernel(&self) -> &[HermitianMatrix] {
        &self.data().kernel
    }

    pub fn ergodicity(&self) -> Ergodicity {
        let kernel = self.kernel().to_vec();
        Ergodicity {
            ergodic: kernel.len() == 1,
            kernel,
        }
    }

    pub fn is_ergodic(&self) -> bool {
        self.kernel().len() == 1
    }

    /// Orthogonal projection of `h` onto `ker ∂`.
    pub fn kernel_component(&self, h: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        for b in self.kernel() {
            out += b.as_matrix() * hs_inner(b.as_matrix(), h);
        }
        out
    }

    /// `e^{-tΔ}` applied to an arbitrary matrix.
    pub fn heat_apply(&self, a: &CMatrix, t: f64) -> CMatrix {
        let spec = self.laplacian_spectrum();
        let w = &spec.eigenvectors;
        let mut coeffs = w.adjoint() * vectorize(a);
        for (z, l) in coeffs.iter_mut().zip(&spec.eigenvalues) {
            *z *= (-t * l.max(0.0)).exp();
        }
        unvectorize(self.n, &(w * coeffs))
    }

    /// Heat flow `P_t p = e^{-tΔ} p`.
    pub fn heat(&self, p: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!("heat time must be nonnegative, got {t}")));
        }
        if p.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: p.dim(),
            });
        }
        if t == 0.0 {
            return Ok(p.clone());
        }
        DensityMatrix::new(HermitianMatrix::new(self.heat_apply(p.as_matrix(), t))?)
    }
}

fn kernel_basis(n: usize, spec: &SpectralDecomposition) -> Vec<HermitianMatrix> {
    let top = spec.eigenvalues.last().copied().unwrap_or(0.0);
    let thr = KERNEL_TOL * top;
    let mut candidates = Vec::new();
    for (j, &l) in spec.eigenvalues.iter().enumerate() {
        if l <= thr {
            let v = spec.eigenvectors.column(j).into_owned();
            let x = unvectorize(n, &v);
            let xa = x.adjoint();
            candidates.push((&x + &xa).map(|z| z * 0.5));
            candidates.push((&x - &xa).map(|z| z * c(0.0, -0.5)));
        }
    }
    let mut basis: Vec<CMatrix> = Vec::new();
    for mut v in candidates {
        for b in &basis {
            let proj = hs_inner(b, &v).re;
            v -= b.map(|z| z * proj);
        }
        let norm = hs_norm(&v);
        if norm > 1e-6 {
            basis.push(v.map(|z| z / norm));
        }
    }
    basis.into_iter().map(HermitianMatrix::symmetrized).collect()
}
