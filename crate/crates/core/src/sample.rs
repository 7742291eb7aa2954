//! Random test instances: complex Gaussian matrices, densities `YY*/tr(YY*)`
//! and derivations with Gaussian Hermitian generators.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::derivation::Derivation;
use crate::matrix::{c, CMatrix, DensityMatrix, HermitianMatrix};

/// Entries with independent standard normal real and imaginary parts.
pub fn complex_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
    HermitianMatrix::symmetrized(complex_matrix(rng, n))
}

/// Full-rank almost surely.
pub fn density<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DensityMatrix {
    let y = complex_matrix(rng, n);
    let p = HermitianMatrix::symmetrized(&y * y.adjoint());
    let tr = p.trace();
    DensityMatrix::from_trusted(p.scale(1.0 / tr))
}

/// Rank-`r` density `YY*` with `Y` of shape `n×r`.
pub fn density_of_rank<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> DensityMatrix {
    let y = CMatrix::from_fn(n, rank, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let p = HermitianMatrix::symmetrized(&y * y.adjoint());
    let tr = p.trace();
    DensityMatrix::from_trusted(p.scale(1.0 / tr))
}

pub fn derivation<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> Derivation {
    let gens = (0..m).map(|_| hermitian(rng, n)).collect();
    Derivation::new(n, gens).expect("generators share a dimension")
}

/// Block-diagonal generators with blocks of sizes `blocks`; such
/// derivations are never ergodic when there are at least two blocks.
pub fn block_derivation<R: Rng + ?Sized>(rng: &mut R, blocks: &[usize], m: usize) -> Derivation {
    let n: usize = blocks.iter().sum();
    let gens = (0..m)
        .map(|_| {
            let mut t = CMatrix::zeros(n, n);
            let mut off = 0;
            for &b in blocks {
                let h = hermitian(rng, b);
                t.view_mut((off, off), (b, b)).copy_from(h.as_matrix());
                off += b;
            }
            HermitianMatrix::symmetrized(t)
        })
        .collect();
    Derivation::new(n, gens).expect("generators share a dimension")
}
