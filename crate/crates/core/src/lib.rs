//! Noncommutative L²-Wasserstein geometry on matrix algebras.
//!
//! Densities are positive unit-trace matrices in `M_n(ℂ)`. A derivation
//! `∂ = (i[T_k, ·])_k` induces a Laplacian `Δ = ∂*∂`, a heat flow
//! `e^{-tΔ}`, and a Benamou-Brenier distance where multiplication by the
//! density is replaced by the logarithmic-mean operator `M_ρ`. The
//! [`bundle`] module lifts all of this to sections over a finite base.

pub mod bundle;
pub mod checks;
pub mod derivation;
pub mod entropy;
pub mod error;
pub mod io;
pub mod matrix;
pub mod sample;
pub mod spectral;
pub mod superop;
pub mod transport;

pub use bundle::{
    assemble_global_path, disintegrated_distance, fiber_masses, mean_curvature_check, mean_entropy, product_trace,
    DisintegrationResult, FiberedDensity, FiniteBase, MeanCurvatureReport, VerticalGradient,
};
pub use derivation::Derivation;
pub use entropy::{curvature_gap, entropy, entropy_dissipation, estimate_curvature, CurvatureReport};
pub use error::{Error, Result};
pub use matrix::{CMatrix, DensityMatrix, HermitianMatrix};
pub use spectral::{dlog_solve, eig, func_calc, mult_op, positive_part, schur_apply, SpectralDecomposition, TwoVariableKernel};
pub use superop::Superoperator;
pub use transport::{
    linear_path, onsager, path_energy, s_operator, solve_geodesic, tangent_metric, LinearPath, SolverConfig,
    TransportPath, TransportResult,
};
