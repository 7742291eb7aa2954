//! Relative entropy `tr(p log p)`, its dissipation along the heat flow and
//! sampled estimates of the entropic curvature lower bound.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::derivation::Derivation;
use crate::error::{Error, Result};
use crate::matrix::{hs_inner, DensityMatrix};
use crate::sample;
use crate::spectral::{eig, TwoVariableKernel};
use crate::transport::{solve_geodesic, SolverConfig, TransportPath};

/// Eigenvalues below this contribute `0·log 0 = 0`.
pub const ZERO_EIGENVALUE: f64 = 1e-14;
/// Pairs closer than this in squared distance are skipped as degenerate.
pub const DEGENERATE_W2SQ: f64 = 1e-8;

pub(crate) fn xlogx(l: f64) -> f64 {
    if l < ZERO_EIGENVALUE {
        0.0
    } else {
        l * l.ln()
    }
}

/// `Ent(p | tr) = tr(p log p)`.
pub fn entropy(p: &DensityMatrix) -> Result<f64> {
    Ok(eig(p.as_hermitian())?.eigenvalues.iter().map(|&l| xlogx(l)).sum())
}

/// Time derivative of `Ent(P_t p)` at `t = 0`:
/// `-Σ_k ⟨(L_p ⊗ R_p)(D log)(∂_k p), ∂_k p⟩`. Never positive.
pub fn entropy_dissipation(d: &Derivation, p: &DensityMatrix) -> Result<f64> {
    if d.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: d.dim(),
            found: p.dim(),
        });
    }
    let dec = eig(p.as_hermitian())?;
    let min = dec.eigenvalues[0];
    if min <= 1e-10 {
        return Err(Error::Singular {
            eigenvalue: min,
            threshold: 1e-10,
        });
    }
    let dlog = TwoVariableKernel::dlog();
    let grads = d.grad(p.as_matrix())?;
    Ok(-grads
        .iter()
        .map(|g| hs_inner(&dec.schur(|s, t| dlog.eval(s, t), g), g).re)
        .sum::<f64>())
}

/// Largest `K` for which
/// `Ent(ρ_t) ≤ (1-t)Ent(p) + t·Ent(q) - (K/2)t(1-t)·w2sq`
/// holds at every interior node `t = j/N` of the path.
pub fn curvature_gap(path: &TransportPath, w2sq: f64) -> Result<f64> {
    if !(w2sq > DEGENERATE_W2SQ) {
        return Err(Error::DegeneratePair(w2sq));
    }
    let entropies = path.densities.iter().map(entropy).collect::<Result<Vec<_>>>()?;
    Ok(gap_from_entropies(&entropies, w2sq))
}

pub(crate) fn gap_from_entropies(entropies: &[f64], w2sq: f64) -> f64 {
    let steps = entropies.len() - 1;
    let (e0, e1) = (entropies[0], entropies[steps]);
    (1..steps)
        .map(|j| {
            let t = j as f64 / steps as f64;
            2.0 * ((1.0 - t) * e0 + t * e1 - entropies[j]) / (t * (1.0 - t) * w2sq)
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    /// Minimum over evaluated pairs; `+∞` when no pair could be evaluated.
    pub estimate: f64,
    pub pairs_evaluated: usize,
    pub pairs_skipped: usize,
    pub worst_pair_index: Option<usize>,
    pub seed: u64,
    #[serde(skip)]
    pub worst_pair: Option<(DensityMatrix, DensityMatrix)>,
}

/// Curvature gap along the solver's geodesic, or `None` for degenerate or
/// infeasible pairs.
pub fn pair_curvature(d: &Derivation, p: &DensityMatrix, q: &DensityMatrix, config: &SolverConfig) -> Result<Option<f64>> {
    let res = solve_geodesic(d, p, q, config)?;
    if !res.feasible || res.energy <= DEGENERATE_W2SQ {
        return Ok(None);
    }
    let path = res.path.as_ref().expect("feasible results carry a path");
    curvature_gap(path, res.energy).map(Some)
}

/// Minimum curvature gap over the given pairs. Pairs are solved in
/// parallel and reduced in index order.
pub fn estimate_curvature_on_pairs(
    d: &Derivation,
    pairs: &[(DensityMatrix, DensityMatrix)],
    config: &SolverConfig,
    seed: u64,
) -> Result<CurvatureReport> {
    let gaps = pairs
        .par_iter()
        .map(|(p, q)| pair_curvature(d, p, q, config))
        .collect::<Result<Vec<_>>>()?;
    let mut report = CurvatureReport {
        estimate: f64::INFINITY,
        pairs_evaluated: 0,
        pairs_skipped: 0,
        worst_pair_index: None,
        seed,
        worst_pair: None,
    };
    for (i, gap) in gaps.into_iter().enumerate() {
        match gap {
            Some(k) => {
                report.pairs_evaluated += 1;
                if report.worst_pair_index.is_none() || k < report.estimate {
                    report.estimate = k;
                    report.worst_pair_index = Some(i);
                }
            }
            None => report.pairs_skipped += 1,
        }
    }
    report.worst_pair = report.worst_pair_index.map(|i| pairs[i].clone());
    Ok(report)
}

/// Samples `sample_count` pairs of densities `YY*/tr(YY*)` with complex
/// Gaussian `Y` and reports the smallest curvature gap. This estimates the
/// curvature bound from above only up to sampling and solver optimality.
pub fn estimate_curvature(d: &Derivation, sample_count: usize, seed: u64, config: &SolverConfig) -> Result<CurvatureReport> {
    if sample_count == 0 {
        return Err(Error::InvalidArgument("sample_count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = d.dim();
    let pairs: Vec<_> = (0..sample_count)
        .map(|_| (sample::density(&mut rng, n), sample::density(&mut rng, n)))
        .collect();
    estimate_curvature_on_pairs(d, &pairs, config, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{c, CMatrix, HermitianMatrix};

    fn sigma_z() -> Derivation {
        Derivation::new(2, vec![HermitianMatrix::from_real_diagonal(&[1.0, -1.0])]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let n = 4;
        let mixed = DensityMatrix::maximally_mixed(n);
        assert!((entropy(&mixed).unwrap() + (n as f64).ln()).abs() < 1e-14);
        let pure = DensityMatrix::from_diagonal(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(entropy(&pure).unwrap(), 0.0);
        let p = DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap();
        let expect = 0.75 * 0.75f64.ln() + 0.25 * 0.25f64.ln();
        assert!((entropy(&p).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn dissipation_vanishes_on_fixed_points() {
        let d = crate::sample::derivation(&mut ChaCha8Rng::seed_from_u64(1), 3, 2);
        assert!(entropy_dissipation(&d, &DensityMatrix::maximally_mixed(3)).unwrap().abs() < 1e-14);
        let p = DensityMatrix::from_diagonal(&[0.2, 0.8]).unwrap();
        assert!(entropy_dissipation(&sigma_z(), &p).unwrap().abs() < 1e-14);
        let pure = DensityMatrix::from_diagonal(&[0.0, 1.0]).unwrap();
        assert!(matches!(entropy_dissipation(&sigma_z(), &pure), Err(Error::Singular { .. })));
    }

    #[test]
    fn dissipation_matches_one_sided_difference() {
        let d = sigma_z();
        let p = DensityMatrix::from_matrix(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.6, 0.), c(0.1, 0.), c(0.1, 0.), c(0.4, 0.)],
        ))
        .unwrap();
        let h = 1e-5;
        let fd = (entropy(&d.heat(&p, h).unwrap()).unwrap() - entropy(&p).unwrap()) / h;
        let an = entropy_dissipation(&d, &p).unwrap();
        assert!(an < 0.0);
        assert!((fd - an).abs() < 1e-4, "{fd} vs {an}");
    }

    #[test]
    fn gap_inverts_the_convexity_inequality() {
        let w2sq = 0.37;
        let lin: Vec<f64> = (0..=16).map(|j| -0.5 + 0.1 * j as f64 / 16.0).collect();
        assert!(gap_from_entropies(&lin, w2sq).abs() < 1e-12);
        let k = 1.7;
        let bent: Vec<f64> = lin
            .iter()
            .enumerate()
            .map(|(j, e)| {
                let t = j as f64 / 16.0;
                e - 0.5 * k * t * (1.0 - t) * w2sq
            })
            .collect();
        assert!((gap_from_entropies(&bent, w2sq) - k).abs() < 1e-12);
    }

    #[test]
    fn curvature_gap_rejects_degenerate_pairs() {
        let p = DensityMatrix::maximally_mixed(2);
        let path = TransportPath::constant(&p, 16);
        assert!(matches!(curvature_gap(&path, 0.0), Err(Error::DegeneratePair(_))));
    }

    #[test]
    fn zero_derivation_has_no_admissible_pairs() {
        let d = Derivation::zero(2);
        let r = estimate_curvature(&d, 3, 5, &SolverConfig::default()).unwrap();
        assert_eq!(r.pairs_evaluated, 0);
        assert_eq!(r.pairs_skipped, 3);
        assert_eq!(r.estimate, f64::INFINITY);
        assert!(r.worst_pair_index.is_none());
    }

    #[test]
    fn identical_pair_is_skipped() {
        let d = sigma_z();
        let p = DensityMatrix::from_diagonal(&[0.3, 0.7]).unwrap();
        let r = estimate_curvature_on_pairs(&d, &[(p.clone(), p)], &SolverConfig::default(), 0).unwrap();
        assert_eq!((r.pairs_evaluated, r.pairs_skipped), (0, 1));
    }
}
