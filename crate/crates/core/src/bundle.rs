//! Trivial matrix-algebra bundles over a finite measured base `(X, ν)`:
//! product traces `ν ⊗ tr`, fibered densities, vertical gradients, the
//! fiberwise disintegration of `W₂` and mean entropic curvature.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::derivation::Derivation;
use crate::entropy::{curvature_gap, gap_from_entropies, xlogx, DEGENERATE_W2SQ};
use crate::error::{Error, Result};
use crate::matrix::{CMatrix, DensityMatrix, HermitianMatrix};
use crate::sample;
use crate::spectral::eig;
use crate::transport::{solve_geodesic, SolverConfig, TransportPath};

/// Fibers whose masses differ by more than this cannot be connected.
pub const MASS_TOL: f64 = 1e-8;
/// Fibers lighter than this are treated as empty.
pub const ZERO_MASS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteBase {
    pub labels: Vec<String>,
    pub weights: Vec<f64>,
}

impl FiniteBase {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let labels = (0..weights.len()).map(|i| format!("x{i}")).collect();
        Self::with_labels(labels, weights)
    }

    pub fn with_labels(labels: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("base must have at least one point".into()));
        }
        if labels.len() != weights.len() {
            return Err(Error::ComponentCount {
                expected: weights.len(),
                found: labels.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!("base weights must be positive, got {w}")));
        }
        Ok(FiniteBase { labels, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `(ν ⊗ tr)(F) = Σ_j ν_j tr F(x_j)`.
pub fn product_trace(base: &FiniteBase, section: &[CMatrix]) -> Result<f64> {
    if section.len() != base.len() {
        return Err(Error::ComponentCount {
            expected: base.len(),
            found: section.len(),
        });
    }
    let n = section[0].nrows();
    let mut total = 0.0;
    for (w, f) in base.weights.iter().zip(section) {
        if f.nrows() != n || f.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: f.nrows() });
        }
        total += w * f.trace().re;
    }
    Ok(total)
}

/// A positive section normalized under `ν ⊗ tr`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberedDensity {
    base: FiniteBase,
    fibers: Vec<HermitianMatrix>,
}

impl FiberedDensity {
    /// Clamps rounding-level negative eigenvalues and rescales so that
    /// `Σ_j ν_j tr P(x_j) = 1`.
    pub fn new(base: FiniteBase, fibers: Vec<HermitianMatrix>) -> Result<Self> {
        if fibers.len() != base.len() {
            return Err(Error::ComponentCount {
                expected: base.len(),
                found: fibers.len(),
            });
        }
        let n = fibers[0].dim();
        let mut clean = Vec::with_capacity(fibers.len());
        for f in fibers {
            if f.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: f.dim() });
            }
            let dec = eig(&f)?;
            let scale = dec.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            if dec.eigenvalues[0] < -1e-8 * scale {
                return Err(Error::NotPositive(dec.eigenvalues[0]));
            }
            clean.push(if dec.eigenvalues[0] < 0.0 { dec.map(|l| l.max(0.0)) } else { f });
        }
        let sections: Vec<CMatrix> = clean.iter().map(|f| f.as_matrix().clone()).collect();
        let total = product_trace(&base, &sections)?;
        if total <= 1e-300 {
            return Err(Error::ZeroTrace(total));
        }
        let fibers = clean.into_iter().map(|f| f.scale(1.0 / total)).collect();
        Ok(FiberedDensity { base, fibers })
    }

    /// `P(x_j) = masses[j]·ρ_j`; the masses are rescaled to integrate to 1.
    pub fn from_masses(base: FiniteBase, masses: &[f64], densities: &[DensityMatrix]) -> Result<Self> {
        if masses.len() != densities.len() {
            return Err(Error::ComponentCount {
                expected: densities.len(),
                found: masses.len(),
            });
        }
        let fibers = masses.iter().zip(densities).map(|(m, r)| r.as_hermitian().scale(*m)).collect();
        Self::new(base, fibers)
    }

    pub fn base(&self) -> &FiniteBase {
        &self.base
    }

    pub fn fibers(&self) -> &[HermitianMatrix] {
        &self.fibers
    }

    pub fn dim(&self) -> usize {
        self.fibers[0].dim()
    }

    /// Fiber `j` divided by its trace, if the fiber is not empty.
    pub fn normalized_fiber(&self, j: usize) -> Option<DensityMatrix> {
        let m = self.fibers[j].trace();
        (m > ZERO_MASS).then(|| DensityMatrix::from_trusted(self.fibers[j].scale(1.0 / m)))
    }
}

/// `j ↦ tr P(x_j)`.
pub fn fiber_masses(p: &FiberedDensity) -> Vec<f64> {
    p.fibers.iter().map(HermitianMatrix::trace).collect()
}

/// `Ent_m(P) = Σ_j ν_j tr(P(x_j) log P(x_j))`.
pub fn mean_entropy(p: &FiberedDensity) -> Result<f64> {
    let mut total = 0.0;
    for (w, f) in p.base.weights.iter().zip(&p.fibers) {
        let s: f64 = eig(f)?.eigenvalues.iter().map(|&l| xlogx(l)).sum();
        total += w * s;
    }
    Ok(total)
}

/// A family of fiber derivations `(∂_x)_{x ∈ X}` with common `n` and `m`.
#[derive(Debug, Clone)]
pub struct VerticalGradient {
    base: FiniteBase,
    per_fiber: Vec<Derivation>,
}

impl VerticalGradient {
    pub fn new(base: FiniteBase, per_fiber: Vec<Derivation>) -> Result<Self> {
        if per_fiber.len() != base.len() {
            return Err(Error::ComponentCount {
                expected: base.len(),
                found: per_fiber.len(),
            });
        }
        let (n, m) = (per_fiber[0].dim(), per_fiber[0].components());
        for d in &per_fiber {
            if d.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: d.dim() });
            }
            if d.components() != m {
                return Err(Error::ComponentCount {
                    expected: m,
                    found: d.components(),
                });
            }
        }
        Ok(VerticalGradient { base, per_fiber })
    }

    pub fn base(&self) -> &FiniteBase {
        &self.base
    }

    pub fn per_fiber(&self) -> &[Derivation] {
        &self.per_fiber
    }

    pub fn dim(&self) -> usize {
        self.per_fiber[0].dim()
    }
}

#[derive(Debug, Clone)]
pub struct FiberRecord {
    pub mass: f64,
    /// Distance between the normalized fibers, `+∞` if infeasible.
    pub w2: f64,
    pub energy: f64,
    pub feasible: bool,
    pub converged: bool,
    pub iterations: usize,
    /// `None` for empty fibers and infeasible ones.
    pub path: Option<TransportPath>,
}

#[derive(Debug, Clone)]
pub struct DisintegrationResult {
    pub feasible: bool,
    /// `Σ_j ν_j tr P(x_j)·W_{2,x_j}²`, or `+∞`.
    pub total_sq: f64,
    pub per_fiber: Vec<FiberRecord>,
    /// First fiber whose masses differ or whose solve was infeasible.
    pub offending_fiber: Option<usize>,
    pub steps: usize,
}

impl DisintegrationResult {
    pub fn distance(&self) -> f64 {
        self.total_sq.sqrt()
    }

    pub fn converged(&self) -> bool {
        self.per_fiber.iter().all(|r| r.converged)
    }
}

fn check_compatible(vg: &VerticalGradient, p: &FiberedDensity) -> Result<()> {
    if p.base != vg.base {
        return Err(Error::InvalidArgument("density and gradient live on different bases".into()));
    }
    if p.dim() != vg.dim() {
        return Err(Error::DimensionMismatch {
            expected: vg.dim(),
            found: p.dim(),
        });
    }
    Ok(())
}

/// `W₂²(P, Q)` as the mass-weighted sum of fiber distances between the
/// normalized fibers. Fibers with different masses make the pair
/// infeasible.
pub fn disintegrated_distance(
    vg: &VerticalGradient,
    p: &FiberedDensity,
    q: &FiberedDensity,
    config: &SolverConfig,
) -> Result<DisintegrationResult> {
    check_compatible(vg, p)?;
    check_compatible(vg, q)?;
    let (mp, mq) = (fiber_masses(p), fiber_masses(q));
    if let Some(j) = (0..mp.len()).find(|&j| (mp[j] - mq[j]).abs() > MASS_TOL) {
        return Ok(DisintegrationResult {
            feasible: false,
            total_sq: f64::INFINITY,
            per_fiber: Vec::new(),
            offending_fiber: Some(j),
            steps: config.steps,
        });
    }
    let records = (0..mp.len())
        .into_par_iter()
        .map(|j| -> Result<FiberRecord> {
            let (Some(rho), Some(sigma)) = (p.normalized_fiber(j), q.normalized_fiber(j)) else {
                return Ok(FiberRecord {
                    mass: mp[j].max(0.0),
                    w2: 0.0,
                    energy: 0.0,
                    feasible: true,
                    converged: true,
                    iterations: 0,
                    path: None,
                });
            };
            let res = solve_geodesic(&vg.per_fiber[j], &rho, &sigma, config)?;
            Ok(FiberRecord {
                mass: mp[j],
                w2: res.distance,
                energy: res.energy,
                feasible: res.feasible,
                converged: res.converged,
                iterations: res.iterations,
                path: res.path,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let offending = records.iter().position(|r| !r.feasible);
    let total_sq = if offending.is_some() {
        f64::INFINITY
    } else {
        records
            .iter()
            .zip(&vg.base.weights)
            .map(|(r, w)| w * r.mass * r.energy)
            .sum()
    };
    Ok(DisintegrationResult {
        feasible: offending.is_none(),
        total_sq,
        per_fiber: records,
        offending_fiber: offending,
        steps: config.steps,
    })
}

/// A path of fibered densities assembled from fiber minimizers.
#[derive(Debug, Clone)]
pub struct FiberedPath {
    pub base: FiniteBase,
    /// `densities[t][j] = P_t(x_j)`
    pub densities: Vec<Vec<HermitianMatrix>>,
    /// `ν_j tr P(x_j)·E_j`
    pub fiber_energies: Vec<f64>,
}

impl FiberedPath {
    pub fn steps(&self) -> usize {
        self.densities.len() - 1
    }

    pub fn global_energy(&self) -> f64 {
        self.fiber_energies.iter().sum()
    }

    pub fn density_at(&self, step: usize) -> FiberedDensity {
        FiberedDensity {
            base: self.base.clone(),
            fibers: self.densities[step].clone(),
        }
    }
}

/// Rescales each fiber minimizer by its mass and stacks them into one path.
pub fn assemble_global_path(result: &DisintegrationResult, p: &FiberedDensity) -> Result<FiberedPath> {
    if !result.feasible {
        return Err(Error::InvalidArgument("cannot assemble a path for an infeasible pair".into()));
    }
    if result.per_fiber.len() != p.base.len() {
        return Err(Error::ComponentCount {
            expected: p.base.len(),
            found: result.per_fiber.len(),
        });
    }
    let n = p.dim();
    let steps = result.steps;
    let mut densities = vec![Vec::with_capacity(p.base.len()); steps + 1];
    let mut fiber_energies = Vec::with_capacity(p.base.len());
    for (j, rec) in result.per_fiber.iter().enumerate() {
        match &rec.path {
            Some(path) => {
                if path.steps() != steps {
                    return Err(Error::InvalidArgument("fiber paths have different step counts".into()));
                }
                for (t, rho) in path.densities.iter().enumerate() {
                    densities[t].push(rho.as_hermitian().scale(rec.mass));
                }
            }
            None => {
                for slot in densities.iter_mut() {
                    slot.push(HermitianMatrix::zeros(n));
                }
            }
        }
        fiber_energies.push(p.base.weights[j] * rec.mass * rec.energy);
    }
    Ok(FiberedPath {
        base: p.base.clone(),
        densities,
        fiber_energies,
    })
}

/// Embeds the bundle problem into one matrix algebra `M_{nK}`: the
/// generators become block-diagonal and the densities `⊕_j ν_j P(x_j)`.
/// Used to cross-check the disintegration against a monolithic solve.
pub fn monolithic_problem(
    vg: &VerticalGradient,
    p: &FiberedDensity,
    q: &FiberedDensity,
) -> Result<(Derivation, DensityMatrix, DensityMatrix)> {
    check_compatible(vg, p)?;
    check_compatible(vg, q)?;
    let (n, k) = (vg.dim(), vg.base.len());
    let block = |mats: Vec<&CMatrix>| {
        let mut out = CMatrix::zeros(n * k, n * k);
        for (j, m) in mats.into_iter().enumerate() {
            out.view_mut((j * n, j * n), (n, n)).copy_from(m);
        }
        HermitianMatrix::symmetrized(out)
    };
    let gens = (0..vg.per_fiber[0].components())
        .map(|c| block(vg.per_fiber.iter().map(|d| d.generators()[c].as_matrix()).collect()))
        .collect();
    let weighted = |f: &FiberedDensity| {
        let scaled: Vec<CMatrix> = f
            .fibers
            .iter()
            .zip(&vg.base.weights)
            .map(|(x, w)| x.as_matrix().map(|z| z * *w))
            .collect();
        DensityMatrix::new(block(scaled.iter().collect()))
    };
    Ok((Derivation::new(n * k, gens)?, weighted(p)?, weighted(q)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanCurvatureReport {
    pub mcurv_estimate: f64,
    pub fiber_estimates: Vec<f64>,
    pub essinf_fiber: f64,
    pub bound_satisfied: bool,
    pub pairs_evaluated: usize,
    pub pairs_skipped: usize,
    pub seed: u64,
}

/// Samples `P, Q` with a common random mass profile and independent fiber
/// densities `YY*/tr(YY*)`.
pub fn sample_pairs(vg: &VerticalGradient, sample_count: usize, seed: u64) -> Result<Vec<(FiberedDensity, FiberedDensity)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, k) = (vg.dim(), vg.base.len());
    (0..sample_count)
        .map(|_| {
            let masses: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
            let rho: Vec<_> = (0..k).map(|_| sample::density(&mut rng, n)).collect();
            let sigma: Vec<_> = (0..k).map(|_| sample::density(&mut rng, n)).collect();
            Ok((
                FiberedDensity::from_masses(vg.base.clone(), &masses, &rho)?,
                FiberedDensity::from_masses(vg.base.clone(), &masses, &sigma)?,
            ))
        })
        .collect()
}

/// Mean curvature gap and per-fiber curvature gaps over the same pairs.
pub fn mean_curvature_on_pairs(
    vg: &VerticalGradient,
    pairs: &[(FiberedDensity, FiberedDensity)],
    config: &SolverConfig,
    seed: u64,
) -> Result<MeanCurvatureReport> {
    let k = vg.base.len();
    let per_pair = pairs
        .par_iter()
        .map(|(p, q)| -> Result<Option<(f64, Vec<Option<f64>>)>> {
            let res = disintegrated_distance(vg, p, q, config)?;
            if !res.feasible || res.total_sq <= DEGENERATE_W2SQ {
                return Ok(None);
            }
            let mut fiber_gaps = Vec::with_capacity(k);
            for rec in &res.per_fiber {
                fiber_gaps.push(match &rec.path {
                    Some(path) if rec.energy > DEGENERATE_W2SQ => Some(curvature_gap(path, rec.energy)?),
                    _ => None,
                });
            }
            let global = assemble_global_path(&res, p)?;
            let entropies = (0..=global.steps())
                .map(|t| mean_entropy(&global.density_at(t)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Some((gap_from_entropies(&entropies, res.total_sq), fiber_gaps)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut mcurv = f64::INFINITY;
    let mut fiber_estimates = vec![f64::INFINITY; k];
    let (mut evaluated, mut skipped) = (0, 0);
    for item in per_pair {
        match item {
            Some((g, fibers)) => {
                evaluated += 1;
                mcurv = mcurv.min(g);
                for (est, f) in fiber_estimates.iter_mut().zip(fibers) {
                    if let Some(f) = f {
                        *est = est.min(f);
                    }
                }
            }
            None => skipped += 1,
        }
    }
    let essinf = fiber_estimates.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(MeanCurvatureReport {
        mcurv_estimate: mcurv,
        fiber_estimates,
        essinf_fiber: essinf,
        bound_satisfied: mcurv >= essinf - 1e-6,
        pairs_evaluated: evaluated,
        pairs_skipped: skipped,
        seed,
    })
}

/// Checks `mcurv ≥ min_x curv_x` on `sample_count` sampled pairs.
pub fn mean_curvature_check(
    vg: &VerticalGradient,
    sample_count: usize,
    seed: u64,
    config: &SolverConfig,
) -> Result<MeanCurvatureReport> {
    if sample_count == 0 {
        return Err(Error::InvalidArgument("sample_count must be at least 1".into()));
    }
    let pairs = sample_pairs(vg, sample_count, seed)?;
    mean_curvature_on_pairs(vg, &pairs, config, seed)
}
