//! Tangent metric, Onsager operator `G(ρ) = ∂* M_ρ ∂`, admissible paths and
//! the time-discretized Benamou-Brenier solver for `W₂`.
//!
//! A discrete path has densities `ρ_0..ρ_N` on the uniform grid `t_j = j/N`
//! and potentials `U_1..U_N` solving `ρ_j - ρ_{j-1} = Δt·G(ρ̄_j) U_j` at the
//! midpoints `ρ̄_j`. Its energy is `Σ_j (Δt/2)⟨G(ρ̄_j)U_j, U_j⟩` and the
//! distance is the square root of the minimal energy.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::derivation::Derivation;
use crate::error::{Error, Result};
use crate::matrix::{c, commutator, hs_inner, hs_norm, CMatrix, DensityMatrix, HermitianMatrix};
use crate::sample;
use crate::spectral::{eig, eigh, log_mean, log_mean_dd2, SpectralDecomposition};
use crate::superop::{unvectorize, vectorize, Superoperator};

/// Eigenvalue floor added to midpoint densities inside the solver.
pub const REGULARIZATION: f64 = 1e-12;
/// Relative spectral cutoff for pseudo-inverses of `G(ρ)`.
pub const PINV_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub steps: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub patience: usize,
    pub feas_tol: f64,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            steps: 16,
            tol: 1e-8,
            max_iters: 5000,
            patience: 20,
            feas_tol: 1e-8,
            seed: 0,
            restarts: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPath {
    pub densities: Vec<DensityMatrix>,
    pub potentials: Vec<HermitianMatrix>,
    pub step_energies: Vec<f64>,
    /// Eigenvalue floor used when evaluating `G` at the midpoints.
    pub regularization: f64,
}

impl TransportPath {
    pub fn steps(&self) -> usize {
        self.potentials.len()
    }

    pub fn energy(&self) -> f64 {
        self.step_energies.iter().sum()
    }

    /// Constant path at `p`.
    pub fn constant(p: &DensityMatrix, steps: usize) -> Self {
        TransportPath {
            densities: vec![p.clone(); steps + 1],
            potentials: vec![HermitianMatrix::zeros(p.dim()); steps],
            step_energies: vec![0.0; steps],
            regularization: 0.0,
        }
    }

    /// The same path run backwards: `t ↦ 1 - t`, potentials negated.
    pub fn reversed(&self) -> Self {
        TransportPath {
            densities: self.densities.iter().rev().cloned().collect(),
            potentials: self.potentials.iter().rev().map(|u| u.scale(-1.0)).collect(),
            step_energies: self.step_energies.iter().rev().copied().collect(),
            regularization: self.regularization,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransportResult {
    /// `√energy`, or `+∞` when no admissible path exists.
    pub distance: f64,
    pub energy: f64,
    pub feasible: bool,
    pub path: Option<TransportPath>,
    pub iterations: usize,
    pub converged: bool,
    pub infeasible_component_norm: f64,
}

/// Why no admissible path exists: the velocity has a component outside the
/// range of `G`.
#[derive(Debug, Clone)]
pub struct Infeasibility {
    pub step: usize,
    pub kernel_component: HermitianMatrix,
    pub norm: f64,
}

#[derive(Debug, Clone)]
pub enum LinearPath {
    Feasible(TransportPath),
    Infeasible(Infeasibility),
}

fn check_same_dim(d: &Derivation, n: usize) -> Result<()> {
    if d.dim() != n {
        return Err(Error::DimensionMismatch { expected: d.dim(), found: n });
    }
    Ok(())
}

/// `⟨a, b⟩_p = Σ_k ⟨M_p ∂_k a, ∂_k b⟩_HS`
pub fn tangent_metric(d: &Derivation, p: &DensityMatrix, a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    check_same_dim(d, p.dim())?;
    let dec = eig(p.as_hermitian())?.snap_null();
    let ga = d.grad(a.as_matrix())?;
    let gb = d.grad(b.as_matrix())?;
    Ok(ga
        .iter()
        .zip(&gb)
        .map(|(x, y)| hs_inner(&dec.schur(log_mean, x), y).re)
        .sum())
}

/// `G(ρ)` evaluated in the eigenbasis of `ρ`.
struct OnsagerAt {
    dec: SpectralDecomposition,
    /// Generators rotated into the eigenbasis.
    gens: Vec<CMatrix>,
    weights: DMatrix<f64>,
}

impl OnsagerAt {
    fn new(d: &Derivation, rho: &CMatrix, floor: f64) -> Result<Self> {
        let n = rho.nrows();
        let shifted = rho + CMatrix::identity(n, n).map(|z| z * floor);
        let dec = eigh(&shifted)?;
        let gens = d.generators().iter().map(|t| dec.to_eigenbasis(t.as_matrix())).collect();
        let l = &dec.eigenvalues;
        let weights = DMatrix::from_fn(n, n, |i, j| log_mean(l[i], l[j]));
        Ok(OnsagerAt { dec, gens, weights })
    }

    /// `Σ_k [T̃_k, Λ ⊙ [T̃_k, x]]` for `x` in the eigenbasis.
    fn apply_rotated(&self, x: &CMatrix) -> CMatrix {
        let n = x.nrows();
        let mut out = CMatrix::zeros(n, n);
        for t in &self.gens {
            let mut inner = commutator(t, x);
            inner.zip_apply(&self.weights, |z, w| *z *= w);
            out += commutator(t, &inner);
        }
        out
    }

    fn apply(&self, x: &CMatrix) -> CMatrix {
        self.dec.from_eigenbasis(&self.apply_rotated(&self.dec.to_eigenbasis(x)))
    }

    /// Real matrix of `G` in the Hermitian coordinate basis, eigen-frame.
    fn real_matrix(&self, n: usize) -> DMatrix<f64> {
        let dim = n * n;
        let mut g = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            let x = herm_basis(n, b);
            let y = self.apply_rotated(&x);
            g.column_mut(b).copy_from(&herm_coords(&y));
        }
        g
    }
}

/// The `b`-th element of the orthonormal Hermitian basis: diagonal units
/// first, then `(E_ij + E_ji)/√2` and `i(E_ij - E_ji)/√2` for `i < j`.
fn herm_basis(n: usize, b: usize) -> CMatrix {
    let mut x = CMatrix::zeros(n, n);
    if b < n {
        x[(b, b)] = c(1.0, 0.0);
        return x;
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            if k == b {
                x[(i, j)] = c(r, 0.0);
                x[(j, i)] = c(r, 0.0);
                return x;
            }
            if k + 1 == b {
                x[(i, j)] = c(0.0, r);
                x[(j, i)] = c(0.0, -r);
                return x;
            }
            k += 2;
        }
    }
    unreachable!("basis index out of range")
}

fn herm_coords(h: &CMatrix) -> DVector<f64> {
    let n = h.nrows();
    let s = std::f64::consts::SQRT_2;
    let mut v = DVector::zeros(n * n);
    for i in 0..n {
        v[i] = h[(i, i)].re;
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = 0.5 * (h[(i, j)] + h[(j, i)].conj());
            v[k] = s * z.re;
            v[k + 1] = s * z.im;
            k += 2;
        }
    }
    v
}

fn herm_from_coords(n: usize, v: &[f64]) -> CMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = CMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = c(v[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            h[(i, j)] = c(r * v[k], r * v[k + 1]);
            h[(j, i)] = c(r * v[k], -r * v[k + 1]);
            k += 2;
        }
    }
    h
}

/// The Onsager operator `∂* M_p ∂` as a superoperator.
pub fn onsager(d: &Derivation, p: &DensityMatrix) -> Result<Superoperator> {
    check_same_dim(d, p.dim())?;
    let g = OnsagerAt::new(d, p.as_matrix(), 0.0)?;
    Ok(Superoperator::from_fn(p.dim(), |x| g.apply(x)))
}

/// `S_p`: `G(p)` on its range, the identity on its kernel. Always invertible.
pub fn s_operator(d: &Derivation, p: &DensityMatrix) -> Result<Superoperator> {
    let g = onsager(d, p)?;
    let spec = g.hermitian_eig()?;
    let top = spec.eigenvalues.last().copied().unwrap_or(0.0);
    let cut = PINV_CUTOFF * top;
    let w = &spec.eigenvectors;
    let mut scaled = w.clone();
    for (j, &l) in spec.eigenvalues.iter().enumerate() {
        let v = if l > cut && l > 0.0 { l } else { 1.0 };
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= v);
    }
    Superoperator::try_from_matrix(p.dim(), scaled * w.adjoint())
}

/// Pseudo-inverse solve of `G(ρ)U = v` plus the part of `v` that lies in
/// `ker G(ρ)`.
fn pinv_solve(g: &Superoperator, v: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = g.dim();
    let spec = g.hermitian_eig()?;
    let top = spec.eigenvalues.last().copied().unwrap_or(0.0);
    let cut = PINV_CUTOFF * top;
    let w = &spec.eigenvectors;
    let coeffs = w.adjoint() * vectorize(v);
    let mut sol = coeffs.clone();
    let mut rest = coeffs;
    for (j, &l) in spec.eigenvalues.iter().enumerate() {
        if l > cut && l > 0.0 {
            sol[j] /= l;
            rest[j] = c(0.0, 0.0);
        } else {
            sol[j] = c(0.0, 0.0);
        }
    }
    Ok((unvectorize(n, &(w * sol)), unvectorize(n, &(w * rest))))
}

/// Straight-line interpolation `ρ_j = (1 - j/N)p + (j/N)q` with potentials
/// `U_j = G(ρ̄_j)⁺(q - p)`. Its energy bounds `W₂²` from above.
pub fn linear_path(d: &Derivation, p: &DensityMatrix, q: &DensityMatrix, steps: usize, feas_tol: f64) -> Result<LinearPath> {
    check_same_dim(d, p.dim())?;
    check_same_dim(d, q.dim())?;
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    let dt = 1.0 / steps as f64;
    let velocity = q.as_matrix() - p.as_matrix();
    let densities: Vec<DensityMatrix> = (0..=steps)
        .map(|j| {
            let t = j as f64 * dt;
            let m = p.as_matrix().map(|z| z * (1.0 - t)) + q.as_matrix().map(|z| z * t);
            DensityMatrix::from_trusted(HermitianMatrix::symmetrized(m))
        })
        .collect();
    if hs_norm(&velocity) == 0.0 {
        return Ok(LinearPath::Feasible(TransportPath::constant(p, steps)));
    }
    let mut potentials = Vec::with_capacity(steps);
    let mut step_energies = Vec::with_capacity(steps);
    for j in 1..=steps {
        let mid = (densities[j - 1].as_matrix() + densities[j].as_matrix()).map(|z| z * 0.5);
        let mid = DensityMatrix::from_trusted(HermitianMatrix::symmetrized(mid));
        let g = onsager(d, &mid)?;
        let (u, rest) = pinv_solve(&g, &velocity)?;
        let norm = hs_norm(&rest);
        if norm > feas_tol {
            return Ok(LinearPath::Infeasible(Infeasibility {
                step: j,
                kernel_component: HermitianMatrix::symmetrized(rest),
                norm,
            }));
        }
        let u = HermitianMatrix::symmetrized(u);
        step_energies.push(0.5 * dt * hs_inner(&velocity, u.as_matrix()).re);
        potentials.push(u);
    }
    Ok(LinearPath::Feasible(TransportPath {
        densities,
        potentials,
        step_energies,
        regularization: 0.0,
    }))
}

/// Energy of a path after checking the discrete continuity equation.
pub fn path_energy(d: &Derivation, path: &TransportPath, feas_tol: f64) -> Result<f64> {
    let steps = path.steps();
    if path.densities.len() != steps + 1 || path.step_energies.len() != steps {
        return Err(Error::InvalidArgument("path arrays have inconsistent lengths".into()));
    }
    let dt = 1.0 / steps as f64;
    for j in 1..=steps {
        let (a, b) = (path.densities[j - 1].as_matrix(), path.densities[j].as_matrix());
        check_same_dim(d, a.nrows())?;
        let delta = b - a;
        let mid = (a + b).map(|z| z * 0.5);
        let g = OnsagerAt::new(d, &mid, path.regularization)?;
        let flow = g.apply(path.potentials[j - 1].as_matrix()).map(|z| z * dt);
        let residual = hs_norm(&(&delta - flow));
        if residual > feas_tol * hs_norm(&delta) + 1e-12 {
            return Err(Error::InvalidPath { step: j, residual });
        }
    }
    Ok(path.energy())
}

/// The discretized energy as a function of the interior densities, which
/// move in the affine set `{ρ : Π_ker ρ = Π_ker p}`.
struct Objective<'a> {
    d: &'a Derivation,
    n: usize,
    steps: usize,
    p: CMatrix,
    q: CMatrix,
    kernel: Vec<CMatrix>,
}

struct Evaluation {
    energy: f64,
    step_energies: Vec<f64>,
    potentials: Vec<CMatrix>,
    gradient: DVector<f64>,
}

impl<'a> Objective<'a> {
    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn unpack(&self, x: &DVector<f64>) -> Vec<CMatrix> {
        let dim = self.dim();
        let mut rhos = Vec::with_capacity(self.steps + 1);
        rhos.push(self.p.clone());
        for j in 0..self.steps - 1 {
            rhos.push(herm_from_coords(self.n, &x.as_slice()[j * dim..(j + 1) * dim]));
        }
        rhos.push(self.q.clone());
        rhos
    }

    fn pack(&self, rhos: &[CMatrix]) -> DVector<f64> {
        let dim = self.dim();
        let mut x = DVector::zeros((self.steps - 1) * dim);
        for (j, r) in rhos[1..self.steps].iter().enumerate() {
            x.rows_mut(j * dim, dim).copy_from(&herm_coords(r));
        }
        x
    }

    fn project_out_kernel(&self, h: &mut CMatrix) {
        for b in &self.kernel {
            let w = hs_inner(b, h).re;
            *h -= b.map(|z| z * w);
        }
    }

    /// `None` when an interior density leaves the positive cone.
    fn evaluate(&self, x: &DVector<f64>) -> Option<Evaluation> {
        let n = self.n;
        let rhos = self.unpack(x);
        for r in &rhos[1..self.steps] {
            Cholesky::new(r.clone())?;
        }
        let dt = 1.0 / self.steps as f64;
        let mut step_energies = Vec::with_capacity(self.steps);
        let mut potentials = Vec::with_capacity(self.steps);
        let mut mid_grads = Vec::with_capacity(self.steps);
        for j in 1..=self.steps {
            let delta = &rhos[j] - &rhos[j - 1];
            let mid = (&rhos[j] + &rhos[j - 1]).map(|z| z * 0.5);
            let g = OnsagerAt::new(self.d, &mid, REGULARIZATION).ok()?;
            let mut gm = g.real_matrix(n);
            for b in &self.kernel {
                let v = herm_coords(&g.dec.to_eigenbasis(b));
                gm.ger(1.0, &v, &v, 1.0);
            }
            let chol = Cholesky::new(gm)?;
            let rhs = herm_coords(&g.dec.to_eigenbasis(&delta));
            let w = chol.solve(&rhs);
            let e = rhs.dot(&w) / (2.0 * dt);
            if !e.is_finite() {
                return None;
            }
            step_energies.push(e);
            let u_rot = herm_from_coords(n, (w / dt).as_slice());

            // ∂E_j/∂ρ̄_j = -(Δt/2)·∇_ρ Σ_k ⟨A_k, M_ρ A_k⟩ with A_k = ∂̃_k U.
            let l = &g.dec.eigenvalues;
            let mut grad_rot = CMatrix::zeros(n, n);
            for t in &g.gens {
                let a = commutator(t, &u_rot).map(|z| z * c(0.0, 1.0));
                for i in 0..n {
                    for jj in 0..n {
                        let aji = a[(jj, i)];
                        for ll in 0..n {
                            grad_rot[(jj, ll)] += aji * a[(i, ll)] * log_mean_dd2(l[i], l[jj], l[ll]);
                        }
                    }
                }
            }
            let grad_mid = g.dec.from_eigenbasis(&grad_rot).map(|z| z * (-dt));
            mid_grads.push(grad_mid);
            potentials.push(g.dec.from_eigenbasis(&u_rot));
        }
        let dim = self.dim();
        let mut gradient = DVector::zeros((self.steps - 1) * dim);
        for j in 1..self.steps {
            let mut gj = &potentials[j - 1] - &potentials[j] + (&mid_grads[j - 1] + &mid_grads[j]).map(|z| z * 0.5);
            self.project_out_kernel(&mut gj);
            gradient.rows_mut((j - 1) * dim, dim).copy_from(&herm_coords(&gj));
        }
        Some(Evaluation {
            energy: step_energies.iter().sum(),
            step_energies,
            potentials,
            gradient,
        })
    }
}

struct Minimized {
    x: DVector<f64>,
    eval: Evaluation,
    iterations: usize,
    converged: bool,
}

/// L-BFGS with Armijo backtracking; infeasible trial points count as
/// failed steps.
fn minimize(obj: &Objective, x0: DVector<f64>, config: &SolverConfig) -> Option<Minimized> {
    const MEMORY: usize = 10;
    const ARMIJO: f64 = 1e-4;
    let mut x = x0;
    let mut cur = obj.evaluate(&x)?;
    let mut history = vec![cur.energy];
    let mut mem: Vec<(DVector<f64>, DVector<f64>, f64)> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iters {
        let gnorm = cur.gradient.norm();
        if gnorm == 0.0 || cur.energy == 0.0 {
            converged = true;
            break;
        }
        // two-loop recursion
        let mut dir = -cur.gradient.clone();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * s.dot(&dir);
            dir.axpy(-a, y, 1.0);
            alphas.push(a);
        }
        if let Some((s, y, _)) = mem.last() {
            dir *= s.dot(y) / y.dot(y);
        }
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * y.dot(&dir);
            dir.axpy(a - b, s, 1.0);
        }
        let mut slope = dir.dot(&cur.gradient);
        if !(slope < 0.0) {
            mem.clear();
            dir = -cur.gradient.clone();
            slope = -gnorm * gnorm;
        }
        let mut step = if mem.is_empty() { (0.05 / dir.norm()).min(1.0) } else { 1.0 };

        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + &dir * step;
            if let Some(ev) = obj.evaluate(&trial) {
                if ev.energy <= cur.energy + ARMIJO * step * slope {
                    accepted = Some((trial, ev));
                    break;
                }
            }
            step *= 0.5;
        }
        iterations += 1;
        let Some((nx, next)) = accepted else {
            if mem.is_empty() {
                // no descent left at working precision
                converged = true;
                break;
            }
            mem.clear();
            continue;
        };
        let s = &nx - &x;
        let y = &next.gradient - &cur.gradient;
        let sy = s.dot(&y);
        if sy > 1e-16 * s.norm() * y.norm() && sy > 0.0 {
            if mem.len() == MEMORY {
                mem.remove(0);
            }
            mem.push((s, y, 1.0 / sy));
        }
        x = nx;
        cur = next;
        history.push(cur.energy);
        if history.len() > config.patience {
            let old = history[history.len() - 1 - config.patience];
            let rel = (old - cur.energy) / cur.energy.abs().max(1e-300);
            if rel < config.tol {
                converged = true;
                break;
            }
        }
    }
    Some(Minimized {
        x,
        eval: cur,
        iterations,
        converged,
    })
}

fn infeasible_result(norm: f64) -> TransportResult {
    TransportResult {
        distance: f64::INFINITY,
        energy: f64::INFINITY,
        feasible: false,
        path: None,
        iterations: 0,
        converged: true,
        infeasible_component_norm: norm,
    }
}

/// Minimizes the discrete energy over paths from `p` to `q`, starting from
/// the linear interpolation.
pub fn solve_geodesic(d: &Derivation, p: &DensityMatrix, q: &DensityMatrix, config: &SolverConfig) -> Result<TransportResult> {
    check_same_dim(d, p.dim())?;
    check_same_dim(d, q.dim())?;
    if config.steps == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    let n = p.dim();
    let diff = q.as_matrix() - p.as_matrix();
    let obstruction = hs_norm(&d.kernel_component(&diff));
    if obstruction > config.feas_tol {
        return Ok(infeasible_result(obstruction));
    }
    if hs_norm(&diff) == 0.0 {
        return Ok(TransportResult {
            distance: 0.0,
            energy: 0.0,
            feasible: true,
            path: Some(TransportPath::constant(p, config.steps)),
            iterations: 0,
            converged: true,
            infeasible_component_norm: obstruction,
        });
    }

    // Endpoints are shifted onto a common kernel component so interior
    // iterates can stay exactly on the affine constraint set.
    let steps = config.steps;
    let obj = Objective {
        d,
        n,
        steps,
        p: p.as_matrix().clone(),
        q: q.as_matrix().clone(),
        kernel: d.kernel().iter().map(|b| b.as_matrix().clone()).collect(),
    };
    let linear: Vec<CMatrix> = (0..=steps)
        .map(|j| {
            let t = j as f64 / steps as f64;
            p.as_matrix().map(|z| z * (1.0 - t)) + q.as_matrix().map(|z| z * t)
        })
        .collect();

    let mut starts = vec![obj.pack(&linear)];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.restarts {
        let mut rhos = linear.clone();
        for r in rhos[1..steps].iter_mut() {
            let mut pert = sample::density(&mut rng, n).as_matrix() - &*r;
            obj.project_out_kernel(&mut pert);
            let mut eps = 0.3;
            loop {
                let trial = &*r + pert.map(|z| z * eps);
                if Cholesky::new(trial.clone()).is_some() || eps < 1e-6 {
                    if eps >= 1e-6 {
                        *r = trial;
                    }
                    break;
                }
                eps *= 0.5;
            }
        }
        starts.push(obj.pack(&rhos));
    }

    let mut best: Option<Minimized> = None;
    for x0 in starts {
        let run = if steps == 1 {
            obj.evaluate(&x0).map(|eval| Minimized {
                x: x0,
                eval,
                iterations: 0,
                converged: true,
            })
        } else {
            minimize(&obj, x0, config)
        };
        if let Some(run) = run {
            if best.as_ref().is_none_or(|b| run.eval.energy < b.eval.energy) {
                best = Some(run);
            }
        }
    }
    let Some(best) = best else {
        return Err(Error::InvalidArgument("initial path is not evaluable".into()));
    };

    let rhos = obj.unpack(&best.x);
    let mut residual = 0.0f64;
    for j in 1..=steps {
        residual = residual.max(hs_norm(&d.kernel_component(&(&rhos[j] - &rhos[j - 1]))));
    }
    let densities = rhos
        .into_iter()
        .map(|r| DensityMatrix::from_trusted(HermitianMatrix::symmetrized(r)))
        .collect();
    let path = TransportPath {
        densities,
        potentials: best.eval.potentials.into_iter().map(HermitianMatrix::symmetrized).collect(),
        step_energies: best.eval.step_energies,
        regularization: REGULARIZATION,
    };
    let energy = best.eval.energy;
    Ok(TransportResult {
        distance: energy.max(0.0).sqrt(),
        energy,
        feasible: true,
        path: Some(path),
        iterations: best.iterations,
        converged: best.converged,
        infeasible_component_norm: residual,
    })
}
