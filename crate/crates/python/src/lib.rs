//! Python bindings. Matrices cross the boundary as nested lists (or any
//! nested sequence, e.g. a NumPy array) of complex numbers.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ncot::bundle::{disintegrated_distance as disintegrate, FiberedDensity, FiniteBase, VerticalGradient};
use ncot::{CMatrix, DensityMatrix, HermitianMatrix, SolverConfig};

type Rows = Vec<Vec<Complex64>>;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: &Rows) -> PyResult<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a non-empty square matrix"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn to_rows(m: &CMatrix) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Rejects input that is not Hermitian up to rounding; the core type would
/// silently symmetrize it.
fn hermitian(rows: &Rows) -> PyResult<HermitianMatrix> {
    let m = to_matrix(rows)?;
    if (&m - m.adjoint()).norm() > 1e-10 * m.norm().max(1.0) {
        return Err(PyValueError::new_err("matrix is not Hermitian"));
    }
    HermitianMatrix::new(m).map_err(err)
}

fn density(rows: &Rows) -> PyResult<DensityMatrix> {
    DensityMatrix::from_matrix(to_matrix(rows)?).map_err(err)
}

fn config(steps: usize, tol: f64, max_iters: usize, seed: u64) -> SolverConfig {
    SolverConfig {
        steps,
        tol,
        max_iters,
        seed,
        ..SolverConfig::default()
    }
}

/// The derivation `a ↦ (i[T_k, a])_k` on `M_n(ℂ)`.
#[pyclass(module = "pyncot", frozen, from_py_object)]
#[derive(Clone)]
struct Derivation {
    inner: ncot::Derivation,
}

#[pymethods]
impl Derivation {
    /// `generators`: Hermitian matrices `T_k`. `n` is only needed when the
    /// list is empty.
    #[new]
    #[pyo3(signature = (generators, n=None))]
    fn new(generators: Vec<Rows>, n: Option<usize>) -> PyResult<Self> {
        let gens = generators.iter().map(hermitian).collect::<PyResult<Vec<_>>>()?;
        let dim = match (gens.first(), n) {
            (Some(g), _) => g.dim(),
            (None, Some(n)) => n,
            (None, None) => return Err(PyValueError::new_err("an empty generator list needs n")),
        };
        Ok(Derivation {
            inner: ncot::Derivation::new(dim, gens).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn components(&self) -> usize {
        self.inner.components()
    }

    fn grad(&self, a: Rows) -> PyResult<Vec<Rows>> {
        Ok(self.inner.grad(&to_matrix(&a)?).map_err(err)?.iter().map(to_rows).collect())
    }

    fn laplacian(&self, a: Rows) -> PyResult<Rows> {
        let a = to_matrix(&a)?;
        if a.nrows() != self.inner.dim() {
            return Err(PyValueError::new_err("dimension mismatch"));
        }
        Ok(to_rows(&self.inner.apply_laplacian(&a)))
    }

    fn laplacian_spectrum(&self) -> Vec<f64> {
        self.inner.laplacian_spectrum().eigenvalues.clone()
    }

    fn spectral_gap(&self) -> f64 {
        self.inner.spectral_gap()
    }

    fn is_ergodic(&self) -> bool {
        self.inner.is_ergodic()
    }

    /// Orthonormal Hermitian basis of the commutant of the generators.
    fn kernel(&self) -> Vec<Rows> {
        self.inner.kernel().iter().map(|k| to_rows(k.as_matrix())).collect()
    }

    /// `e^{-tΔ} p`
    fn heat(&self, p: Rows, t: f64) -> PyResult<Rows> {
        let p = density(&p)?;
        Ok(to_rows(self.inner.heat(&p, t).map_err(err)?.as_matrix()))
    }

    fn __repr__(&self) -> String {
        format!("Derivation(n={}, components={})", self.inner.dim(), self.inner.components())
    }
}

/// Outcome of a geodesic solve.
#[pyclass(module = "pyncot", frozen, get_all)]
struct TransportResult {
    /// `inf` when no admissible path exists.
    distance: f64,
    energy: f64,
    feasible: bool,
    converged: bool,
    iterations: usize,
    infeasible_component_norm: f64,
    densities: Vec<Rows>,
    potentials: Vec<Rows>,
    step_energies: Vec<f64>,
}

#[pymethods]
impl TransportResult {
    fn __repr__(&self) -> String {
        format!(
            "TransportResult(distance={}, feasible={}, converged={}, iterations={})",
            self.distance, self.feasible, self.converged, self.iterations
        )
    }
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
#[pyfunction]
fn eig(a: Rows) -> PyResult<(Vec<f64>, Rows)> {
    let dec = ncot::eig(&hermitian(&a)?).map_err(err)?;
    Ok((dec.eigenvalues.clone(), to_rows(&dec.eigenvectors)))
}

#[pyfunction]
fn log_mean(s: f64, t: f64) -> f64 {
    ncot::spectral::log_mean(s, t)
}

/// `∫₀¹ p^α h p^{1-α} dα`
#[pyfunction]
fn mult_op(p: Rows, h: Rows) -> PyResult<Rows> {
    let m = ncot::mult_op(&hermitian(&p)?).map_err(err)?;
    let h = to_matrix(&h)?;
    if h.nrows() != m.dim() {
        return Err(PyValueError::new_err("dimension mismatch"));
    }
    Ok(to_rows(&m.apply(&h)))
}

/// Solves `∫₀¹ t^α X t^{1-α} dα = s` for `X`.
#[pyfunction]
fn dlog_solve(t: Rows, s: Rows) -> PyResult<Rows> {
    Ok(to_rows(ncot::dlog_solve(&hermitian(&t)?, &hermitian(&s)?).map_err(err)?.as_matrix()))
}

/// `tr(p log p)`
#[pyfunction]
fn entropy(p: Rows) -> PyResult<f64> {
    ncot::entropy(&density(&p)?).map_err(err)
}

/// Time derivative of the entropy along the heat flow at `p`.
#[pyfunction]
fn entropy_dissipation(d: &Derivation, p: Rows) -> PyResult<f64> {
    ncot::entropy_dissipation(&d.inner, &density(&p)?).map_err(err)
}

/// Minimizes the discretized path energy from `p` to `q`.
#[pyfunction]
#[pyo3(signature = (d, p, q, steps=16, tol=1e-8, max_iters=5000, seed=0))]
fn geodesic(py: Python<'_>, d: &Derivation, p: Rows, q: Rows, steps: usize, tol: f64, max_iters: usize, seed: u64) -> PyResult<TransportResult> {
    let (p, q) = (density(&p)?, density(&q)?);
    let cfg = config(steps, tol, max_iters, seed);
    let res = py.detach(|| ncot::solve_geodesic(&d.inner, &p, &q, &cfg)).map_err(err)?;
    let (densities, potentials, step_energies) = match &res.path {
        Some(path) => (
            path.densities.iter().map(|r| to_rows(r.as_matrix())).collect(),
            path.potentials.iter().map(|u| to_rows(u.as_matrix())).collect(),
            path.step_energies.clone(),
        ),
        None => (Vec::new(), Vec::new(), Vec::new()),
    };
    Ok(TransportResult {
        distance: res.distance,
        energy: res.energy,
        feasible: res.feasible,
        converged: res.converged,
        iterations: res.iterations,
        infeasible_component_norm: res.infeasible_component_norm,
        densities,
        potentials,
        step_energies,
    })
}

/// `W₂(p, q)`, or `inf` if the pair cannot be connected.
#[pyfunction]
#[pyo3(signature = (d, p, q, steps=16, tol=1e-8, max_iters=5000, seed=0))]
fn distance(py: Python<'_>, d: &Derivation, p: Rows, q: Rows, steps: usize, tol: f64, max_iters: usize, seed: u64) -> PyResult<f64> {
    Ok(geodesic(py, d, p, q, steps, tol, max_iters, seed)?.distance)
}

/// Sampled entropic curvature estimate, as a JSON string.
#[pyfunction]
#[pyo3(signature = (d, samples, seed=0, steps=16))]
fn estimate_curvature(py: Python<'_>, d: &Derivation, samples: usize, seed: u64, steps: usize) -> PyResult<String> {
    let cfg = config(steps, 1e-8, 5000, seed);
    let report = py.detach(|| ncot::estimate_curvature(&d.inner, samples, seed, &cfg)).map_err(err)?;
    Ok(ncot::io::to_json(&report))
}

/// Bundle distance over a finite base: returns `(total_sq, per-fiber
/// distances)`; `total_sq` is `inf` when fiber masses differ.
#[pyfunction]
#[pyo3(signature = (weights, fibers, p, q, steps=16))]
fn disintegrated_distance(py: Python<'_>, weights: Vec<f64>, fibers: Vec<Derivation>, p: Vec<Rows>, q: Vec<Rows>, steps: usize) -> PyResult<(f64, Vec<f64>)> {
    let base = FiniteBase::new(weights).map_err(err)?;
    let vg = VerticalGradient::new(base.clone(), fibers.into_iter().map(|d| d.inner).collect()).map_err(err)?;
    let section = |s: &[Rows]| -> PyResult<FiberedDensity> {
        FiberedDensity::new(base.clone(), s.iter().map(hermitian).collect::<PyResult<Vec<_>>>()?).map_err(err)
    };
    let (p, q) = (section(&p)?, section(&q)?);
    let cfg = config(steps, 1e-8, 5000, 0);
    let res = py.detach(|| disintegrate(&vg, &p, &q, &cfg)).map_err(err)?;
    Ok((res.total_sq, res.per_fiber.iter().map(|f| f.w2).collect()))
}

/// Runs a built-in invariant suite; returns `(name, residual, tolerance, passed)` rows.
#[pyfunction]
#[pyo3(signature = (suite, seed=0))]
fn run_checks(py: Python<'_>, suite: &str, seed: u64) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let lines = py.detach(|| ncot::checks::run_suite(suite, seed)).map_err(err)?;
    Ok(lines
        .into_iter()
        .map(|l| (format!("{}/{}", l.suite, l.name), l.residual, l.tolerance, l.passed))
        .collect())
}

#[pymodule]
fn pyncot(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Derivation>()?;
    m.add_class::<TransportResult>()?;
    m.add_function(wrap_pyfunction!(eig, m)?)?;
    m.add_function(wrap_pyfunction!(log_mean, m)?)?;
    m.add_function(wrap_pyfunction!(mult_op, m)?)?;
    m.add_function(wrap_pyfunction!(dlog_solve, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_dissipation, m)?)?;
    m.add_function(wrap_pyfunction!(geodesic, m)?)?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_curvature, m)?)?;
    m.add_function(wrap_pyfunction!(disintegrated_distance, m)?)?;
    m.add_function(wrap_pyfunction!(run_checks, m)?)?;
    Ok(())
}
