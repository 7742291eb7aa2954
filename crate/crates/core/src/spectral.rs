//! Hermitian spectral decomposition and the functional calculus built on it:
//! scalar functions `f(a)`, two-variable Schur multipliers, the
//! logarithmic-mean multiplication operator and the inverse of the
//! derivative of the matrix logarithm.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::{c, CMatrix, HermitianMatrix};
use crate::superop::Superoperator;

pub const MAX_SWEEPS: usize = 100;
pub const OFF_DIAGONAL_TOL: f64 = 1e-13;
/// `dlog_solve` refuses eigenvalues below this.
pub const DLOG_THRESHOLD: f64 = 1e-12;
/// Eigenvalues within this multiple of the spectral radius of zero are
/// rounding noise. The logarithmic mean decays only like `s / ln(s/t)` as
/// `t → 0`, so such noise has to be removed before it is evaluated.
pub const NULL_EIGENVALUE: f64 = 1e-14;

/// Eigenvalues (ascending) and the unitary whose columns are eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    /// Sets eigenvalues of magnitude at most `NULL_EIGENVALUE · max|λ|` to zero.
    pub fn snap_null(mut self) -> Self {
        let radius = self.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let cut = NULL_EIGENVALUE * radius;
        for l in &mut self.eigenvalues {
            if l.abs() <= cut {
                *l = 0.0;
            }
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(λ) U*`
    pub fn reconstruct(&self) -> CMatrix {
        self.map(|l| l).into_matrix()
    }

    /// `U diag(f(λ)) U*` without domain checks.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, l) in self.eigenvalues.iter().enumerate() {
            let v = f(*l);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= v);
        }
        HermitianMatrix::symmetrized(scaled * u.adjoint())
    }

    /// `U* h U`
    pub fn to_eigenbasis(&self, h: &CMatrix) -> CMatrix {
        self.eigenvectors.adjoint() * h * &self.eigenvectors
    }

    /// `U h U*`
    pub fn from_eigenbasis(&self, h: &CMatrix) -> CMatrix {
        &self.eigenvectors * h * self.eigenvectors.adjoint()
    }

    /// `U [f(λ_i, λ_j) ⊙ (U* h U)] U*`
    pub fn schur(&self, f: impl Fn(f64, f64) -> f64, h: &CMatrix) -> CMatrix {
        let mut inner = self.to_eigenbasis(h);
        let l = &self.eigenvalues;
        for j in 0..l.len() {
            for i in 0..l.len() {
                inner[(i, j)] *= f(l[i], l[j]);
            }
        }
        self.from_eigenbasis(&inner)
    }
}

/// Cyclic complex Jacobi on a Hermitian matrix (only the Hermitian part of
/// `a` is used). Eigenvalues come back ascending.
pub(crate) fn eigh(a: &CMatrix) -> Result<SpectralDecomposition> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::NotSquare { rows: n, cols: a.ncols() });
    }
    let mut m = (a + a.adjoint()).map(|z| z * 0.5);
    let mut v = CMatrix::identity(n, n);
    let norm = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    let off_norm = |m: &CMatrix| {
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while norm > 0.0 {
        let off = off_norm(&m);
        if off <= OFF_DIAGONAL_TOL * norm {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let g = apq.norm();
                if g <= 1e-300 || g <= 1e-20 * norm {
                    continue;
                }
                // Make the pivot real: conjugate by diag(1, .., conj(phase) at q, ..).
                let phase = apq / g;
                let ph_c = phase.conj();
                for k in 0..n {
                    m[(k, q)] *= ph_c;
                    v[(k, q)] *= ph_c;
                }
                for k in 0..n {
                    m[(q, k)] *= phase;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * g);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = akp * cs - akq * sn;
                    m[(k, q)] = akp * sn + akq * cs;
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * cs - vkq * sn;
                    v[(k, q)] = vkp * sn + vkq * cs;
                }
                for k in 0..n {
                    let (apk, aqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = apk * cs - aqk * sn;
                    m[(q, k)] = apk * sn + aqk * cs;
                }
                m[(p, q)] = c(0.0, 0.0);
                m[(q, p)] = c(0.0, 0.0);
                m[(p, p)] = c(app - t * g, 0.0);
                m[(q, q)] = c(aqq + t * g, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| m[(i, i)].re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// Spectral decomposition of a Hermitian matrix.
pub fn eig(a: &HermitianMatrix) -> Result<SpectralDecomposition> {
    eigh(a.as_matrix())
}

/// `f(a) = U diag(f(λ_i)) U*`. Fails if `f` is not finite at some eigenvalue.
pub fn func_calc(a: &HermitianMatrix, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
    let dec = eig(a)?;
    for &l in &dec.eigenvalues {
        if !f(l).is_finite() {
            return Err(Error::Domain(l));
        }
    }
    Ok(dec.map(f))
}

/// The Hilbert-Schmidt projection onto the positive cone: negative
/// eigenvalues are replaced by zero.
pub fn positive_part(x: &HermitianMatrix) -> Result<HermitianMatrix> {
    Ok(eig(x)?.map(|l| l.max(0.0)))
}

/// Logarithmic mean `(s - t)/(log s - log t)`, continuously extended by
/// `L(s, s) = s` and `L(s, 0) = 0`. Negative arguments are read as zero.
pub fn log_mean(s: f64, t: f64) -> f64 {
    let (s, t) = (s.max(0.0), t.max(0.0));
    if s == 0.0 || t == 0.0 {
        return 0.0;
    }
    if s == t {
        return s;
    }
    let (hi, lo) = if s > t { (s, t) } else { (t, s) };
    let d = (lo - hi) / hi;
    if d.abs() < 1e-4 {
        hi * (1.0 + d / 2.0 - d * d / 12.0 + d * d * d / 24.0 - 19.0 * d.powi(4) / 720.0)
    } else {
        (hi - lo) / -d.ln_1p()
    }
}

/// Partial derivative of the logarithmic mean in its second argument.
pub(crate) fn log_mean_dt(s: f64, t: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if t <= 0.0 {
        return f64::INFINITY;
    }
    let x = s / t - 1.0;
    if x.abs() < 1e-4 {
        0.5 + x / 6.0 - x * x / 24.0
    } else {
        let l = x.ln_1p();
        (x - l) / (l * l)
    }
}

/// Divided difference of `u ↦ L(s, u)` between `t` and `u`.
pub(crate) fn log_mean_dd2(s: f64, t: f64, u: f64) -> f64 {
    if (t - u).abs() <= 1e-6 * t.abs().max(u.abs()) {
        log_mean_dt(s, 0.5 * (t + u))
    } else {
        (log_mean(s, t) - log_mean(s, u)) / (t - u)
    }
}

type KernelFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A real function of two nonnegative variables used as a Schur multiplier
/// in the eigenbasis of a Hermitian matrix.
#[derive(Clone)]
pub struct TwoVariableKernel {
    name: String,
    evaluator: Arc<KernelFn>,
}

impl fmt::Debug for TwoVariableKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TwoVariableKernel").field("name", &self.name).finish()
    }
}

impl TwoVariableKernel {
    pub fn log_mean() -> Self {
        TwoVariableKernel {
            name: "log_mean".into(),
            evaluator: Arc::new(log_mean),
        }
    }

    /// Divided difference of `log`, i.e. `1 / L(s, t)`.
    pub fn dlog() -> Self {
        TwoVariableKernel {
            name: "dlog".into(),
            evaluator: Arc::new(|s, t| 1.0 / log_mean(s, t)),
        }
    }

    /// Divided difference `(f(s) - f(t))/(s - t)` with diagonal `f'(s)`.
    pub fn quantum_derivative<F, D>(name: &str, f: F, df: D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        TwoVariableKernel {
            name: format!("quantum_derivative_of({name})"),
            evaluator: Arc::new(move |s, t| {
                if (s - t).abs() <= 1e-8 * s.abs().max(t.abs()) {
                    df(0.5 * (s + t))
                } else {
                    (f(s) - f(t)) / (s - t)
                }
            }),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, s: f64, t: f64) -> f64 {
        (self.evaluator)(s, t)
    }
}

/// `(L_a ⊗ R_a)(f)` applied to `h`.
pub fn schur_apply(a: &HermitianMatrix, f: &TwoVariableKernel, h: &CMatrix) -> Result<CMatrix> {
    if h.nrows() != a.dim() || h.ncols() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: h.nrows(),
        });
    }
    Ok(eig(a)?.schur(|s, t| f.eval(s, t), h))
}

/// Superoperator of the Schur multiplier `f` in the eigenbasis of `dec`:
/// `(Ū ⊗ U) diag(f(λ_i, λ_j)) (Ū ⊗ U)*` in column-stacking convention.
pub(crate) fn schur_superoperator(dec: &SpectralDecomposition, f: impl Fn(f64, f64) -> f64) -> Superoperator {
    let n = dec.dim();
    let u = &dec.eigenvectors;
    let w = u.map(|z| z.conj()).kronecker(u);
    let mut scaled = w.clone();
    for j in 0..n {
        for i in 0..n {
            let col = i + j * n;
            let v = f(dec.eigenvalues[i], dec.eigenvalues[j]);
            scaled.column_mut(col).iter_mut().for_each(|z| *z *= v);
        }
    }
    Superoperator::from_matrix(n, scaled * w.adjoint())
}

/// The logarithmic-mean multiplication operator
/// `M_p(h) = ∫₀¹ p^α h p^{1-α} dα`.
pub fn mult_op(p: &HermitianMatrix) -> Result<Superoperator> {
    let dec = eig(p)?.snap_null();
    Ok(schur_superoperator(&dec, log_mean))
}

/// Solves `∫₀¹ T^α X T^{1-α} dα = S` for `X`, which is the derivative of
/// the matrix logarithm at `T` in direction `S`.
pub fn dlog_solve(t: &HermitianMatrix, s: &HermitianMatrix) -> Result<HermitianMatrix> {
    if t.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            found: s.dim(),
        });
    }
    let dec = eig(t)?;
    let min = dec.eigenvalues[0];
    if min <= DLOG_THRESHOLD {
        return Err(Error::Singular {
            eigenvalue: min,
            threshold: DLOG_THRESHOLD,
        });
    }
    Ok(HermitianMatrix::symmetrized(
        dec.schur(|a, b| 1.0 / log_mean(a, b), s.as_matrix()),
    ))
}
