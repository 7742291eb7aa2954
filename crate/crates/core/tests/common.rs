// Test-only oracles, written independently of the library's code paths.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CM = DMatrix<Complex64>;

/// `p^α` through nalgebra's own Hermitian eigensolver.
pub fn hermitian_power(p: &CM, alpha: f64) -> CM {
    let eig = SymmetricEigen::new(p.clone());
    let u = eig.eigenvectors;
    let d = CM::from_diagonal(&eig.eigenvalues.map(|l| {
        let l = l.max(0.0);
        // zero eigenvalues contribute nothing away from a null set of α
        Complex64::new(if l <= 1e-12 { 0.0 } else { l.powf(alpha) }, 0.0)
    }));
    &u * d * u.adjoint()
}

/// Adaptive Simpson quadrature of a matrix-valued integrand on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> CM, a: f64, b: f64, tol: f64) -> CM {
    fn norm(m: &CM) -> f64 {
        m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
    fn rec(f: &dyn Fn(f64) -> CM, a: f64, b: f64, fa: CM, fm: CM, fb: CM, whole: CM, tol: f64, depth: u32) -> CM {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let h = (b - a) / 12.0;
        let left = (&fa + &flm * Complex64::new(4.0, 0.0) + &fm) * Complex64::new(h, 0.0);
        let right = (&fm + &frm * Complex64::new(4.0, 0.0) + &fb) * Complex64::new(h, 0.0);
        let sum = &left + &right;
        let err = norm(&(&sum - &whole));
        if depth == 0 || err <= 15.0 * tol {
            return &sum + (&sum - &whole) / Complex64::new(15.0, 0.0);
        }
        rec(f, a, m, fa, flm, fm.clone(), left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (&fa + &fm * Complex64::new(4.0, 0.0) + &fb) * Complex64::new((b - a) / 6.0, 0.0);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `∫₀¹ p^α h p^{1-α} dα`
pub fn mult_op_quadrature(p: &CM, h: &CM) -> CM {
    adaptive_simpson(&|a| hermitian_power(p, a) * h * hermitian_power(p, 1.0 - a), 0.0, 1.0, 1e-13)
}

/// Logarithmic mean evaluated as `∫₀¹ s^α t^{1-α} dα` by scalar quadrature.
pub fn log_mean_quadrature(s: f64, t: f64) -> f64 {
    let m = adaptive_simpson(
        &|a| CM::from_element(1, 1, Complex64::new(s.powf(a) * t.powf(1.0 - a), 0.0)),
        0.0,
        1.0,
        1e-15,
    );
    m[(0, 0)].re
}

/// Distance between `diag(x, 1-x)` and `diag(y, 1-y)` for the qubit with
/// the single generator σ_x, by dynamic programming over a uniform grid on
/// the diagonal densities.
///
/// On the diagonal the metric is `ds² = dx² / (2·L(x, 1-x))`, so with the
/// energy `½∫|v|²` the distance is `length/√2`. The DP allows jumps of up
/// to `reach` grid cells and charges each jump its Simpson-rule length.
pub fn diagonal_qubit_distance(x: f64, y: f64, grid: usize) -> f64 {
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    if lo == hi {
        return 0.0;
    }
    let h = (hi - lo) / (grid - 1) as f64;
    let speed = |z: f64| 1.0 / (2.0 * log_mean_quadrature(z, 1.0 - z)).sqrt();
    // every node and every chord midpoint lies on the half-step grid
    let half: Vec<f64> = (0..2 * grid - 1).map(|k| speed(lo + k as f64 * 0.5 * h)).collect();
    let mut best = vec![f64::INFINITY; grid];
    best[0] = 0.0;
    let reach = 3;
    for i in 0..grid {
        for k in 1..=reach {
            let j = i + k;
            if j >= grid {
                break;
            }
            let cost = k as f64 * h / 6.0 * (half[2 * i] + 4.0 * half[i + j] + half[2 * j]);
            if best[i] + cost < best[j] {
                best[j] = best[i] + cost;
            }
        }
    }
    best[grid - 1] / std::f64::consts::SQRT_2
}
