//! Built-in invariant suites. Each suite draws its instances from a seeded
//! generator and reports, per invariant, the worst residual observed
//! against a fixed tolerance.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bundle::{
    assemble_global_path, disintegrated_distance, mean_curvature_check, monolithic_problem, FiberedDensity,
    FiniteBase, VerticalGradient,
};
use crate::entropy::{curvature_gap, entropy, entropy_dissipation};
use crate::error::{Error, Result};
use crate::matrix::{c, hs_norm, DensityMatrix, HermitianMatrix};
use crate::sample;
use crate::spectral::{dlog_solve, func_calc, mult_op, schur_apply, TwoVariableKernel};
use crate::transport::{linear_path, path_energy, solve_geodesic, LinearPath, SolverConfig};

pub const SUITES: [&str; 5] = ["spectral", "derivation", "entropy", "transport", "bundle"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub suite: &'static str,
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckLine {
    /// Passes when `residual ≤ tolerance`; NaN fails.
    fn new(suite: &'static str, name: &'static str, residual: f64, tolerance: f64) -> Self {
        CheckLine {
            suite,
            name,
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<10} {:<34} residual {:>13.6e}  tol {:>8.1e}  {}",
            self.suite,
            self.name,
            self.residual,
            self.tolerance,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

/// Runs one suite, or every suite in order for `"all"`.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<CheckLine>> {
    match name {
        "all" => {
            let mut out = Vec::new();
            for s in SUITES {
                out.extend(run_suite(s, seed)?);
            }
            Ok(out)
        }
        "spectral" => spectral(seed),
        "derivation" => derivation(seed),
        "entropy" => entropy_suite(seed),
        "transport" => transport(seed),
        "bundle" => bundle(seed),
        other => Err(Error::InvalidArgument(format!(
            "unknown suite '{other}', expected one of {}, all",
            SUITES.join(", ")
        ))),
    }
}

/// One line per check followed by a count of failures.
pub fn render(lines: &[CheckLine]) -> String {
    let mut out = String::new();
    for l in lines {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    let failed = lines.iter().filter(|l| !l.passed).count();
    out.push_str(&format!("{} checks, {} failed\n", lines.len(), failed));
    out
}

// every suite gets its own stream so suites agree whether run alone or in "all"
fn rng_for(seed: u64, suite: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(suite);
    rng
}

fn worst(acc: &mut f64, r: f64) {
    if r.is_nan() || r > *acc {
        *acc = r;
    }
}

fn config(steps: usize) -> SolverConfig {
    SolverConfig {
        steps,
        ..SolverConfig::default()
    }
}

fn spectral(seed: u64) -> Result<Vec<CheckLine>> {
    let mut rng = rng_for(seed, 1);
    let (mut round_trip, mut contraction, mut commuting, mut hermitian, mut norm) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..20 {
        let n = [2, 3, 4, 6][i % 4];
        let t = sample::density(&mut rng, n);
        let s = sample::hermitian(&mut rng, n);
        let x = dlog_solve(t.as_hermitian(), &s)?;
        let back = mult_op(t.as_hermitian())?.apply(x.as_matrix());
        worst(&mut round_trip, hs_norm(&(back - s.as_matrix())) / hs_norm(s.as_matrix()));

        let a = sample::hermitian(&mut rng, n);
        let h = sample::complex_matrix(&mut rng, n);
        let f = TwoVariableKernel::quantum_derivative("exp", f64::exp, f64::exp);
        let dec = a.eig()?;
        let bound = dec
            .eigenvalues
            .iter()
            .flat_map(|&u| dec.eigenvalues.iter().map(move |&v| (u, v)))
            .map(|(u, v)| f.eval(u, v).abs())
            .fold(0.0, f64::max);
        let out = schur_apply(&a, &f, &h)?;
        worst(&mut contraction, hs_norm(&out) - bound * hs_norm(&h));

        // a function of p commutes with p
        let p = sample::density(&mut rng, n);
        let g = func_calc(p.as_hermitian(), |l| l * l - 0.5 * l)?;
        let lhs = mult_op(p.as_hermitian())?.apply(g.as_matrix());
        worst(&mut commuting, hs_norm(&(lhs - p.as_matrix() * g.as_matrix())));

        let hh = sample::hermitian(&mut rng, n);
        let out = schur_apply(&a, &TwoVariableKernel::log_mean(), hh.as_matrix())?;
        worst(&mut hermitian, hs_norm(&(&out - out.adjoint())));

        let max = p.as_hermitian().eig()?.eigenvalues[n - 1];
        worst(&mut norm, (mult_op(p.as_hermitian())?.operator_norm()? - max).abs());
    }
    const S: &str = "spectral";
    Ok(vec![
        CheckLine::new(S, "dlog round trip (relative)", round_trip, 1e-9),
        CheckLine::new(S, "schur contraction excess", contraction, 1e-10),
        CheckLine::new(S, "commuting reduction", commuting, 1e-10),
        CheckLine::new(S, "hermiticity preservation", hermitian, 1e-12),
        CheckLine::new(S, "multiplication operator norm", norm, 1e-8),
    ])
}

fn derivation(seed: u64) -> Result<Vec<CheckLine>> {
    let mut rng = rng_for(seed, 2);
    let (mut leibniz, mut symmetry, mut chain, mut lipschitz, mut key, mut trace) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..20 {
        let n = 2 + i % 3;
        let d = sample::derivation(&mut rng, n, 1 + i % 3);
        let a = sample::complex_matrix(&mut rng, n);
        let b = sample::complex_matrix(&mut rng, n);
        let gab = d.grad(&(&a * &b))?;
        let (ga, gb) = (d.grad(&a)?, d.grad(&b)?);
        for k in 0..d.components() {
            worst(&mut leibniz, hs_norm(&(&gab[k] - (&ga[k] * &b + &a * &gb[k]))));
        }
        let gstar = d.grad(&a.adjoint())?;
        for k in 0..d.components() {
            worst(&mut symmetry, hs_norm(&(&gstar[k] - ga[k].adjoint())));
        }

        let rho = sample::density(&mut rng, n);
        let log = func_calc(rho.as_hermitian(), f64::ln)?;
        let glog = d.grad(log.as_matrix())?;
        let grho = d.grad(rho.as_matrix())?;
        let m = mult_op(rho.as_hermitian())?;
        let min = rho.min_eigenvalue()?;
        for k in 0..d.components() {
            let via_schur = schur_apply(rho.as_hermitian(), &TwoVariableKernel::dlog(), &grho[k])?;
            worst(&mut chain, hs_norm(&(&glog[k] - via_schur)));
            worst(&mut key, hs_norm(&(m.apply(&glog[k]) - &grho[k])));
        }
        let lhs = glog.iter().map(|g| hs_norm(g).powi(2)).sum::<f64>().sqrt();
        let rhs = grho.iter().map(|g| hs_norm(g).powi(2)).sum::<f64>().sqrt() / min;
        worst(&mut lipschitz, (lhs - rhs) / rhs);

        for t in [0.0, 0.25, 0.5, 1.0, 2.0] {
            worst(&mut trace, (d.heat(&rho, t)?.as_hermitian().trace() - 1.0).abs());
        }
    }
    let mut improving = f64::NEG_INFINITY;
    for _ in 0..10 {
        let n = 2 + rng.random_range(0..3);
        let d = sample::derivation(&mut rng, n, 2);
        if !d.is_ergodic() {
            continue;
        }
        let p = sample::density_of_rank(&mut rng, n, 1);
        let min = d.heat(&p, 0.1)?.min_eigenvalue()?;
        worst(&mut improving, -min);
    }
    const S: &str = "derivation";
    Ok(vec![
        CheckLine::new(S, "leibniz rule", leibniz, 1e-10),
        CheckLine::new(S, "adjoint symmetry", symmetry, 1e-12),
        CheckLine::new(S, "chain rule for log", chain, 1e-8),
        CheckLine::new(S, "log lipschitz excess (relative)", lipschitz, 1e-12),
        CheckLine::new(S, "key identity", key, 1e-8),
        CheckLine::new(S, "heat trace conservation", trace, 1e-10),
        // residual is minus the smallest eigenvalue, so it must be negative
        CheckLine::new(S, "positivity improving", improving, 0.0),
    ])
}

fn entropy_suite(seed: u64) -> Result<Vec<CheckLine>> {
    let mut rng = rng_for(seed, 3);
    let (mut monotone, mut dissipation, mut convex) = (0.0, 0.0, 0.0);
    for i in 0..10 {
        let n = 2 + i % 3;
        let d = sample::derivation(&mut rng, n, 2);
        let p = sample::density(&mut rng, n);
        let mut prev = entropy(&p)?;
        for j in 1..=10 {
            let e = entropy(&d.heat(&p, j as f64 * 0.1)?)?;
            worst(&mut monotone, e - prev);
            prev = e;
        }
        let (t, h) = (0.1, 1e-5);
        let fd = (entropy(&d.heat(&p, t + h)?)? - entropy(&d.heat(&p, t - h)?)?) / (2.0 * h);
        worst(&mut dissipation, (fd - entropy_dissipation(&d, &d.heat(&p, t)?)?).abs());

        let q = sample::density_of_rank(&mut rng, n, 1 + i % n);
        let (ep, eq) = (entropy(&p)?, entropy(&q)?);
        for j in 0..=10 {
            let s = j as f64 / 10.0;
            let mix = DensityMatrix::from_matrix(p.as_matrix() * c(1.0 - s, 0.0) + q.as_matrix() * c(s, 0.0))?;
            worst(&mut convex, entropy(&mix)? - ((1.0 - s) * ep + s * eq));
        }
    }
    let mut reversal = 0.0;
    let cfg = config(12);
    for _ in 0..2 {
        let d = sample::derivation(&mut rng, 2, 2);
        let (p, q) = (sample::density(&mut rng, 2), sample::density(&mut rng, 2));
        let fwd = solve_geodesic(&d, &p, &q, &cfg)?;
        let bwd = solve_geodesic(&d, &q, &p, &cfg)?;
        let (Some(fp), Some(bp)) = (&fwd.path, &bwd.path) else {
            worst(&mut reversal, f64::NAN);
            continue;
        };
        let a = curvature_gap(fp, fwd.energy)?;
        let b = curvature_gap(bp, bwd.energy)?;
        worst(&mut reversal, (a - b).abs() / (1.0 + a.abs()));
    }
    const S: &str = "entropy";
    Ok(vec![
        CheckLine::new(S, "heat monotonicity excess", monotone, 1e-12),
        CheckLine::new(S, "dissipation identity", dissipation, 1e-3),
        CheckLine::new(S, "convexity excess", convex, 1e-12),
        CheckLine::new(S, "curvature gap reversal", reversal, 1e-3),
    ])
}

fn transport(seed: u64) -> Result<Vec<CheckLine>> {
    let mut rng = rng_for(seed, 4);
    let cfg = config(12);
    let (mut upper, mut triangle, mut symmetry, mut refinement, mut definite) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..3 {
        let d = sample::derivation(&mut rng, 2, 2);
        let ps: Vec<_> = (0..3).map(|_| sample::density(&mut rng, 2)).collect();
        let w = |a: &DensityMatrix, b: &DensityMatrix| solve_geodesic(&d, a, b, &cfg);
        let pq = w(&ps[0], &ps[1])?;
        let qr = w(&ps[1], &ps[2])?;
        let pr = w(&ps[0], &ps[2])?;
        let qp = w(&ps[1], &ps[0])?;
        worst(&mut triangle, (pr.distance - pq.distance - qr.distance) / pr.distance);
        worst(&mut symmetry, (pq.distance - qp.distance).abs() / pq.distance);
        if let LinearPath::Feasible(lin) = linear_path(&d, &ps[0], &ps[1], cfg.steps, cfg.feas_tol)? {
            worst(&mut upper, pq.energy - path_energy(&d, &lin, cfg.feas_tol)?);
        }
        let coarse = solve_geodesic(&d, &ps[0], &ps[1], &config(8))?;
        let fine = solve_geodesic(&d, &ps[0], &ps[1], &config(32))?;
        worst(&mut refinement, (fine.energy - coarse.energy) / coarse.energy);
        // a nearby pair: small distance must mean small separation
        let near = DensityMatrix::from_matrix(ps[0].as_matrix() * c(0.999, 0.0) + ps[1].as_matrix() * c(0.001, 0.0))?;
        let r = w(&ps[0], &near)?;
        let gap = hs_norm(&(ps[0].as_matrix() - near.as_matrix()));
        worst(&mut definite, if r.distance < 1e-3 { gap } else { 0.0 });
    }

    // block generators conserve block traces
    let mut obstruction = 0.0;
    for _ in 0..3 {
        let d = sample::block_derivation(&mut rng, &[1, 2], 2);
        let p = DensityMatrix::from_diagonal(&[0.3, 0.4, 0.3])?;
        let q = DensityMatrix::from_diagonal(&[0.5, 0.25, 0.25])?;
        let res = solve_geodesic(&d, &p, &q, &cfg)?;
        worst(&mut obstruction, if res.feasible || res.distance.is_finite() { 1.0 } else { 0.0 });
    }
    const S: &str = "transport";
    Ok(vec![
        CheckLine::new(S, "linear path upper bound excess", upper, 1e-9),
        CheckLine::new(S, "symmetry (relative)", symmetry, 2e-4),
        CheckLine::new(S, "triangle excess (relative)", triangle, 3e-4),
        CheckLine::new(S, "refinement excess (relative)", refinement, 1e-3),
        CheckLine::new(S, "definiteness", definite, 1e-3),
        CheckLine::new(S, "mass obstruction flag", obstruction, 0.0),
    ])
}

fn random_bundle(rng: &mut ChaCha8Rng, k: usize, n: usize) -> Result<VerticalGradient> {
    let weights = (0..k).map(|_| rng.random_range(0.5..2.0)).collect();
    let fibers = (0..k).map(|_| sample::derivation(rng, n, 2)).collect();
    VerticalGradient::new(FiniteBase::new(weights)?, fibers)
}

fn bundle(seed: u64) -> Result<Vec<CheckLine>> {
    let mut rng = rng_for(seed, 5);
    let cfg = config(12);
    let (mut additivity, mut monolithic, mut gate, mut covariance) = (0.0, 0.0, 0.0, 0.0);
    for k in [2, 3] {
        let vg = random_bundle(&mut rng, k, 2)?;
        let pairs = crate::bundle::sample_pairs(&vg, 1, rng.random())?;
        let (p, q) = &pairs[0];
        let res = disintegrated_distance(&vg, p, q, &cfg)?;
        let global = assemble_global_path(&res, p)?;
        worst(&mut additivity, (global.global_energy() - res.total_sq).abs());

        let (d, mp, mq) = monolithic_problem(&vg, p, q)?;
        let mono = solve_geodesic(&d, &mp, &mq, &cfg)?;
        worst(&mut monolithic, (mono.energy - res.total_sq).abs() / res.total_sq);

        // moving mass between fibers makes both routes infeasible
        let mut fibers: Vec<HermitianMatrix> = q.fibers().to_vec();
        fibers[0] = fibers[0].scale(1.2);
        let shifted = FiberedDensity::new(vg.base().clone(), fibers)?;
        let split = disintegrated_distance(&vg, p, &shifted, &cfg)?;
        let (d, mp, mq) = monolithic_problem(&vg, p, &shifted)?;
        let mono = solve_geodesic(&d, &mp, &mq, &cfg)?;
        let agree = !split.feasible && !mono.feasible && split.total_sq.is_infinite();
        worst(&mut gate, if agree { 0.0 } else { 1.0 });

        // ν ↦ cν with P ↦ P/c leaves the distance unchanged
        let scale = 3.0;
        let base = FiniteBase::new(vg.base().weights.iter().map(|w| w * scale).collect())?;
        let scaled_vg = VerticalGradient::new(base.clone(), vg.per_fiber().to_vec())?;
        let shrink = |f: &FiberedDensity| FiberedDensity::new(base.clone(), f.fibers().iter().map(|x| x.scale(1.0 / scale)).collect());
        let scaled = disintegrated_distance(&scaled_vg, &shrink(p)?, &shrink(q)?, &cfg)?;
        worst(&mut covariance, (scaled.total_sq - res.total_sq).abs() / res.total_sq);
    }

    let vg = random_bundle(&mut rng, 2, 2)?;
    let report = mean_curvature_check(&vg, 2, rng.random(), &cfg)?;
    let bound = if report.pairs_evaluated == 0 {
        0.0
    } else {
        (report.essinf_fiber - 1e-6 - report.mcurv_estimate).max(0.0)
    };
    const S: &str = "bundle";
    Ok(vec![
        CheckLine::new(S, "assembled energy additivity", additivity, 1e-9),
        CheckLine::new(S, "monolithic agreement (relative)", monolithic, 1e-3),
        CheckLine::new(S, "mass gate agreement", gate, 0.0),
        CheckLine::new(S, "weight rescaling covariance", covariance, 1e-6),
        CheckLine::new(S, "mean curvature bound deficit", bound, 0.0),
    ])
}
