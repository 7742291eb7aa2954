mod common;

use ncot::matrix::{hs_inner, hs_norm};
use ncot::{
    linear_path, onsager, path_energy, s_operator, sample, solve_geodesic, tangent_metric, CMatrix, DensityMatrix,
    Derivation, HermitianMatrix, LinearPath, SolverConfig, Superoperator,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cfg(steps: usize) -> SolverConfig {
    SolverConfig { steps, ..SolverConfig::default() }
}

fn real(n: usize, v: &[f64]) -> CMatrix {
    CMatrix::from_row_slice(n, n, &v.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>())
}

fn sigma_x() -> Derivation {
    Derivation::new(2, vec![HermitianMatrix::new(real(2, &[0., 1., 1., 0.])).unwrap()]).unwrap()
}

fn linear(d: &Derivation, p: &DensityMatrix, q: &DensityMatrix, steps: usize) -> ncot::TransportPath {
    match linear_path(d, p, q, steps, 1e-8).unwrap() {
        LinearPath::Feasible(path) => path,
        LinearPath::Infeasible(why) => panic!("infeasible at step {}: {:e}", why.step, why.norm),
    }
}

#[test]
fn tangent_metric_examples() {
    let mut r = rng(1);
    let d = sample::derivation(&mut r, 3, 2);
    let p = sample::density(&mut r, 3);
    let b = sample::hermitian(&mut r, 3);
    assert!(tangent_metric(&d, &p, &HermitianMatrix::identity(3), &b).unwrap().abs() < 1e-12);

    let a = sample::hermitian(&mut r, 3);
    let mixed = DensityMatrix::maximally_mixed(3);
    let grad_sq: f64 = d.grad(a.as_matrix()).unwrap().iter().map(|g| hs_norm(g).powi(2)).sum();
    let v = tangent_metric(&d, &mixed, &a, &a).unwrap();
    assert!((v - grad_sq / 3.0).abs() < 1e-12 * grad_sq);

    // ⟨a,a⟩_p ≤ ‖∂a‖² since the logarithmic mean of a density is at most 1
    assert!(tangent_metric(&d, &p, &a, &a).unwrap() <= grad_sq);
    let ab = tangent_metric(&d, &p, &a, &b).unwrap();
    let ba = tangent_metric(&d, &p, &b, &a).unwrap();
    assert!((ab - ba).abs() < 1e-12 * (1.0 + ab.abs()));
}

#[test]
fn onsager_examples() {
    let mut r = rng(2);
    let p = sample::density(&mut r, 3);
    let g = onsager(&Derivation::zero(3), &p).unwrap();
    assert!(hs_norm(g.matrix()) == 0.0);

    let d = sample::derivation(&mut r, 3, 2);
    let g = onsager(&d, &DensityMatrix::maximally_mixed(3)).unwrap();
    let expect = d.laplacian().scale(1.0 / 3.0);
    assert!(hs_norm(&(g.matrix() - expect.matrix())) < 1e-12);

    let g = onsager(&d, &p).unwrap();
    assert!(g.self_adjointness_defect() < 1e-12);
    let spec = g.hermitian_eig().unwrap();
    assert!(spec.eigenvalues[0] > -1e-12);
    let a = sample::hermitian(&mut r, 3);
    let b = sample::hermitian(&mut r, 3);
    let lhs = hs_inner(&g.apply(a.as_matrix()), b.as_matrix()).re;
    assert!((lhs - tangent_metric(&d, &p, &b, &a).unwrap()).abs() < 1e-10);

    // for a faithful density the kernel is exactly ker ∂
    let block = sample::block_derivation(&mut r, &[1, 2], 2);
    let g = onsager(&block, &sample::density(&mut r, 3)).unwrap();
    let spec = g.hermitian_eig().unwrap();
    let top = spec.eigenvalues[8];
    let null = spec.eigenvalues.iter().filter(|&&l| l < 1e-10 * top).count();
    assert_eq!(null, block.kernel().len());
}

#[test]
fn s_operator_examples() {
    let mut r = rng(3);
    let p = sample::density(&mut r, 3);
    let s = s_operator(&Derivation::zero(3), &p).unwrap();
    assert!(hs_norm(&(s.matrix() - Superoperator::identity(3).matrix())) < 1e-12);

    let d = sample::derivation(&mut r, 3, 2);
    let s = s_operator(&d, &p).unwrap();
    let inv = s.inverse().unwrap();
    assert!(hs_norm(&(inv.compose(&s).matrix() - Superoperator::identity(3).matrix())) < 1e-9);
    assert!(s.hermitian_eig().unwrap().eigenvalues[0] > 0.0);

    // I/n: (1/n)Δ off the kernel, the identity on it
    let s = s_operator(&d, &DensityMatrix::maximally_mixed(3)).unwrap();
    let id = CMatrix::identity(3, 3);
    assert!(hs_norm(&(s.apply(&id) - &id)) < 1e-12);
    let h = sample::hermitian(&mut r, 3);
    let traceless = h.as_matrix() - &id * Complex64::new(h.trace() / 3.0, 0.0);
    let expect = d.apply_laplacian(&traceless) / Complex64::new(3.0, 0.0);
    assert!(hs_norm(&(s.apply(&traceless) - expect)) < 1e-10);

    // continuity in p
    let q = sample::density(&mut r, 3);
    let near = DensityMatrix::from_matrix(p.as_matrix() * Complex64::new(1.0 - 1e-7, 0.0) + q.as_matrix() * Complex64::new(1e-7, 0.0)).unwrap();
    let gap = hs_norm(&(s_operator(&d, &near).unwrap().matrix() - s_operator(&d, &p).unwrap().matrix()));
    assert!(gap < 1e-5);
}

#[test]
fn linear_path_examples() {
    let mut r = rng(4);
    let d = sample::derivation(&mut r, 3, 2);
    let p = sample::density(&mut r, 3);
    let path = linear(&d, &p, &p, 8);
    assert_eq!(path.energy(), 0.0);

    let q = sample::density(&mut r, 3);
    let path = linear(&d, &p, &q, 8);
    assert!(path.energy().is_finite() && path.energy() > 0.0);
    assert!(path.potentials.iter().all(|u| u.trace().abs() < 1e-12));
    assert!((path_energy(&d, &path, 1e-8).unwrap() - path.energy()).abs() < 1e-14);

    match linear_path(&Derivation::zero(3), &p, &q, 8, 1e-8).unwrap() {
        LinearPath::Infeasible(why) => {
            assert_eq!(why.step, 1);
            assert!((why.norm - hs_norm(&(q.as_matrix() - p.as_matrix()))).abs() < 1e-12);
        }
        LinearPath::Feasible(_) => panic!("zero derivation moved mass"),
    }
}

#[test]
fn path_energy_examples() {
    let mut r = rng(5);
    let d = sample::derivation(&mut r, 2, 2);
    let p = sample::density(&mut r, 2);
    assert_eq!(path_energy(&d, &ncot::TransportPath::constant(&p, 4), 1e-8).unwrap(), 0.0);

    let q = sample::density(&mut r, 2);
    let path = linear(&d, &p, &q, 8);
    let e = path_energy(&d, &path, 1e-8).unwrap();
    let back = path_energy(&d, &path.reversed(), 1e-8).unwrap();
    assert!((e - back).abs() < 1e-10);
    let geo = solve_geodesic(&d, &p, &q, &cfg(8)).unwrap();
    assert!(e >= geo.energy - 1e-9);

    let mut broken = path.clone();
    broken.potentials[2] = broken.potentials[2].scale(2.0);
    assert!(matches!(path_energy(&d, &broken, 1e-8), Err(ncot::Error::InvalidPath { step: 3, .. })));
}

#[test]
fn geodesic_trivial_and_reported_path() {
    let mut r = rng(6);
    let d = sample::derivation(&mut r, 3, 2);
    let p = sample::density(&mut r, 3);
    let res = solve_geodesic(&d, &p, &p, &cfg(8)).unwrap();
    assert_eq!(res.distance, 0.0);
    assert!(res.path.unwrap().potentials.iter().all(|u| hs_norm(u.as_matrix()) == 0.0));

    let q = sample::density(&mut r, 3);
    let res = solve_geodesic(&d, &p, &q, &cfg(8)).unwrap();
    assert!(res.feasible && res.converged);
    assert_eq!(res.distance, res.energy.sqrt());
    let path = res.path.unwrap();
    assert_eq!(path.densities.len(), 9);
    assert!(hs_norm(&(path.densities[0].as_matrix() - p.as_matrix())) < 1e-14);
    assert!(hs_norm(&(path.densities[8].as_matrix() - q.as_matrix())) < 1e-14);
    // the reported path satisfies the continuity equation and its energies
    let e = path_energy(&d, &path, 1e-8).unwrap();
    assert!((e - res.energy).abs() < 1e-12);
    assert!(path.step_energies.iter().all(|&s| s >= 0.0));
    for rho in &path.densities {
        assert!(rho.min_eigenvalue().unwrap() > 0.0);
        assert!((rho.as_hermitian().trace() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn metric_axioms_on_random_triples() {
    let mut r = rng(7);
    let c = cfg(12);
    for n in [2, 3] {
        let d = sample::derivation(&mut r, n, 2);
        let ps: Vec<_> = (0..3).map(|_| sample::density(&mut r, n)).collect();
        let w = |a: &DensityMatrix, b: &DensityMatrix| solve_geodesic(&d, a, b, &c).unwrap();
        let (pq, qr, pr, qp) = (w(&ps[0], &ps[1]), w(&ps[1], &ps[2]), w(&ps[0], &ps[2]), w(&ps[1], &ps[0]));
        assert!((pq.distance - qp.distance).abs() <= 2e-4 * pq.distance);
        assert!(pr.distance <= pq.distance + qr.distance + 3.0 * c.tol);
        let upper = linear(&d, &ps[0], &ps[1], c.steps).energy();
        assert!(pq.energy <= upper + 1e-9);
    }
}

#[test]
fn definiteness_surrogate() {
    let mut r = rng(8);
    let d = sample::derivation(&mut r, 2, 2);
    for _ in 0..10 {
        let (p, q) = (sample::density(&mut r, 2), sample::density(&mut r, 2));
        let res = solve_geodesic(&d, &p, &q, &cfg(8)).unwrap();
        if res.distance < 1e-8 {
            assert!(hs_norm(&(p.as_matrix() - q.as_matrix())) < 1e-3);
        }
        assert!(res.distance > 0.0);
    }
}

#[test]
fn refinement_converges_at_second_order() {
    // Midpoint evaluation underestimates each chord's action, so the discrete
    // energy approaches its limit from below with an O(N⁻²) gap.
    let mut r = rng(9);
    for _ in 0..3 {
        let d = sample::derivation(&mut r, 2, 2);
        let (p, q) = (sample::density(&mut r, 2), sample::density(&mut r, 2));
        let e: Vec<f64> = [8, 16, 32].iter().map(|&n| solve_geodesic(&d, &p, &q, &cfg(n)).unwrap().energy).collect();
        assert!(e[0] <= e[1] && e[1] <= e[2], "{e:?}");
        let ratio = (e[1] - e[0]) / (e[2] - e[1]);
        assert!((3.0..5.0).contains(&ratio), "{e:?} ratio {ratio}");
        let extrapolated = e[2] + (e[2] - e[1]) / 3.0;
        assert!((e[2] - extrapolated).abs() <= 1e-3 * extrapolated);
    }
}

#[test]
fn finite_diameter_for_ergodic_derivation() {
    let mut r = rng(10);
    let d = sample::derivation(&mut r, 2, 2);
    assert!(d.is_ergodic());
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (p, q) = (sample::density(&mut r, 2), sample::density(&mut r, 2));
        let res = solve_geodesic(&d, &p, &q, &cfg(8)).unwrap();
        let bound = linear(&d, &p, &q, 8).energy();
        assert!(res.energy.is_finite() && res.energy <= bound + 1e-9);
        worst = worst.max(res.distance);
    }
    assert!(worst.is_finite() && worst > 0.0);
}

#[test]
fn mass_obstruction_for_block_generators() {
    let mut r = rng(11);
    let d = sample::block_derivation(&mut r, &[2, 2], 2);
    assert!(!d.is_ergodic());
    let p = DensityMatrix::from_diagonal(&[0.2, 0.3, 0.25, 0.25]).unwrap();
    let q = DensityMatrix::from_diagonal(&[0.4, 0.3, 0.15, 0.15]).unwrap();
    let res = solve_geodesic(&d, &p, &q, &cfg(8)).unwrap();
    assert!(!res.feasible && res.distance.is_infinite());
    assert!(res.infeasible_component_norm > 1e-8);
    assert!(matches!(linear_path(&d, &p, &q, 8, 1e-8).unwrap(), LinearPath::Infeasible(_)));

    // same block traces: feasible
    let q = DensityMatrix::from_diagonal(&[0.4, 0.1, 0.15, 0.35]).unwrap();
    let res = solve_geodesic(&d, &p, &q, &cfg(8)).unwrap();
    assert!(res.feasible && res.distance.is_finite());
}

#[test]
fn commutative_qubit_matches_grid_oracle() {
    let d = sigma_x();
    for (x, y) in [(0.2, 0.7), (0.45, 0.55), (0.1, 0.3)] {
        let p = DensityMatrix::from_diagonal(&[x, 1.0 - x]).unwrap();
        let q = DensityMatrix::from_diagonal(&[y, 1.0 - y]).unwrap();
        let w = solve_geodesic(&d, &p, &q, &cfg(16)).unwrap().distance;
        let oracle = common::diagonal_qubit_distance(x, y, 2000);
        assert!((w - oracle).abs() <= 1e-3 * oracle, "{x} {y}: {w} vs {oracle}");
    }
}
