mod common;

use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use common::*;
use nlbvp::assembly::{load_l2, phi_weighted_mean};
use nlbvp::mollify::hminus1_norm;
use nlbvp::solvers::{
    anderson, harmonic_lifting, pcg, solve_dirichlet, solve_fixed_point, solve_neumann, Problem, SolverOptions,
};
use nlbvp::verify::{dirichlet_sine, neumann_cosine};
use nlbvp::{AnalyticFn, NlError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn homogeneous_problems_have_zero_solution() {
    let lvl = &sweep()[0];
    let (asm, mesh) = (&lvl.asm, &lvl.inst.mesh);
    let zero = vec![0.0; mesh.n_nodes()];
    let d = solve_dirichlet(asm, mesh, &zero, Some(&zero), 0.1, &opts()).unwrap();
    assert!(d.u.iter().all(|&v| v == 0.0));
    let n = solve_neumann(asm, mesh, &zero, &zero, 0.1, &opts()).unwrap();
    assert!(n.u.iter().all(|&v| v == 0.0));
    let f = solve_fixed_point(asm, mesh, &zero, None, Some(&zero), 0.1, 1e-10, 100).unwrap();
    assert!(f.u.iter().all(|&v| v == 0.0));
    assert!(f.iterations <= 1);
}

#[test]
fn boundary_values_are_imposed() {
    let lvl = &sweep()[1];
    let (asm, mesh) = (&lvl.asm, &lvl.inst.mesh);
    let g: Vec<f64> = mesh.nodes.iter().map(|x| 2.0 - 3.0 * x[0]).collect();
    let f = load_l2(mesh, &AnalyticFn::SinPiLoad.sample(mesh));
    let sol = solve_dirichlet(asm, mesh, &f, Some(&g), 0.05, &opts()).unwrap();
    assert_eq!(sol.problem, Problem::DirichletInhomog);
    for &b in &mesh.boundary_nodes {
        assert_abs_diff_eq!(sol.u[b], g[b], epsilon = 1e-12);
    }
    assert!(sol.constraint_residual <= 1e-12);
    assert!(sol.residual <= 1e-10);
}

#[test]
fn affine_boundary_data_gives_nearly_affine_solution() {
    let mut dev = Vec::new();
    for lvl in sweep() {
        let (asm, mesh) = (&lvl.asm, &lvl.inst.mesh);
        let g: Vec<f64> = mesh.nodes.iter().map(|x| 1.0 + x[0]).collect();
        let sol = solve_dirichlet(asm, mesh, &vec![0.0; mesh.n_nodes()], Some(&g), lvl.inst.delta, &opts()).unwrap();
        dev.push(sol.u.iter().zip(&g).map(|(u, a)| (u - a).abs()).fold(0.0, f64::max));
    }
    assert!(strictly_decreasing(&dev), "{dev:?}");
    assert!(dev[2] < 1e-2);
}

#[test]
fn harmonic_lifting_reproduces_affine_data() {
    let mesh = &sweep()[0].inst.mesh;
    let g: Vec<f64> = mesh.nodes.iter().map(|x| 0.5 - x[0]).collect();
    let lift = harmonic_lifting(mesh, &g, &opts()).unwrap();
    for (a, b) in lift.iter().zip(&g) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-11);
    }
}

#[test]
fn galerkin_orthogonality() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let lvl = &sweep()[1];
    let (asm, load, sol) = dirichlet_sine(&lvl.inst, interval().inner, &opts()).unwrap();
    let mesh = &lvl.inst.mesh;
    let scale: f64 = load.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _ in 0..10 {
        let v: Vec<f64> =
            (0..mesh.n_nodes()).map(|i| if mesh.is_boundary(i) { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let r = asm.bilinear(&sol.u, &v) - load.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        assert!(r.abs() <= 1e-9 * scale * norm, "residual {r}");
    }
}

#[test]
fn dirichlet_benchmark_converges() {
    let errs: Vec<f64> = sweep()
        .iter()
        .map(|lvl| {
            let (_, _, sol) = dirichlet_sine(&lvl.inst, interval().inner, &opts()).unwrap();
            nlbvp::verify::l2_error(&lvl.inst.mesh, &sol.u, &|x| (PI * x[0]).sin())
        })
        .collect();
    assert!(strictly_decreasing(&errs), "{errs:?}");
}

#[test]
fn energy_estimate_is_uniform() {
    let ratios: Vec<f64> = sweep()
        .iter()
        .map(|lvl| {
            let (_, load, sol) = dirichlet_sine(&lvl.inst, interval().inner, &opts()).unwrap();
            sol.energy.sqrt() / hminus1_norm(&lvl.inst.mesh, &load).unwrap()
        })
        .collect();
    assert!(spread(&ratios) < 2.0, "{ratios:?}");
}

#[test]
fn neumann_benchmark() {
    for lvl in sweep() {
        let (asm, sol) = neumann_cosine(&lvl.inst, interval().inner, &opts()).unwrap();
        let norm = lumped_norm(&lvl.inst.mesh, &sol.u);
        assert!(phi_weighted_mean(&lvl.inst.mesh, &sol.u, &asm.phi0).abs() <= 1e-10 * norm);
        assert_eq!(sol.problem, Problem::Neumann);
    }
}

#[test]
fn incompatible_neumann_data_rejected() {
    let lvl = &sweep()[0];
    let (asm, mesh) = (&lvl.asm, &lvl.inst.mesh);
    let f = load_l2(mesh, &AnalyticFn::CosPiLoad.sample(mesh));
    let mut g = vec![0.0; mesh.n_nodes()];
    g[mesh.boundary_nodes[0]] = 0.3;
    match solve_neumann(asm, mesh, &f, &g, 0.1, &opts()) {
        Err(NlError::Compatibility { defect, .. }) => assert!(defect > 0.29),
        other => panic!("expected compatibility error, got {other:?}"),
    }
}

#[test]
fn fixed_point_matches_cg_from_any_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let lvl = &sweep()[1];
    let (asm, load, cg) = dirichlet_sine(&lvl.inst, interval().inner, &opts()).unwrap();
    let mesh = &lvl.inst.mesh;
    let a = solve_fixed_point(&asm, mesh, &load, None, None, 0.05, 1e-10, 20_000).unwrap();
    let start: Vec<f64> = (0..mesh.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b = solve_fixed_point(&asm, mesh, &load, None, Some(&start), 0.05, 1e-10, 20_000).unwrap();
    let gap = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    assert!(gap(&a.u, &cg.u) <= 1e-6, "{}", gap(&a.u, &cg.u));
    assert!(gap(&a.u, &b.u) <= 1e-6, "{}", gap(&a.u, &b.u));
}

#[test]
fn iteration_limits_surface_as_solver_errors() {
    let lvl = &sweep()[2];
    let (asm, mesh) = (&lvl.asm, &lvl.inst.mesh);
    let f = load_l2(mesh, &AnalyticFn::SinPiLoad.sample(mesh));
    let tight = SolverOptions { max_iter: 2, ..opts() };
    assert!(matches!(solve_dirichlet(asm, mesh, &f, None, 0.025, &tight), Err(NlError::Solver { .. })));
    assert!(matches!(solve_fixed_point(asm, mesh, &f, None, None, 0.025, 1e-12, 2), Err(NlError::Solver { .. })));
    assert!(matches!(solve_dirichlet(asm, mesh, &f[1..], None, 0.025, &opts()), Err(NlError::Data(_))));
}

#[test]
fn pcg_on_a_small_spd_system() {
    // tridiagonal [-1 2 -1] of size 5, b = A·[1..5]
    let n = 5;
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| 2.0 * x[i] - if i > 0 { x[i - 1] } else { 0.0 } - if i + 1 < n { x[i + 1] } else { 0.0 })
            .collect()
    };
    let exact: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let b = apply(&exact);
    let r = pcg(apply, &vec![2.0; n], &b, 1e-14, 50).unwrap();
    for (x, e) in r.x.iter().zip(&exact) {
        assert_abs_diff_eq!(x, e, epsilon = 1e-12);
    }
    assert!(r.iterations <= n);
}

#[test]
fn anderson_finds_fixed_point_of_a_contraction() {
    // x = 0.9 R x + c with a rotation-like R
    let c = [1.0, -2.0, 0.5];
    let map = |x: &[f64]| vec![0.9 * x[1] + c[0], -0.9 * x[0] + c[1], 0.5 * x[2] + c[2]];
    let (x, _) = anderson(map, vec![0.0; 3], 5, 1e-13, 200).unwrap();
    let fx = map(&x);
    for (a, b) in x.iter().zip(&fx) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
}
