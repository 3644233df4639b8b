mod common;

use approx::assert_abs_diff_eq;
use common::*;
use nlbvp::mollify::{mollify_dirichlet, mollify_neumann, pointwise, RoughData};
use nlbvp::{AnalyticFn, Field, NlError};

#[test]
fn zero_data_gives_zero() {
    for lvl in sweep() {
        let n = lvl.inst.mesh.n_nodes();
        let load = mollify_dirichlet(&lvl.asm.op2, &lvl.inst.mesh, &RoughData::zero(n)).unwrap();
        assert!(load.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn without_flux_neumann_mollifier_is_k_star() {
    for lvl in sweep() {
        let mesh = &lvl.inst.mesh;
        let f0 = AnalyticFn::CosPi.sample(mesh);
        let fd = mollify_neumann(&lvl.asm.op2, mesh, &RoughData::from_f0(f0.clone())).unwrap();
        let ks = lvl.asm.op2.apply_k_star(&f0, &mesh.weights);
        for (a, b) in fd.iter().zip(&ks) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }
}

#[test]
fn smooth_data_mollifies_toward_itself() {
    let errs: Vec<f64> = sweep()
        .iter()
        .map(|lvl| {
            let mesh = &lvl.inst.mesh;
            let f0 = AnalyticFn::CosPi.sample(mesh);
            let fd = pointwise(&lvl.asm.op2, mesh, &RoughData::from_f0(f0.clone()));
            let diff: Vec<f64> = fd.iter().zip(&f0).map(|(a, b)| a - b).collect();
            lumped_norm(mesh, &diff)
        })
        .collect();
    assert!(strictly_decreasing(&errs), "{errs:?}");
}

#[test]
fn neumann_mollifier_preserves_mean() {
    for lvl in sweep() {
        let mesh = &lvl.inst.mesh;
        let rough = RoughData::singular(mesh, [0.5, 0.0], 0.45, 0.25).unwrap();
        let fd = mollify_neumann(&lvl.asm.op2, mesh, &rough).unwrap();
        let before: f64 = mesh.weights.iter().zip(&rough.f0).map(|(w, f)| w * f).sum();
        let after: f64 = mesh.weights.iter().zip(&fd).map(|(w, f)| w * f).sum();
        assert_abs_diff_eq!(before, after, epsilon = 1e-8);
    }
}

#[test]
fn mollified_flux_stays_inside() {
    for lvl in sweep() {
        let mesh = &lvl.inst.mesh;
        let eta = &lvl.inst.kernel.eta;
        let bump = AnalyticFn::Bump { center: [0.5, 0.0], radius: 0.2 };
        let f1: Vec<_> = mesh.nodes.iter().map(|&x| [bump.value(x), 0.0]).collect();
        let rough = RoughData { f0: vec![0.0; mesh.n_nodes()], f1, support_radius: Some(0.25) };
        let fd = mollify_neumann(&lvl.asm.op2, mesh, &rough).unwrap();
        assert!(fd.iter().any(|&v| v != 0.0));
        // support of the P1 data reaches one element past the bump
        let s = 0.3 - mesh.h_max;
        let t = eta.kappa_bar0.unwrap() * 0.9 * eta.delta.sqrt();
        let limit = (1.0 - t) / (1.0 + t) * s;
        for (i, x) in mesh.nodes.iter().enumerate() {
            if mesh.domain.dist_to_boundary(*x).unwrap() < limit {
                assert_eq!(fd[i], 0.0, "node {i} at {x:?}");
            }
        }
    }
}

#[test]
fn flux_in_collar_is_rejected() {
    let lvl = &sweep()[0];
    let mesh = &lvl.inst.mesh;
    let mut rough = RoughData::zero(mesh.n_nodes());
    rough.f1[1] = [1.0, 0.0];
    rough.support_radius = Some(0.1);
    match mollify_neumann(&lvl.asm.op2, mesh, &rough) {
        Err(NlError::Data(msg)) => assert!(msg.contains("offending nodes: 1")),
        other => panic!("expected data error, got {other:?}"),
    }
    // the Dirichlet path accepts any flux
    assert!(mollify_dirichlet(&lvl.asm.op2, mesh, &rough).is_ok());
}

#[test]
fn singular_data_validation() {
    let mesh = &sweep()[0].inst.mesh;
    assert!(RoughData::singular(mesh, [0.5, 0.0], 0.5, 0.25).is_err());
    let r = RoughData::singular(mesh, [0.5, 0.0], 0.45, 0.25).unwrap();
    assert_abs_diff_eq!(r.support_radius.unwrap(), 0.25, epsilon = 1e-15);
    assert!(r.f1.iter().all(|p| p[0].is_finite()));
    let bad = RoughData { f0: vec![0.0; 3], f1: vec![[0.0, 0.0]; 3], support_radius: None };
    assert!(matches!(bad.check(mesh), Err(NlError::Data(_))));
}
