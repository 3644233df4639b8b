//! Fixtures shared by the integration tests: the standard δ sweep on the
//! unit interval (assembled once per test binary) and the coarse disk setup.
#![allow(dead_code)]

use std::sync::OnceLock;

use nlbvp::assembly::OperatorAssembly;
use nlbvp::verify::{Instance, MeshPolicy, Scenario};
use nlbvp::{Domain, InnerResolution, KernelProfile, Mesh, Point};

pub const DELTAS: [f64; 3] = [0.1, 0.05, 0.025];

pub struct Level {
    pub inst: Instance,
    pub asm: OperatorAssembly,
}

pub fn interval() -> Scenario {
    Scenario::unit_interval()
}

/// Unit disk with a coarse δ-coupled mesh and a light inner rule.
pub fn disk() -> Scenario {
    Scenario {
        domain: Domain::unit_disk(),
        profile: KernelProfile::default_for(2),
        policy: MeshPolicy { h_max_factor: 0.5, h_min_factor: 0.5, c_grade: 0.25 },
        inner: InnerResolution { n_radial: 8, n_angular: 16 },
        ..Scenario::unit_interval()
    }
}

pub fn build(scn: &Scenario, delta: f64) -> Level {
    let inst = scn.instance(delta).expect("admissible delta");
    let asm = OperatorAssembly::assemble(&inst.kernel, &inst.mesh, scn.inner).expect("assembly");
    Level { inst, asm }
}

/// Interval sweep over `DELTAS`, built once.
pub fn sweep() -> &'static [Level] {
    static SWEEP: OnceLock<Vec<Level>> = OnceLock::new();
    SWEEP.get_or_init(|| DELTAS.iter().map(|&d| build(&interval(), d)).collect())
}

pub fn lumped_norm(mesh: &Mesh, u: &[f64]) -> f64 {
    mesh.weights.iter().zip(u).map(|(w, v)| w * v * v).sum::<f64>().sqrt()
}

pub fn lumped_dot(mesh: &Mesh, u: &[f64], v: &[f64]) -> f64 {
    mesh.weights.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum()
}

pub fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn point_norm(p: Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

pub fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo
}

pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}
