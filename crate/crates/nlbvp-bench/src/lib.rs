//! Shared fixtures for the criterion benches.

use nlbvp::verify::{Instance, MeshPolicy, Scenario};
use nlbvp::{Domain, InnerResolution};

/// Unit interval with the default δ-coupled mesh.
pub fn interval(delta: f64) -> Instance {
    Scenario::unit_interval().instance(delta).expect("admissible delta")
}

/// Unit disk on a coarse mesh with a light inner rule.
pub fn disk(delta: f64) -> (Scenario, Instance) {
    let mut scn = Scenario::unit_interval();
    scn.domain = Domain::unit_disk();
    scn.profile = nlbvp::KernelProfile::default_for(2);
    scn.policy = MeshPolicy { h_max_factor: 0.5, h_min_factor: 0.5, c_grade: 0.25 };
    scn.inner = InnerResolution { n_radial: 8, n_angular: 16 };
    let inst = scn.instance(delta).expect("admissible delta");
    (scn, inst)
}
