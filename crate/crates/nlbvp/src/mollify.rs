//! Mollification of rough H⁻¹ data f = f₀ + div-type part f₁, in the
//! pairing ⟨f, v⟩ = ∫ f₀ v + ∫ f₁·∇v.

use serde::{Deserialize, Serialize};

use crate::assembly::{dot, load_hminus1_mollified, p1_laplacian};
use crate::error::{NlError, Result};
use crate::field::Field;
use crate::geometry::{norm, scale, sub, Mesh, Point};
use crate::operator::{spmv, NodalOperator};
use crate::quadrature::integrate;
use crate::solvers::{pcg, submatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoughData {
    pub f0: Vec<f64>,
    pub f1: Vec<Point>,
    /// Width of the boundary collar on which f₁ must vanish (Neumann use).
    pub support_radius: Option<f64>,
}

impl RoughData {
    pub fn zero(n: usize) -> Self {
        RoughData { f0: vec![0.0; n], f1: vec![[0.0, 0.0]; n], support_radius: None }
    }

    pub fn from_f0(f0: Vec<f64>) -> Self {
        let n = f0.len();
        RoughData { f0, f1: vec![[0.0, 0.0]; n], support_radius: None }
    }

    /// Step function f₀ = sign(x₁ − c₁)/2 and a radial flux
    /// f₁ = |x−c|^{−p} (x−c)/|x−c| · ψ(|x−c|/r), ψ a smooth cutoff. Both lie in
    /// L² for p < d/2 but neither is continuous at c. Values are averaged over
    /// dual cells in 1D and sampled at nodes in 2D.
    pub fn singular(mesh: &Mesh, center: Point, power: f64, radius: f64) -> Result<Self> {
        if !(power >= 0.0 && power < 0.5 * mesh.dim() as f64) {
            return Err(NlError::Parameter(format!("singular power {power} must lie in [0, d/2)")));
        }
        let cutoff = |r: f64| {
            let t = r / radius;
            if t >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - t * t)).exp()
            }
        };
        let n = mesh.n_nodes();
        let mut f0 = vec![0.0; n];
        let mut f1 = vec![[0.0, 0.0]; n];
        if mesh.dim() == 1 {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| mesh.nodes[a][0].total_cmp(&mesh.nodes[b][0]));
            for k in 0..n {
                let i = order[k];
                let x = mesh.nodes[i][0];
                let lo = if k == 0 { x } else { 0.5 * (x + mesh.nodes[order[k - 1]][0]) };
                let hi = if k + 1 == n { x } else { 0.5 * (x + mesh.nodes[order[k + 1]][0]) };
                if hi <= lo {
                    f0[i] = 0.5 * (x - center[0]).signum();
                    continue;
                }
                let len = hi - lo;
                // ∫ r^{-p} ψ(r) dr over [r1, r2] with t = r^{1-p}, which
                // removes the singularity at r = 0
                let q = 1.0 - power;
                let radial = |r1: f64, r2: f64| -> Result<f64> {
                    let (t1, t2) = (r1.min(radius).powf(q), r2.min(radius).powf(q));
                    if t2 <= t1 {
                        return Ok(0.0);
                    }
                    Ok(integrate(&|t: f64| cutoff(t.powf(1.0 / q)), t1, t2, 1e-13)? / q)
                };
                let c = center[0];
                let right = if hi > c { radial((lo - c).max(0.0), hi - c)? } else { 0.0 };
                let left = if lo < c { radial((c - hi).max(0.0), c - lo)? } else { 0.0 };
                let (r_len, l_len) = ((hi - lo.max(c)).max(0.0), (hi.min(c) - lo).max(0.0));
                f0[i] = 0.5 * (r_len - l_len) / len;
                f1[i] = [(right - left) / len, 0.0];
            }
        } else {
            for (i, x) in mesh.nodes.iter().enumerate() {
                let d = sub(*x, center);
                let r = norm(d);
                f0[i] = 0.5 * d[0].signum();
                if r > 0.0 {
                    f1[i] = scale(d, r.powf(-power - 1.0) * cutoff(r));
                }
            }
        }
        let dom = &mesh.domain;
        let dist_c = dom.dist_to_boundary(center)?;
        Ok(RoughData { f0, f1, support_radius: Some((dist_c - radius).max(0.0)) })
    }

    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        let n = mesh.n_nodes();
        if self.f0.len() != n || self.f1.len() != n {
            return Err(NlError::Data(format!("rough data sized {}/{} for {n} nodes", self.f0.len(), self.f1.len())));
        }
        if self.f0.iter().chain(self.f1.iter().flat_map(|p| p.iter())).any(|v| !v.is_finite()) {
            return Err(NlError::Data("rough data has non-finite values".into()));
        }
        Ok(())
    }

    /// Nodes inside the collar where f₁ is required to vanish but does not.
    pub fn support_violations(&self, mesh: &Mesh) -> Result<Vec<usize>> {
        let r = self.support_radius.unwrap_or(0.0);
        let mut bad = Vec::new();
        for (i, x) in mesh.nodes.iter().enumerate() {
            if self.f1[i] != [0.0, 0.0] && (mesh.is_boundary(i) || mesh.domain.dist_to_boundary(*x)? < r) {
                bad.push(i);
            }
        }
        Ok(bad)
    }
}

/// Load vector ⟨f_δ, φ_i⟩ with f_δ = K*_{δ,α} f.
pub fn mollify_dirichlet(op: &NodalOperator, mesh: &Mesh, f: &RoughData) -> Result<Vec<f64>> {
    f.check(mesh)?;
    Ok(load_hminus1_mollified(op, mesh, &f.f0, &f.f1))
}

/// Nodal values of f₀^δ + F₁^δ, where f₀^δ = K* f₀ and F₁^δ is the adjoint of
/// ∇K applied to f₁ in the lumped inner product.
pub fn mollify_neumann(op: &NodalOperator, mesh: &Mesh, f: &RoughData) -> Result<Vec<f64>> {
    f.check(mesh)?;
    let bad = f.support_violations(mesh)?;
    if !bad.is_empty() {
        let shown: Vec<String> = bad.iter().take(8).map(|i| i.to_string()).collect();
        return Err(NlError::Data(format!(
            "f1 must vanish within {} of the boundary; offending nodes: {}{}",
            f.support_radius.unwrap_or(0.0),
            shown.join(","),
            if bad.len() > 8 { ",..." } else { "" }
        )));
    }
    Ok(pointwise(op, mesh, f))
}

/// W⁻¹ times the mollified load: the nodal representative of f_δ.
pub fn pointwise(op: &NodalOperator, mesh: &Mesh, f: &RoughData) -> Vec<f64> {
    load_hminus1_mollified(op, mesh, &f.f0, &f.f1).iter().zip(&mesh.weights).map(|(l, w)| l / w).collect()
}

/// ‖η f_δ‖_{L²} + ‖η² ∇f_δ‖_{L²} for the nodal representative `fd`, with
/// element gradients and element-averaged η.
pub fn weighted_norms(mesh: &Mesh, eta: &[f64], fd: &[f64]) -> (f64, f64) {
    let mut a = 0.0;
    for ((w, e), v) in mesh.weights.iter().zip(eta).zip(fd) {
        a += w * (e * v) * (e * v);
    }
    let mut b = 0.0;
    for el in 0..mesh.elements.len() {
        let vs = mesh.element_nodes(el);
        let e = vs.iter().map(|&i| eta[i]).sum::<f64>() / vs.len() as f64;
        let g = mesh.element_gradient(el, fd);
        b += mesh.element_measure(el) * e.powi(4) * (g[0] * g[0] + g[1] * g[1]);
    }
    (a.sqrt(), b.sqrt())
}

/// Discrete H⁻¹ norm sup_v ⟨F, v⟩/‖∇v‖ over the P1 space with zero
/// boundary values, via one CG solve with the P1 Laplacian.
pub fn hminus1_norm(mesh: &Mesh, load: &[f64]) -> Result<f64> {
    let interior = mesh.interior_nodes();
    let lap = submatrix(&p1_laplacian(mesh), &interior);
    let rhs: Vec<f64> = interior.iter().map(|&i| load[i]).collect();
    let diag: Vec<f64> = (0..interior.len()).map(|i| lap.get(i, i).copied().unwrap_or(1.0)).collect();
    let cg = pcg(|x| spmv(&lap, x), &diag, &rhs, 1e-12, 100_000)?;
    Ok(dot(&rhs, &cg.x).max(0.0).sqrt())
}

/// ⟨f_δ − f, v⟩ for a smooth test function v, where the unmollified pairing
/// uses the analytic gradient of v at the nodes.
pub fn weak_pairing_defect(op: &NodalOperator, mesh: &Mesh, f: &RoughData, v: &dyn Field) -> f64 {
    let vn: Vec<f64> = mesh.nodes.iter().map(|&x| v.value(x)).collect();
    let load = load_hminus1_mollified(op, mesh, &f.f0, &f.f1);
    let mollified = dot(&load, &vn);
    let mut raw = 0.0;
    for (i, x) in mesh.nodes.iter().enumerate() {
        let g = v.grad(*x);
        raw += mesh.weights[i] * (f.f0[i] * vn[i] + f.f1[i][0] * g[0] + f.f1[i][1] * g[1]);
    }
    mollified - raw
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::load_l2;
    use crate::geometry::Domain;
    use crate::localization::{LocalizationField, Mode};

    fn mesh(delta: f64) -> Mesh {
        let dom = Domain::unit_interval();
        let eta = LocalizationField::build(&dom, delta, 0.25, Mode::Quadratic).unwrap();
        Mesh::build(&dom, delta / 8.0, 0.25 * delta / 16.0, 0.125, &eta).unwrap()
    }

    #[test]
    fn check_rejects_bad_sizes_and_values() {
        let m = mesh(0.1);
        let n = m.n_nodes();
        assert!(RoughData::zero(n).check(&m).is_ok());
        assert!(RoughData::zero(n - 1).check(&m).is_err());
        let mut f = RoughData::zero(n);
        f.f1[3][1] = f64::INFINITY;
        assert!(matches!(f.check(&m), Err(NlError::Data(_))));
    }

    #[test]
    fn singular_data_in_one_dimension() {
        let m = mesh(0.1);
        assert!(RoughData::singular(&m, [0.5, 0.0], 0.5, 0.25).is_err());
        let f = RoughData::singular(&m, [0.5, 0.0], 0.45, 0.25).unwrap();
        assert_eq!(f.support_radius, Some(0.25));
        assert!(f.f0.iter().all(|v| v.abs() <= 0.5));
        // the flux vanishes outside the cutoff radius
        for (x, g) in m.nodes.iter().zip(&f.f1) {
            if (x[0] - 0.5).abs() > 0.25 + 0.1 {
                assert_eq!(*g, [0.0, 0.0]);
            }
        }
        assert!(f.support_violations(&m).unwrap().is_empty());
    }

    #[test]
    fn weighted_norms_of_constants() {
        let m = mesh(0.1);
        let ones = vec![1.0; m.n_nodes()];
        let (a, b) = weighted_norms(&m, &ones, &ones);
        assert!((a - 1.0).abs() < 1e-12);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn hminus1_norm_of_unit_load() {
        // −u″ = 1 on (0,1): ‖u′‖² = 1/12
        let m = mesh(0.05);
        let load = load_l2(&m, &vec![1.0; m.n_nodes()]);
        let n = hminus1_norm(&m, &load).unwrap();
        assert!((n - (1.0f64 / 12.0).sqrt()).abs() < 1e-4, "{n}");
    }
}
