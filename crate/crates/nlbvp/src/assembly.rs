//! Galerkin assembly of the nonlocal bilinear form, the nonlocal seminorm,
//! load vectors and the boundary pairing.

use rayon::prelude::*;
use sprs::CsMat;

use crate::error::{NlError, Result};
use crate::geometry::{add, scale, Mesh, OuterPoint, Point};
use crate::kernels::TwoPointKernel;
use crate::operator::{csr_from_rows, merge_row, spmv_t, InnerResolution, InnerRule, NodalOperator, Stencil};
use crate::quadrature::BallRule;

/// Everything the solvers need for one (δ, mesh) pair.
#[derive(Clone, Debug)]
pub struct OperatorAssembly {
    /// Symmetric stiffness matrix of B_{ρ,δ} on the P1 space.
    pub stiffness: CsMat<f64>,
    /// Φ_{δ,0} at the nodes.
    pub phi0: Vec<f64>,
    /// Φ_{δ,2} at the nodes (∞ on the boundary).
    pub phi2: Vec<f64>,
    pub lumped_mass: Vec<f64>,
    /// Boundary quadrature weight per node (zero for interior nodes).
    pub boundary_weight: Vec<f64>,
    /// Nodal operators for α = 2.
    pub op2: NodalOperator,
}

impl OperatorAssembly {
    pub fn assemble(k: &TwoPointKernel, mesh: &Mesh, res: InnerResolution) -> Result<Self> {
        let k2 = k.with_alpha(2.0);
        let op2 = NodalOperator::build(&k2, mesh, res)?;
        let op0 = NodalOperator::build(&k2.with_alpha(0.0), mesh, res)?;
        let stiffness = assemble_stiffness(&k2, mesh, res)?;
        let mut boundary_weight = vec![0.0; mesh.n_nodes()];
        for q in &mesh.boundary_quad {
            boundary_weight[q.node] += q.weight;
        }
        Ok(OperatorAssembly {
            stiffness,
            phi0: op0.phi.clone(),
            phi2: op2.phi.clone(),
            lumped_mass: mesh.weights.clone(),
            boundary_weight,
            op2,
        })
    }

    pub fn n(&self) -> usize {
        self.lumped_mass.len()
    }

    /// B(u, v), exactly zero when either argument is constant.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        difference_bilinear(&self.stiffness, u, v)
    }

    /// B(u, u) in difference form, so constants give exactly zero.
    pub fn energy(&self, u: &[f64]) -> f64 {
        difference_form(&self.stiffness, u)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sums W_q W_k (e(x_q) − e(x_q + s_k))(e(x_q) − e(x_q + s_k))ᵀ over outer
/// points q and stencil points k. Contributions are merged per element,
/// collected on the upper triangle in element order and mirrored, so the
/// result is symmetric bit for bit.
fn assemble_pairs<S>(mesh: &Mesh, stencil: S) -> Result<CsMat<f64>>
where
    S: Fn(Point) -> Result<Stencil> + Sync,
{
    let n = mesh.n_nodes();
    let outer = mesh.element_rule();
    let per_elem = 3;
    let blocks: Vec<Result<Vec<(usize, usize, f64)>>> = outer
        .par_chunks(per_elem)
        .map(|chunk| {
            let mut trip: Vec<(usize, usize, f64)> = Vec::new();
            for q in chunk {
                let st = stencil(q.x)?;
                pair_contributions(mesh, q, &st, &mut trip);
            }
            Ok(merge_triplets(trip))
        })
        .collect();
    let mut all: Vec<(usize, usize, f64)> = Vec::new();
    for b in blocks {
        all.extend(b?);
    }
    let upper = merge_triplets(all);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(i, j, v) in &upper {
        rows[i].push((j, v));
        if i != j {
            rows[j].push((i, v));
        }
    }
    let rows: Vec<Vec<(usize, f64)>> = rows.into_iter().map(merge_row).collect();
    Ok(csr_from_rows(n, &rows))
}

fn pair_contributions(mesh: &Mesh, q: &OuterPoint, st: &Stencil, trip: &mut Vec<(usize, usize, f64)>) {
    let en = mesh.element_nodes(q.elem);
    let hosts: Vec<(usize, [f64; 3])> = st
        .offsets
        .iter()
        .map(|s| {
            let loc = mesh.locate(add(q.x, *s));
            (loc.elem, loc.bary)
        })
        .collect();
    // local numbering of every node touched from this outer point
    let mut ids: Vec<usize> = en.to_vec();
    for (e, _) in &hosts {
        ids.extend_from_slice(mesh.element_nodes(*e));
    }
    ids.sort_unstable();
    ids.dedup();
    let m = ids.len();
    let pos = |v: usize| ids.binary_search(&v).unwrap();
    let own: Vec<usize> = en.iter().map(|&v| pos(v)).collect();
    let mut dense = vec![0.0; m * m];
    let mut d = vec![0.0; m];
    let mut touched: Vec<usize> = Vec::with_capacity(6);
    for ((e, bary), &w) in hosts.iter().zip(&st.weights) {
        touched.clear();
        for (a, &p) in own.iter().enumerate() {
            d[p] = q.bary[a];
            touched.push(p);
        }
        for (a, &v) in mesh.element_nodes(*e).iter().enumerate() {
            let p = pos(v);
            if !touched.contains(&p) {
                d[p] = 0.0;
                touched.push(p);
            }
            d[p] -= bary[a];
        }
        for &i in &touched {
            let wi = w * d[i];
            for &j in &touched {
                if i <= j {
                    dense[i * m + j] += wi * d[j];
                }
            }
        }
    }
    for i in 0..m {
        for j in i..m {
            let v = dense[i * m + j];
            if v != 0.0 {
                trip.push((ids[i], ids[j], q.weight * v));
            }
        }
    }
}

fn merge_triplets(mut t: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    t.sort_by_key(|e| (e.0, e.1));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len() / 2);
    for (i, j, v) in t {
        match out.last_mut() {
            Some(last) if last.0 == i && last.1 == j => last.2 += v,
            _ => out.push((i, j, v)),
        }
    }
    out
}

/// Stiffness matrix of B_{ρ,δ}(u,v) = ∬ ρ_{δ,2}(x,y)(u(x)−u(y))(v(x)−v(y)).
pub fn assemble_stiffness(k: &TwoPointKernel, mesh: &Mesh, res: InnerResolution) -> Result<CsMat<f64>> {
    crate::operator::check_resolution(k, mesh)?;
    let rule = InnerRule::for_kernel(k, res);
    assemble_pairs(mesh, |x| rule.stencil(k, x, false))
}

/// Matrix of the seminorm [u]² = ∬_{|y−x| ≤ Rη(x)} |u(x)−u(y)|² / η(x)^{d+2}.
pub fn assemble_seminorm(k: &TwoPointKernel, mesh: &Mesh, r: f64, res: InnerResolution) -> Result<CsMat<f64>> {
    if !(r > 0.0 && r < 1.0) {
        return Err(NlError::Parameter(format!("seminorm radius must lie in (0,1), got {r}")));
    }
    let ball = BallRule::new(mesh.dim(), r, res.n_radial, res.n_angular);
    assemble_pairs(mesh, |x| {
        let e = k.eta.eval(x)?.value;
        let inv = 1.0 / (e * e);
        Ok(Stencil {
            offsets: ball.points.iter().map(|w| scale(*w, e)).collect(),
            weights: ball.weights.iter().map(|w| w * inv).collect(),
            grads: Vec::new(),
        })
    })
}

/// [u] from an assembled seminorm matrix.
pub fn seminorm(matrix: &CsMat<f64>, u: &[f64]) -> f64 {
    difference_form(matrix, u).max(0.0).sqrt()
}

/// uᵀAu for symmetric A with zero row sums, written as
/// −½ Σ_{i≠j} A_ij (u_i − u_j)². Every term carries a difference of u, so
/// the value is exactly zero on constants.
pub fn difference_form(a: &CsMat<f64>, u: &[f64]) -> f64 {
    difference_bilinear(a, u, u)
}

/// vᵀAu in the same difference form.
pub fn difference_bilinear(a: &CsMat<f64>, u: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, &w) in row.iter() {
            if j != i {
                acc -= w * (u[i] - u[j]) * (v[i] - v[j]);
            }
        }
    }
    0.5 * acc
}

/// Direct double sum of the stiffness energy for nodal `v`, independent of
/// the matrix.
pub fn pair_energy(k: &TwoPointKernel, mesh: &Mesh, res: InnerResolution, v: &[f64]) -> Result<f64> {
    let rule = InnerRule::for_kernel(k, res);
    let terms: Vec<Result<f64>> = mesh
        .element_rule()
        .par_iter()
        .map(|q| {
            let st = rule.stencil(k, q.x, false)?;
            let vx: f64 = mesh.element_nodes(q.elem).iter().zip(&q.bary).map(|(&i, b)| b * v[i]).sum();
            Ok(q.weight
                * st.offsets
                    .iter()
                    .zip(&st.weights)
                    .map(|(s, w)| {
                        let d = vx - mesh.interpolate(v, add(q.x, *s));
                        w * d * d
                    })
                    .sum::<f64>())
        })
        .collect();
    terms.into_iter().sum()
}

/// Standard P1 stiffness matrix ∫ ∇φ_i·∇φ_j.
pub fn p1_laplacian(mesh: &Mesh) -> CsMat<f64> {
    let n = mesh.n_nodes();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in 0..mesh.elements.len() {
        let g = mesh.basis_gradients(e);
        let m = mesh.element_measure(e);
        let vs = mesh.element_nodes(e);
        for (a, &va) in vs.iter().enumerate() {
            for (b, &vb) in vs.iter().enumerate() {
                rows[va].push((vb, m * (g[a][0] * g[b][0] + g[a][1] * g[b][1])));
            }
        }
    }
    let rows: Vec<Vec<(usize, f64)>> = rows.into_iter().map(merge_row).collect();
    csr_from_rows(n, &rows)
}

/// Lumped pairing ⟨f, φ_i⟩ ≈ w_i f_i.
pub fn load_l2(mesh: &Mesh, f: &[f64]) -> Vec<f64> {
    mesh.weights.iter().zip(f).map(|(w, v)| w * v).collect()
}

/// Entry i = ⟨f₀, K φ_i⟩_w + ⟨f₁, ∇(K φ_i)⟩_w, evaluated through the
/// transposes of K and ∇K.
pub fn load_hminus1_mollified(op: &NodalOperator, mesh: &Mesh, f0: &[f64], f1: &[Point]) -> Vec<f64> {
    let wf0 = load_l2(mesh, f0);
    let mut out = spmv_t(&op.k_matrix(), &wf0);
    let wf1: Vec<Point> = f1.iter().zip(&mesh.weights).map(|(v, w)| scale(*v, *w)).collect();
    for (o, v) in out.iter_mut().zip(op.grad_k_transpose(&wf1)) {
        *o += v;
    }
    out
}

/// The same load computed column by column: apply K and ∇K to every hat
/// function. Quadratic cost; used to cross-check the transposed route.
pub fn load_hminus1_by_columns(op: &NodalOperator, mesh: &Mesh, f0: &[f64], f1: &[Point]) -> Vec<f64> {
    let n = mesh.n_nodes();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut hat = vec![0.0; n];
            hat[i] = 1.0;
            let kh = op.apply_k(&hat);
            let gkh = op.apply_grad_k(&hat);
            let mut acc = 0.0;
            for j in 0..n {
                acc += mesh.weights[j] * (f0[j] * kh[j] + f1[j][0] * gkh[j][0] + f1[j][1] * gkh[j][1]);
            }
            acc
        })
        .collect()
}

/// Entry i = ∮ g φ_i dσ with g given per boundary quadrature point.
pub fn neumann_boundary_load(mesh: &Mesh, g: &[f64]) -> Result<Vec<f64>> {
    if g.len() != mesh.boundary_quad.len() {
        return Err(NlError::Data(format!(
            "boundary data has {} values for {} boundary points",
            g.len(),
            mesh.boundary_quad.len()
        )));
    }
    let mut out = vec![0.0; mesh.n_nodes()];
    for (q, v) in mesh.boundary_quad.iter().zip(g) {
        out[q.node] += q.weight * v;
    }
    Ok(out)
}

/// (1/|Ω|) Σ w_i Φ_{δ,0}(x_i) u_i.
pub fn phi_weighted_mean(mesh: &Mesh, u: &[f64], phi0: &[f64]) -> f64 {
    let s: f64 = mesh.weights.iter().zip(phi0).zip(u).map(|((w, p), v)| w * p * v).sum();
    s / mesh.domain.measure()
}

/// Largest relative asymmetry max|B_ij − B_ji| / max|B_ij|.
pub fn asymmetry(a: &CsMat<f64>) -> f64 {
    let scale = a.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, &v) in row.iter() {
            let t = a.get(j, i).copied().unwrap_or(0.0);
            worst = worst.max((v - t).abs());
        }
    }
    if scale > 0.0 {
        worst / scale
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AnalyticFn;
    use crate::geometry::Domain;
    use crate::kernels::KernelProfile;
    use crate::localization::{LocalizationField, Mode};
    use crate::operator::spmv;
    use std::f64::consts::PI;

    fn setup(delta: f64) -> (TwoPointKernel, Mesh) {
        let dom = Domain::unit_interval();
        let eta = LocalizationField::build(&dom, delta, 0.25, Mode::Quadratic).unwrap();
        let mesh = Mesh::build(&dom, delta / 8.0, 0.25 * delta / 16.0, 0.125, &eta).unwrap();
        (TwoPointKernel::new(KernelProfile::default_for(1), eta, 2.0).unwrap(), mesh)
    }

    #[test]
    fn stiffness_structure() {
        let (k, mesh) = setup(0.05);
        let res = InnerResolution::default();
        let b = assemble_stiffness(&k, &mesh, res).unwrap();
        assert_eq!(asymmetry(&b), 0.0);
        let ones = vec![1.0; mesh.n_nodes()];
        let r = spmv(&b, &ones);
        let scale = b.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 1e-10 * scale, "{worst} {scale}");
        let u = AnalyticFn::SinPi.sample(&mesh);
        let e = dot(&spmv(&b, &u), &u);
        let direct = pair_energy(&k, &mesh, res, &u).unwrap();
        assert!((e - direct).abs() < 1e-9 * direct, "{e} {direct}");
        assert!((e - PI * PI / 2.0).abs() < 0.1, "{e}");
    }

    #[test]
    fn loads() {
        let (k, mesh) = setup(0.1);
        let one = vec![1.0; mesh.n_nodes()];
        assert!((load_l2(&mesh, &one).iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let g = vec![1.0; mesh.boundary_quad.len()];
        assert!((neumann_boundary_load(&mesh, &g).unwrap().iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let op = NodalOperator::build(&k, &mesh, InnerResolution::default()).unwrap();
        let f0 = AnalyticFn::CosPi.sample(&mesh);
        let f1: Vec<Point> = mesh.nodes.iter().map(|x| [(3.0 * x[0]).sin(), 0.0]).collect();
        let a = load_hminus1_mollified(&op, &mesh, &f0, &f1);
        let b = load_hminus1_by_columns(&op, &mesh, &f0, &f1);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10, "{x} {y}");
        }
    }
}
