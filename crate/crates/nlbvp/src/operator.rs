//! Nodal action of Φ_{δ,α}, ℒ_δ, K_{δ,α}, K*_{δ,α}, ∇K_{δ,α} and F₁.
//!
//! Integrals ∫ ρ_{δ,α}(x,y) F(y) dy are evaluated with a horizon-scaled
//! rule: the η(x) half of the kernel in the variable w = (y−x)/η(x), the
//! η(y) half in z = (y−x)/η(y) (the offset solving s = z·η(x+s)). Both
//! changes of variables map the kernel support onto the fixed ball B(0,R0),
//! so the rule resolves the horizon however small η is; values at the
//! quadrature offsets come from the P1 interpolant of the grid function.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sprs::CsMat;

use crate::error::{NlError, Result};
use crate::geometry::{add, dot, norm, scale, Mesh, NodeGrid, Point};
use crate::kernels::TwoPointKernel;
use crate::quadrature::BallRule;

/// Resolution of the reference-ball rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InnerResolution {
    /// Gauss points in the radial direction (2× this many on [−R0,R0] in 1D).
    pub n_radial: usize,
    /// Uniform angles (2D only).
    pub n_angular: usize,
}

impl Default for InnerResolution {
    fn default() -> Self {
        InnerResolution { n_radial: 24, n_angular: 16 }
    }
}

/// Offsets and weights of ∫ ρ_{δ,α}(x, x+s) F(x+s) ds ≈ Σ_k W_k F(x+s_k), with
/// vector weights g_k for ∫ ∇_x ρ_{δ,α}(x, x+s) F(x+s) ds.
#[derive(Clone, Debug, Default)]
pub struct Stencil {
    pub offsets: Vec<Point>,
    pub weights: Vec<f64>,
    pub grads: Vec<Point>,
}

impl Stencil {
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[derive(Clone, Debug)]
pub struct InnerRule {
    dim: usize,
    refs: Vec<Point>,
    omega: Vec<f64>,
}

#[inline]
fn pow_neg(e: f64, alpha: f64) -> f64 {
    if alpha == 2.0 {
        1.0 / (e * e)
    } else if alpha == 0.0 {
        1.0
    } else {
        e.powf(-alpha)
    }
}

impl InnerRule {
    pub fn new(dim: usize, support: f64, res: InnerResolution) -> Self {
        let ball = BallRule::new(dim, support, res.n_radial, res.n_angular);
        InnerRule { dim, refs: ball.points, omega: ball.weights }
    }

    pub fn for_kernel(k: &TwoPointKernel, res: InnerResolution) -> Self {
        Self::new(k.dim(), k.profile.support, res)
    }

    pub fn len(&self) -> usize {
        2 * self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.refs.is_empty()
    }

    /// Solves s = z·η(x+s) by Newton's method starting from z·η(x).
    fn solve_offset(
        &self,
        k: &TwoPointKernel,
        x: Point,
        z: Point,
        eta_x: f64,
    ) -> Result<(Point, crate::localization::EtaEval)> {
        let mut s = scale(z, eta_x);
        for _ in 0..60 {
            let e = k.eta.eval_offset(x, s);
            let f = [s[0] - z[0] * e.value, s[1] - z[1] * e.value];
            let step = if self.dim == 1 {
                [f[0] / (1.0 - z[0] * e.grad[0]), 0.0]
            } else {
                let (a, b, c, d) =
                    (1.0 - z[0] * e.grad[0], -z[0] * e.grad[1], -z[1] * e.grad[0], 1.0 - z[1] * e.grad[1]);
                let det = a * d - b * c;
                [(d * f[0] - b * f[1]) / det, (a * f[1] - c * f[0]) / det]
            };
            s = [s[0] - step[0], s[1] - step[1]];
            if norm(step) <= 1e-15 * norm(s) {
                return Ok((s, k.eta.eval_offset(x, s)));
            }
        }
        let e = k.eta.eval_offset(x, s);
        let resid = norm([s[0] - z[0] * e.value, s[1] - z[1] * e.value]);
        if resid <= 1e-12 * norm(s).max(1e-300) {
            return Ok((s, e));
        }
        Err(NlError::Parameter(format!("horizon map did not converge at {x:?}")))
    }

    /// Stencil of ρ_{δ,α}(x, ·) at an interior point `x`.
    pub fn stencil(&self, k: &TwoPointKernel, x: Point, with_grad: bool) -> Result<Stencil> {
        let ex = k.eta.eval(x)?;
        if !(ex.value > 0.0) {
            return Err(NlError::SingularHorizon { point: x });
        }
        let d = self.dim as f64;
        let alpha = k.alpha;
        let hx = ex.value;
        let n = self.refs.len();
        let mut st = Stencil {
            offsets: Vec::with_capacity(2 * n),
            weights: Vec::with_capacity(2 * n),
            grads: Vec::with_capacity(if with_grad { 2 * n } else { 0 }),
        };
        let px = pow_neg(hx, alpha);
        for (w, om) in self.refs.iter().zip(&self.omega) {
            let r = norm(*w);
            let rho = k.profile.rho(r);
            st.offsets.push(scale(*w, hx));
            st.weights.push(0.5 * om * rho * px);
            if with_grad {
                let under = k.profile.rho_under(r);
                let c = 0.5 * om * px / hx;
                let drift = r * r * under - (d + alpha) * rho;
                st.grads.push(add(scale(*w, c * under), scale(ex.grad, c * drift)));
            }
        }
        for (z, om) in self.refs.iter().zip(&self.omega) {
            let r = norm(*z);
            let (s, ey) = self.solve_offset(k, x, *z, hx)?;
            let hy = ey.value;
            let jac = hy - dot(ey.grad, s);
            let py = pow_neg(hy, alpha);
            st.offsets.push(s);
            st.weights.push(0.5 * om * k.profile.rho(r) * py * hy / jac);
            if with_grad {
                st.grads.push(scale(*z, 0.5 * om * k.profile.rho_under(r) * py / jac));
            }
        }
        Ok(st)
    }
}

/// ℒ_δ u(x) for a field known everywhere, so the inner integral sees the
/// exact function rather than its P1 interpolant.
pub fn apply_l_at(k: &TwoPointKernel, rule: &InnerRule, u: &dyn crate::field::Field, x: Point) -> Result<f64> {
    let st = rule.stencil(k, x, false)?;
    Ok(-2.0 * st.offsets.iter().zip(&st.weights).map(|(s, w)| w * u.diff(x, *s)).sum::<f64>())
}

/// Φ_{δ,α}(x) from the inner rule alone.
pub fn phi_at(k: &TwoPointKernel, rule: &InnerRule, x: Point) -> Result<f64> {
    Ok(rule.stencil(k, x, false)?.mass())
}

/// Merges (column, value) pairs into a sorted row, summing duplicates in
/// their original order.
pub(crate) fn merge_row(mut entries: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    entries.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (c, v) in entries {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => out.push((c, v)),
        }
    }
    out
}

pub(crate) fn csr_from_rows(n_cols: usize, rows: &[Vec<(usize, f64)>]) -> CsMat<f64> {
    let mut indptr = Vec::with_capacity(rows.len() + 1);
    let mut indices = Vec::new();
    let mut data = Vec::new();
    indptr.push(0);
    for row in rows {
        for &(c, v) in row {
            indices.push(c);
            data.push(v);
        }
        indptr.push(indices.len());
    }
    CsMat::new((rows.len(), n_cols), indptr, indices, data)
}

/// y = A x, accumulated row by row in storage order.
pub fn spmv(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.rows()];
    spmv_into(a, x, &mut y);
    y
}

pub fn spmv_into(a: &CsMat<f64>, x: &[f64], y: &mut [f64]) {
    let indptr = a.indptr();
    let ip = indptr.raw_storage();
    let idx = a.indices();
    let val = a.data();
    y.par_iter_mut().enumerate().with_min_len(256).for_each(|(i, yi)| {
        let mut acc = 0.0;
        for p in ip[i]..ip[i + 1] {
            acc += val[p] * x[idx[p]];
        }
        *yi = acc;
    });
}

/// y = Aᵀ x, accumulated sequentially in row order.
pub fn spmv_t(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.cols()];
    for (i, row) in a.outer_iterator().enumerate() {
        let xi = x[i];
        if xi == 0.0 {
            continue;
        }
        for (j, &v) in row.iter() {
            y[j] += v * xi;
        }
    }
    y
}

fn row_sum(a: &CsMat<f64>, i: usize) -> f64 {
    a.outer_view(i).map_or(0.0, |r| r.iter().map(|(_, &v)| v).sum())
}

/// Discretized kernel operators on the nodes of a mesh for one α.
#[derive(Clone, Debug)]
pub struct NodalOperator {
    pub alpha: f64,
    /// Row i: Σ_k W_k e(y_k) (interior), unit self-coupling (boundary).
    pub a: CsMat<f64>,
    /// Row sums of `a` in storage order; K = diag(1/row_sum)·A.
    pub row_sum: Vec<f64>,
    /// Φ_{δ,α} at the nodes; on the boundary the inward limit ρ̄ (α = 0) or
    /// +∞ (α > 0).
    pub phi: Vec<f64>,
    /// η^α Φ_{δ,α} at the nodes (boundary value ρ̄).
    pub scaled_phi: Vec<f64>,
    /// Gradient weight rows Σ_k g_k e(y_k), one matrix per component.
    pub g: Vec<CsMat<f64>>,
    pub grad_phi: Vec<Point>,
    /// Explicit ∇K, one matrix per component.
    pub gk: Vec<CsMat<f64>>,
    /// F₁(x_i) = ∫ ρ_{δ,α}(x_i,y)(y − x_i) dy.
    pub f1: Vec<Point>,
    pub interior: Vec<bool>,
    /// False where the horizon is shorter than two local mesh spacings, so
    /// nodal values only see the P1 kink at the node.
    pub trusted: Vec<bool>,
    pub dim: usize,
}

impl NodalOperator {
    pub fn build(k: &TwoPointKernel, mesh: &Mesh, res: InnerResolution) -> Result<Self> {
        check_resolution(k, mesh)?;
        let rule = InnerRule::for_kernel(k, res);
        let n = mesh.n_nodes();
        let dim = mesh.dim();
        let rho_bar = k.profile.rho_bar()?;
        let spacing = mesh.local_spacing();
        let node_elems = mesh.node_elements();

        struct RowOut {
            a: Vec<(usize, f64)>,
            g: Vec<Vec<(usize, f64)>>,
            f1: Point,
            grad_phi: Point,
            eta: f64,
        }

        let rows: Vec<Result<RowOut>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = mesh.nodes[i];
                if mesh.is_boundary(i) {
                    // P1 gradient averaged over incident elements
                    let mut g = vec![Vec::new(); dim];
                    let elems = &node_elems[i];
                    let total: f64 = elems.iter().map(|&e| mesh.element_measure(e)).sum();
                    for &e in elems {
                        let frac = mesh.element_measure(e) / total;
                        let bg = mesh.basis_gradients(e);
                        for (a, &v) in mesh.element_nodes(e).iter().enumerate() {
                            for c in 0..dim {
                                g[c].push((v, frac * bg[a][c]));
                            }
                        }
                    }
                    return Ok(RowOut {
                        a: vec![(i, 1.0)],
                        g: g.into_iter().map(merge_row).collect(),
                        f1: [0.0, 0.0],
                        grad_phi: [0.0, 0.0],
                        eta: 0.0,
                    });
                }
                let st = rule.stencil(k, x, true)?;
                let mut a = Vec::with_capacity(st.weights.len() * (dim + 1));
                let mut g = vec![Vec::with_capacity(st.weights.len() * (dim + 1)); dim];
                let mut f1 = [0.0, 0.0];
                for ((s, &w), gw) in st.offsets.iter().zip(&st.weights).zip(&st.grads) {
                    let loc = mesh.locate(add(x, *s));
                    for (&v, &l) in mesh.element_nodes(loc.elem).iter().zip(&loc.bary) {
                        a.push((v, w * l));
                        for c in 0..dim {
                            g[c].push((v, gw[c] * l));
                        }
                    }
                    f1 = add(f1, scale(*s, w));
                }
                let g: Vec<Vec<(usize, f64)>> = g.into_iter().map(merge_row).collect();
                let mut grad_phi = [0.0, 0.0];
                for c in 0..dim {
                    grad_phi[c] = g[c].iter().map(|e| e.1).sum();
                }
                Ok(RowOut { a: merge_row(a), g, f1, grad_phi, eta: k.eta.eval(x)?.value })
            })
            .collect();
        let rows: Vec<RowOut> = rows.into_iter().collect::<Result<_>>()?;

        let a_rows: Vec<Vec<(usize, f64)>> = rows.iter().map(|r| r.a.clone()).collect();
        let a = csr_from_rows(n, &a_rows);
        let row_sum: Vec<f64> = (0..n).map(|i| row_sum(&a, i)).collect();
        let g: Vec<CsMat<f64>> =
            (0..dim).map(|c| csr_from_rows(n, &rows.iter().map(|r| r.g[c].clone()).collect::<Vec<_>>())).collect();
        let interior: Vec<bool> = (0..n).map(|i| !mesh.is_boundary(i)).collect();
        let phi: Vec<f64> = (0..n)
            .map(|i| {
                if interior[i] {
                    row_sum[i]
                } else if k.alpha == 0.0 {
                    rho_bar
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let scaled_phi: Vec<f64> =
            (0..n).map(|i| if interior[i] { rows[i].eta.powf(k.alpha) * phi[i] } else { rho_bar }).collect();
        let grad_phi: Vec<Point> = rows.iter().map(|r| r.grad_phi).collect();
        let f1: Vec<Point> = rows.iter().map(|r| r.f1).collect();
        let trusted: Vec<bool> =
            (0..n).map(|i| interior[i] && k.profile.support * rows[i].eta >= 2.0 * spacing[i]).collect();

        // ∇K = (G − ∇Φ ⊗ K)/Φ on interior rows, P1 gradient on boundary rows
        let gk: Vec<CsMat<f64>> = (0..dim)
            .map(|c| {
                let rows_c: Vec<Vec<(usize, f64)>> = (0..n)
                    .map(|i| {
                        let grow = &rows[i].g[c];
                        if !interior[i] {
                            return grow.clone();
                        }
                        let mut e: Vec<(usize, f64)> = grow.iter().map(|&(j, v)| (j, v / row_sum[i])).collect();
                        let coef = grad_phi[i][c] / (row_sum[i] * row_sum[i]);
                        for &(j, v) in &rows[i].a {
                            e.push((j, -coef * v));
                        }
                        merge_row(e)
                    })
                    .collect();
                csr_from_rows(n, &rows_c)
            })
            .collect();

        Ok(NodalOperator { alpha: k.alpha, a, row_sum, phi, scaled_phi, g, grad_phi, gk, f1, interior, trusted, dim })
    }

    pub fn n(&self) -> usize {
        self.row_sum.len()
    }

    /// K u = A u / Φ, with Φ the row sums of A in the same order, so K1 = 1
    /// holds exactly.
    pub fn apply_k(&self, u: &[f64]) -> Vec<f64> {
        let mut au = spmv(&self.a, u);
        for (v, s) in au.iter_mut().zip(&self.row_sum) {
            *v /= s;
        }
        au
    }

    /// Explicit K as a sparse matrix.
    pub fn k_matrix(&self) -> CsMat<f64> {
        let mut k = self.a.clone();
        for (i, mut row) in k.outer_iterator_mut().enumerate() {
            let s = self.row_sum[i];
            for (_, v) in row.iter_mut() {
                *v /= s;
            }
        }
        k
    }

    /// K* = W⁻¹ Kᵀ W, the adjoint of K in the lumped inner product.
    pub fn apply_k_star(&self, u: &[f64], weights: &[f64]) -> Vec<f64> {
        let wu: Vec<f64> = u.iter().zip(weights).map(|(a, b)| a * b).collect();
        let mut out = spmv_t(&self.k_matrix(), &wu);
        for (v, w) in out.iter_mut().zip(weights) {
            *v /= w;
        }
        out
    }

    /// ℒ_δ u(x_i) = 2 Σ_j A_ij (u_i − u_j) at interior nodes, 0 on ∂Ω.
    pub fn apply_l(&self, u: &[f64]) -> Vec<f64> {
        let ip = self.a.indptr();
        let ip = ip.raw_storage();
        let idx = self.a.indices();
        let val = self.a.data();
        (0..self.n())
            .into_par_iter()
            .map(|i| {
                if !self.interior[i] {
                    return 0.0;
                }
                let mut acc = 0.0;
                for p in ip[i]..ip[i + 1] {
                    let j = idx[p];
                    if j != i {
                        acc += val[p] * (u[i] - u[j]);
                    }
                }
                2.0 * acc
            })
            .collect()
    }

    /// ∇(K u) at the nodes in difference form, exactly zero for constants.
    pub fn apply_grad_k(&self, u: &[f64]) -> Vec<Point> {
        let ku = self.apply_k(u);
        (0..self.n())
            .map(|i| {
                let mut out = [0.0, 0.0];
                for c in 0..self.dim {
                    let row = self.g[c].outer_view(i).unwrap();
                    if !self.interior[i] {
                        out[c] = row.iter().map(|(j, &v)| v * u[j]).sum();
                        continue;
                    }
                    let s: f64 = row.iter().map(|(j, &v)| v * (u[j] - u[i])).sum();
                    out[c] = (s - self.grad_phi[i][c] * (ku[i] - u[i])) / self.row_sum[i];
                }
                out
            })
            .collect()
    }

    /// (∇K)ᵀ applied to a vector field, one component matrix at a time.
    pub fn grad_k_transpose(&self, f: &[Point]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for c in 0..self.dim {
            let fc: Vec<f64> = f.iter().map(|p| p[c]).collect();
            for (o, v) in out.iter_mut().zip(spmv_t(&self.gk[c], &fc)) {
                *o += v;
            }
        }
        out
    }

    /// (min, max) of η^α Φ_{δ,α} over all nodes.
    pub fn scaled_phi_bounds(&self) -> (f64, f64) {
        self.scaled_phi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Mesh nodes within the comparability-enlarged horizon of each node,
/// mirrored so that the relation is symmetric.
#[derive(Clone, Debug)]
pub struct NeighborTable {
    pub lists: Vec<Vec<usize>>,
}

impl NeighborTable {
    pub fn build(k: &TwoPointKernel, mesh: &Mesh) -> Result<Self> {
        let n = mesh.n_nodes();
        let r0 = k.profile.support;
        let grow = 1.0 + k.eta.comparability_eps(r0);
        let grid = NodeGrid::new(&mesh.nodes, mesh.h_max.max(r0 * k.eta.delta));
        let mut lists: Vec<Vec<usize>> = (0..n)
            .into_par_iter()
            .map(|i| -> Result<Vec<usize>> {
                let e = k.eta.eval(mesh.nodes[i])?.value;
                Ok(grid.within(&mesh.nodes, mesh.nodes[i], r0 * grow * e).into_iter().filter(|&j| j != i).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        let mut extra: Vec<(usize, usize)> = Vec::new();
        for (i, l) in lists.iter().enumerate() {
            for &j in l {
                extra.push((j, i));
            }
        }
        for (j, i) in extra {
            lists[j].push(i);
        }
        for l in lists.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        Ok(NeighborTable { lists })
    }

    pub fn is_symmetric(&self) -> bool {
        self.lists.iter().enumerate().all(|(i, l)| l.iter().all(|&j| self.lists[j].binary_search(&i).is_ok()))
    }
}

/// Rejects meshes whose spacing does not resolve the interior horizon:
/// every node in the constant-horizon region needs at least three mesh
/// neighbours within R0·δ.
pub fn check_resolution(k: &TwoPointKernel, mesh: &Mesh) -> Result<()> {
    let r = k.profile.support * k.eta.delta;
    let collar = k.eta.collar_width();
    let grid = NodeGrid::new(&mesh.nodes, mesh.h_max.max(r));
    let dom = k.eta.domain();
    let bad = (0..mesh.n_nodes()).into_par_iter().find_map_first(|i| {
        let x = mesh.nodes[i];
        let d = dom.dist_to_boundary(x).unwrap_or(0.0);
        if mesh.is_boundary(i) || d < collar + r {
            return None;
        }
        let count = grid.within(&mesh.nodes, x, r).len() - 1;
        (count < 3).then_some((i, count))
    });
    match bad {
        Some((node, neighbors)) => Err(NlError::Resolution { node, neighbors }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AnalyticFn, Field};
    use crate::geometry::Domain;
    use crate::kernels::KernelProfile;
    use crate::localization::{LocalizationField, Mode};

    fn setup(mode: Mode, delta: f64, alpha: f64) -> (TwoPointKernel, Mesh) {
        let dom = Domain::unit_interval();
        let eta = LocalizationField::build(&dom, delta, 0.25, mode).unwrap();
        let mesh = Mesh::build(&dom, delta / 8.0, 0.25 * delta / 16.0, 0.125, &eta).unwrap();
        (TwoPointKernel::new(KernelProfile::default_for(1), eta, alpha).unwrap(), mesh)
    }

    #[test]
    fn interior_mass_and_constants() {
        let (k, mesh) = setup(Mode::Quadratic, 0.05, 2.0);
        let op = NodalOperator::build(&k, &mesh, InnerResolution::default()).unwrap();
        let rho_bar = k.profile.rho_bar().unwrap();
        let i = mesh.nodes.iter().position(|x| (x[0] - 0.5).abs() < 0.01).unwrap();
        assert!((op.phi[i] * 0.05 * 0.05 / rho_bar - 1.0).abs() < 1e-10);
        let ones = vec![1.0; mesh.n_nodes()];
        assert!(op.apply_k(&ones).iter().all(|&v| v == 1.0));
        assert!(op.apply_l(&ones).iter().all(|&v| v == 0.0));
        assert!(op.apply_grad_k(&ones).iter().all(|g| g[0] == 0.0));
    }

    #[test]
    fn laplacian_of_quadratic_in_constant_mode() {
        let (k, mesh) = setup(Mode::Constant, 0.05, 2.0);
        let op = NodalOperator::build(&k, &mesh, InnerResolution::default()).unwrap();
        let rule = InnerRule::for_kernel(&k, InnerResolution::default());
        for x in [0.1, 0.37, 0.5] {
            let v = apply_l_at(&k, &rule, &AnalyticFn::Quadratic, [x, 0.0]).unwrap();
            assert!((v + 1.0).abs() < 1e-10, "{x} {v}");
        }
        // nodal values see the interpolant, biased by O(ρ̄(h/δ)²)
        let u = AnalyticFn::Quadratic.sample(&mesh);
        let lu = op.apply_l(&u);
        let bias = k.profile.rho_bar().unwrap() / 6.0 / 64.0;
        for (i, x) in mesh.nodes.iter().enumerate() {
            if x[0] > 0.1 && x[0] < 0.9 {
                assert!((lu[i] + 1.0 + bias).abs() < 5e-3, "{} {}", x[0], lu[i]);
            }
        }
    }

    #[test]
    fn grad_k_matches_finite_differences() {
        let (k, mesh) = setup(Mode::Quadratic, 0.05, 2.0);
        let op = NodalOperator::build(&k, &mesh, InnerResolution::default()).unwrap();
        let u = AnalyticFn::SinPi.sample(&mesh);
        let ku = op.apply_k(&u);
        let gk = op.apply_grad_k(&u);
        let n = mesh.n_nodes();
        let order: Vec<usize> = {
            let mut o: Vec<usize> = (0..n).collect();
            o.sort_by(|&a, &b| mesh.nodes[a][0].total_cmp(&mesh.nodes[b][0]));
            o
        };
        let mut worst: f64 = 0.0;
        for w in order.windows(3) {
            let (a, b, c) = (w[0], w[1], w[2]);
            if !op.trusted[b] {
                continue;
            }
            let fd = (ku[c] - ku[a]) / (mesh.nodes[c][0] - mesh.nodes[a][0]);
            worst = worst.max((fd - gk[b][0]).abs());
        }
        assert!(worst < 0.05, "{worst}");
        let x = [0.3, 0.0];
        assert!((AnalyticFn::SinPi.grad(x)[0] - PI_COS(0.3)).abs() < 1e-12);
    }

    #[allow(non_snake_case)]
    fn PI_COS(x: f64) -> f64 {
        std::f64::consts::PI * (std::f64::consts::PI * x).cos()
    }

    #[test]
    fn neighbor_table_is_symmetric() {
        let (k, mesh) = setup(Mode::Quadratic, 0.1, 2.0);
        assert!(NeighborTable::build(&k, &mesh).unwrap().is_symmetric());
    }
}
