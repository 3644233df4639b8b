//! Dirichlet and Neumann solvers for the Galerkin system, plus the
//! fixed-point form of the Dirichlet problem.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sprs::CsMat;

use crate::assembly::{dot, p1_laplacian, phi_weighted_mean, OperatorAssembly};
use crate::error::{NlError, Result};
use crate::geometry::Mesh;
use crate::operator::spmv;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    DirichletHomog,
    DirichletInhomog,
    Neumann,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Solution {
    pub u: Vec<f64>,
    pub problem: Problem,
    pub delta: f64,
    pub iterations: usize,
    /// Relative residual of the final linear solve.
    pub residual: f64,
    /// B(u, u).
    pub energy: f64,
    /// Trace mismatch (Dirichlet) or |Φ-weighted mean| (Neumann).
    pub constraint_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub tol_compat: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_iter: 20_000, tol_compat: 1e-8 }
    }
}

/// Outcome of a Krylov solve.
#[derive(Clone, Debug)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for an SPD (or consistent
/// semidefinite) operator given as a closure.
pub fn pcg<A>(apply: A, diag: &[f64], b: &[f64], tol: f64, max_iter: usize) -> Result<CgResult>
where
    A: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(CgResult { x: vec![0.0; n], iterations: 0, residual: 0.0 });
    }
    let inv: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let a = rz / pap;
        for i in 0..n {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        let rel = dot(&r, &r).sqrt() / bnorm;
        if history.len() < 64 || it % 100 == 0 {
            history.push(rel);
        }
        if rel <= tol {
            return Ok(CgResult { x, iterations: it, residual: rel });
        }
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = dot(&r, &r).sqrt() / bnorm;
    Err(NlError::Solver { iterations: max_iter, residual, history })
}

fn diagonal(a: &CsMat<f64>) -> Vec<f64> {
    (0..a.rows()).map(|i| a.get(i, i).copied().unwrap_or(0.0)).collect()
}

/// Restriction of `a` to the rows and columns in `idx`.
pub fn submatrix(a: &CsMat<f64>, idx: &[usize]) -> CsMat<f64> {
    let mut map = vec![usize::MAX; a.cols()];
    for (k, &i) in idx.iter().enumerate() {
        map[i] = k;
    }
    let mut indptr = vec![0];
    let mut indices = Vec::new();
    let mut data = Vec::new();
    for &i in idx {
        if let Some(row) = a.outer_view(i) {
            for (j, &v) in row.iter() {
                if map[j] != usize::MAX {
                    indices.push(map[j]);
                    data.push(v);
                }
            }
        }
        indptr.push(indices.len());
    }
    CsMat::new((idx.len(), idx.len()), indptr, indices, data)
}

/// Discrete harmonic extension of boundary values `g` (a full nodal vector
/// whose interior entries are ignored).
pub fn harmonic_lifting(mesh: &Mesh, g: &[f64], opts: &SolverOptions) -> Result<Vec<f64>> {
    let mut lift = vec![0.0; mesh.n_nodes()];
    for &b in &mesh.boundary_nodes {
        lift[b] = g[b];
    }
    if lift.iter().all(|&v| v == 0.0) {
        return Ok(lift);
    }
    let lap = p1_laplacian(mesh);
    let interior = mesh.interior_nodes();
    let rhs_full = spmv(&lap, &lift);
    let rhs: Vec<f64> = interior.iter().map(|&i| -rhs_full[i]).collect();
    let sub = submatrix(&lap, &interior);
    let cg = pcg(|x| spmv(&sub, x), &diagonal(&sub), &rhs, 1e-13, opts.max_iter)?;
    for (k, &i) in interior.iter().enumerate() {
        lift[i] = cg.x[k];
    }
    Ok(lift)
}

fn check_vec(name: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(NlError::Data(format!("{name} has {} entries for {n} nodes", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(NlError::Data(format!("{name} has non-finite entries")));
    }
    Ok(())
}

/// Solves B u = F on interior nodes with u = g on ∂Ω. `g` is a full nodal
/// vector (only boundary entries are used); `None` means homogeneous data.
pub fn solve_dirichlet(
    asm: &OperatorAssembly,
    mesh: &Mesh,
    f_load: &[f64],
    g: Option<&[f64]>,
    delta: f64,
    opts: &SolverOptions,
) -> Result<Solution> {
    let n = mesh.n_nodes();
    check_vec("load", f_load, n)?;
    if mesh.boundary_nodes.is_empty() {
        return Err(NlError::Mesh("mesh has no boundary nodes".into()));
    }
    let lift = match g {
        Some(g) => {
            check_vec("boundary data", g, n)?;
            harmonic_lifting(mesh, g, opts)?
        }
        None => vec![0.0; n],
    };
    let interior = mesh.interior_nodes();
    let b_lift = spmv(&asm.stiffness, &lift);
    let rhs: Vec<f64> = interior.iter().map(|&i| f_load[i] - b_lift[i]).collect();
    let sub = submatrix(&asm.stiffness, &interior);
    let cg = pcg(|x| spmv(&sub, x), &diagonal(&sub), &rhs, opts.tol, opts.max_iter)?;
    let mut u = lift.clone();
    for (k, &i) in interior.iter().enumerate() {
        u[i] += cg.x[k];
    }
    let mismatch = mesh.boundary_nodes.iter().map(|&b| (u[b] - lift[b]).abs()).fold(0.0, f64::max);
    Ok(Solution {
        energy: asm.energy(&u),
        u,
        problem: if g.is_some() { Problem::DirichletInhomog } else { Problem::DirichletHomog },
        delta,
        iterations: cg.iterations,
        residual: cg.residual,
        constraint_residual: mismatch,
    })
}

/// Solves B u = F + G subject to zero Φ_{δ,0}-weighted mean. The data must
/// satisfy ⟨F + G, 1⟩ ≈ 0; the remaining defect is absorbed by the
/// Lagrange multiplier of the mean constraint.
pub fn solve_neumann(
    asm: &OperatorAssembly,
    mesh: &Mesh,
    f_load: &[f64],
    g_load: &[f64],
    delta: f64,
    opts: &SolverOptions,
) -> Result<Solution> {
    let n = mesh.n_nodes();
    check_vec("load", f_load, n)?;
    check_vec("boundary load", g_load, n)?;
    let rhs: Vec<f64> = f_load.iter().zip(g_load).map(|(a, b)| a + b).collect();
    let total: f64 = rhs.iter().sum();
    let scale: f64 = f_load.iter().chain(g_load).map(|v| v.abs()).sum();
    if total.abs() > opts.tol_compat * scale.max(f64::MIN_POSITIVE) {
        return Err(NlError::Compatibility { defect: total, tolerance: opts.tol_compat * scale });
    }
    let c: Vec<f64> = asm.lumped_mass.iter().zip(&asm.phi0).map(|(w, p)| w * p).collect();
    let lambda = total / c.iter().sum::<f64>();
    let consistent: Vec<f64> = rhs.iter().zip(&c).map(|(r, ci)| r - lambda * ci).collect();
    let cg = pcg(|x| spmv(&asm.stiffness, x), &diagonal(&asm.stiffness), &consistent, opts.tol, opts.max_iter)?;
    let mut u = cg.x;
    let shift = dot(&c, &u) / c.iter().sum::<f64>();
    for v in u.iter_mut() {
        *v -= shift;
    }
    let mean = phi_weighted_mean(mesh, &u, &asm.phi0);
    Ok(Solution {
        energy: asm.energy(&u),
        u,
        problem: Problem::Neumann,
        delta,
        iterations: cg.iterations,
        residual: cg.residual,
        constraint_residual: mean.abs(),
    })
}

/// Anderson-accelerated fixed-point iteration x ← G(x), stopping when the
/// sup-norm update is below `tol` relative to max(1, ‖x‖∞).
pub fn anderson<G>(map: G, x0: Vec<f64>, depth: usize, tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut x = x0;
    let mut f: Vec<f64> = map(&x).iter().zip(&x).map(|(g, x)| g - x).collect();
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut fs: Vec<Vec<f64>> = Vec::new();
    let mut last = sup(&f);
    for it in 1..=max_iter {
        if last <= tol * sup(&x).max(1.0) {
            return Ok((x, it));
        }
        xs.push(x.clone());
        fs.push(f.clone());
        if xs.len() > depth + 1 {
            xs.remove(0);
            fs.remove(0);
        }
        let m = fs.len() - 1;
        let mut next: Vec<f64> = x.iter().zip(&f).map(|(a, b)| a + b).collect();
        if m > 0 {
            let n = x.len();
            let df = DMatrix::from_fn(n, m, |r, c| fs[c + 1][r] - fs[c][r]);
            let svd = df.clone().svd(true, true);
            let gamma = svd.solve(&DVector::from_column_slice(&f), 1e-12 * svd.singular_values.max());
            if let Ok(gamma) = gamma {
                for c in 0..m {
                    let g = gamma[c];
                    for r in 0..n {
                        let dg = (xs[c + 1][r] + fs[c + 1][r]) - (xs[c][r] + fs[c][r]);
                        next[r] -= g * dg;
                    }
                }
            }
        }
        x = next;
        f = map(&x).iter().zip(&x).map(|(g, x)| g - x).collect();
        last = sup(&f);
    }
    Err(NlError::Solver { iterations: max_iter, residual: last, history: vec![last] })
}

/// Dirichlet problem in fixed-point form u = u + D⁻¹(F − B u) on the
/// interior nodes, D the stiffness diagonal (≈ 2 w Φ_{δ,2}, the lumped form
/// of u = K_{δ,2}u + f/(2Φ_{δ,2})), accelerated by Anderson mixing.
pub fn solve_fixed_point(
    asm: &OperatorAssembly,
    mesh: &Mesh,
    f_load: &[f64],
    g: Option<&[f64]>,
    u0: Option<&[f64]>,
    delta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Solution> {
    let n = mesh.n_nodes();
    check_vec("load", f_load, n)?;
    let opts = SolverOptions::default();
    let lift = match g {
        Some(g) => harmonic_lifting(mesh, g, &opts)?,
        None => vec![0.0; n],
    };
    let interior = mesh.interior_nodes();
    let b_lift = spmv(&asm.stiffness, &lift);
    let rhs: Vec<f64> = interior.iter().map(|&i| f_load[i] - b_lift[i]).collect();
    let sub = submatrix(&asm.stiffness, &interior);
    let diag = diagonal(&sub);
    let map = |w: &[f64]| -> Vec<f64> {
        let bw = spmv(&sub, w);
        (0..w.len()).map(|i| w[i] + (rhs[i] - bw[i]) / diag[i]).collect()
    };
    let start: Vec<f64> = match u0 {
        Some(u0) => interior.iter().map(|&i| u0[i] - lift[i]).collect(),
        None => vec![0.0; interior.len()],
    };
    let (w, iterations) = anderson(map, start, 20, tol, max_iter)?;
    let mut u = lift.clone();
    for (k, &i) in interior.iter().enumerate() {
        u[i] += w[k];
    }
    let bw = spmv(&sub, &w);
    let res = bw.iter().zip(&rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        / dot(&rhs, &rhs).sqrt().max(f64::MIN_POSITIVE);
    Ok(Solution {
        energy: asm.energy(&u),
        u,
        problem: if g.is_some() { Problem::DirichletInhomog } else { Problem::DirichletHomog },
        delta,
        iterations,
        residual: res,
        constraint_residual: 0.0,
    })
}
