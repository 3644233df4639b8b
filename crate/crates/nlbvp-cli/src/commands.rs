//! The five commands. Each returns the JSON summary printed on stdout and
//! writes its artifacts into the output directory.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use nlbvp::assembly::{assemble_stiffness, load_l2, neumann_boundary_load, OperatorAssembly};
use nlbvp::io;
use nlbvp::kernels::linear_mode_constant;
use nlbvp::localization::{check_localization_assumptions, AssumptionCheck};
use nlbvp::mollify::{mollify_dirichlet, mollify_neumann, RoughData};
use nlbvp::operator::check_resolution;
use nlbvp::solvers::{solve_dirichlet, solve_fixed_point, solve_neumann, Solution};
use nlbvp::verify::{
    check_deltas, convergence_study, greens_residual, greens_residual_quadrature, linear_localization_demo,
    localization_study, poincare_constants, PoincareKind, StudyReport,
};
use nlbvp::{Field, LocalizationField, NlError, NodalOperator, Result};
use serde_json::{json, Value};

use crate::config::{Bc, GreensMethod, RunConfig, SolverKind, StudyKind};

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, v: &Value) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

fn bound_check(value: f64, target: f64, tol: f64) -> AssumptionCheck {
    let margin = tol - (value - target).abs();
    AssumptionCheck { pass: margin > 0.0, margin, witness_point: None }
}

/// Kernel normalization and localization assumptions at every δ.
pub fn check(cfg: &RunConfig, out: &Path) -> Result<Value> {
    let scn = cfg.scenario()?;
    let prof = &scn.profile;
    let d = prof.dim as f64;
    let mut kernel = BTreeMap::new();
    kernel.insert("normalization".to_string(), bound_check(prof.second_moment()?, d, 1e-8));
    if prof.dim == 2 {
        let m = prof.isotropy_matrix();
        let dev = (m[0][0] - 1.0).abs().max((m[1][1] - 1.0).abs()).max(m[0][1].abs()).max(m[1][0].abs());
        kernel.insert("isotropy".to_string(), bound_check(dev, 0.0, 1e-6));
    }
    let mut all_pass = kernel.values().all(|c| c.pass);
    let mut per_delta = Vec::new();
    for &delta in &cfg.deltas {
        let inst = scn.instance(delta)?;
        check_resolution(&inst.kernel, &inst.mesh)?;
        let report = check_localization_assumptions(&inst.kernel.eta, &inst.mesh, prof.support);
        all_pass &= report.all_pass();
        per_delta.push(json!({
            "delta": delta,
            "n_nodes": inst.mesh.n_nodes(),
            "all_pass": report.all_pass(),
            "min_margin": report.min_margin(),
            "assumptions": report,
        }));
    }
    let v = json!({ "all_pass": all_pass, "kernel": kernel, "deltas": per_delta });
    write_json(out, "check.json", &v)?;
    if !all_pass {
        return Err(NlError::Data("one or more assumption checks failed; see check.json".into()));
    }
    Ok(json!({ "command": "check", "all_pass": all_pass }))
}

fn nodal_data(cfg: &RunConfig, mesh: &nlbvp::Mesh, csv: &Option<std::path::PathBuf>, name: &str) -> Result<Vec<f64>> {
    match csv {
        Some(p) => {
            let g = io::read_grid_csv(File::open(p)?)?;
            g.check(mesh)?;
            Ok(g.values)
        }
        None => Ok(cfg.function(name)?.sample(mesh)),
    }
}

/// One solve at `problem.delta` (default: first δ).
pub fn solve(cfg: &RunConfig, out: &Path) -> Result<Value> {
    let scn = cfg.scenario()?;
    let delta = cfg.problem.delta.unwrap_or(cfg.deltas[0]);
    let inst = scn.instance(delta)?;
    let mesh = &inst.mesh;
    let asm = OperatorAssembly::assemble(&inst.kernel, mesh, scn.inner)?;
    let opts = cfg.solver_options();
    let p = &cfg.problem;
    let mut rough = match &p.rough_csv {
        Some(path) => io::read_rough_csv(mesh, File::open(path)?)?,
        None => RoughData::from_f0(nodal_data(cfg, mesh, &p.f_csv, &p.f)?),
    };
    rough.support_radius = p.support_radius;
    let sol: Solution = match p.bc {
        Bc::Dirichlet => {
            let load = mollify_dirichlet(&asm.op2, mesh, &rough)?;
            let g = match (&p.g_csv, &p.g) {
                (None, None) => None,
                (csv, name) => Some(nodal_data(cfg, mesh, csv, name.as_deref().unwrap_or("zero"))?),
            };
            match p.solver {
                SolverKind::Cg => solve_dirichlet(&asm, mesh, &load, g.as_deref(), delta, &opts)?,
                SolverKind::FixedPoint => {
                    solve_fixed_point(&asm, mesh, &load, g.as_deref(), None, delta, opts.tol, opts.max_iter)?
                }
            }
        }
        Bc::Neumann => {
            if p.solver == SolverKind::FixedPoint {
                return Err(NlError::Parameter("the fixed-point solver handles Dirichlet problems only".into()));
            }
            let fd = mollify_neumann(&asm.op2, mesh, &rough)?;
            let f_load = load_l2(mesh, &fd);
            let g_load = match (&p.g_csv, &p.g) {
                (None, None) => vec![0.0; mesh.n_nodes()],
                (csv, name) => {
                    let g = nodal_data(cfg, mesh, csv, name.as_deref().unwrap_or("zero"))?;
                    let gb: Vec<f64> = mesh.boundary_quad.iter().map(|q| g[q.node]).collect();
                    neumann_boundary_load(mesh, &gb)?
                }
            };
            solve_neumann(&asm, mesh, &f_load, &g_load, delta, &opts)?
        }
    };
    io::write_solution_csv(mesh, &sol.u, create(out, "solution.csv")?)?;
    io::write_solution_meta(&sol, create(out, "solution.json")?)?;
    io::write_mesh_json(mesh, create(out, "mesh.json")?)?;
    Ok(json!({ "command": "solve", "meta": io::SolutionMeta::from(&sol), "n_nodes": mesh.n_nodes() }))
}

fn poincare_study(cfg: &RunConfig) -> Result<StudyReport> {
    let scn = cfg.scenario()?;
    let mut report = StudyReport::default();
    for &delta in &cfg.deltas {
        let inst = scn.instance(delta)?;
        let asm = OperatorAssembly::assemble(&inst.kernel, &inst.mesh, scn.inner)?;
        let (ld, cd) = poincare_constants(&asm, &inst.mesh, PoincareKind::Dirichlet)?;
        let (ln, cn) = poincare_constants(&asm, &inst.mesh, PoincareKind::Neumann)?;
        let mut m = BTreeMap::new();
        m.insert("lambda_dirichlet".to_string(), ld);
        m.insert("c_dirichlet".to_string(), cd);
        m.insert("lambda_neumann".to_string(), ln);
        m.insert("c_neumann".to_string(), cn);
        report.push(&inst, m);
    }
    Ok(report)
}

/// δ sweep of the configured study kind.
pub fn study(cfg: &RunConfig, out: &Path) -> Result<Value> {
    check_deltas(&cfg.deltas)?;
    let scn = cfg.scenario()?;
    let s = &cfg.study;
    let mut report = match s.kind {
        StudyKind::Convergence => convergence_study(&scn, s.benchmark, &cfg.deltas, &cfg.solver_options())?,
        StudyKind::Localization => localization_study(&scn, &cfg.function(&s.u)?, &cfg.function(&s.v)?, &cfg.deltas)?,
        StudyKind::LinearDemo => linear_localization_demo(&scn, &cfg.deltas)?,
        StudyKind::Poincare => poincare_study(cfg)?,
    };
    report.validate()?;
    report.metadata.insert("kind".into(), format!("{:?}", s.kind).to_lowercase());
    let names = report.metric_names();
    let decreasing: BTreeMap<String, bool> = names.iter().map(|n| (n.clone(), report.strictly_decreasing(n))).collect();
    io::write_study_csv(&report, create(out, "study.csv")?)?;
    io::write_study_json(&report, create(out, "study.json")?)?;
    Ok(json!({ "command": "study", "rows": report.rows.len(), "strictly_decreasing": decreasing }))
}

/// Green's identity residual under mesh refinement at fixed δ.
pub fn greens(cfg: &RunConfig, out: &Path) -> Result<Value> {
    let scn = cfg.scenario()?;
    let g = &cfg.greens;
    if g.levels == 0 {
        return Err(NlError::Parameter("greens.levels must be at least 1".into()));
    }
    let (u, v) = (cfg.function(&g.u)?, cfg.function(&g.v)?);
    let nodal = match g.method {
        GreensMethod::Auto => scn.domain.dim() == 1,
        GreensMethod::Nodal => true,
        GreensMethod::Quadrature => false,
    };
    let mut rows = Vec::new();
    for level in 0..g.levels {
        let inst = scn.clone().with_policy(scn.policy.refined(level)).instance(g.delta)?;
        let t = if nodal {
            let k = assemble_stiffness(&inst.kernel, &inst.mesh, scn.inner)?;
            greens_residual(&inst.kernel, &inst.mesh, scn.inner, &k, &u as &dyn Field, &v)?
        } else {
            greens_residual_quadrature(&inst.kernel, &inst.mesh, scn.inner, &u, &v)?
        };
        rows.push(vec![
            level as f64,
            inst.mesh.n_nodes() as f64,
            inst.mesh.h_max,
            inst.mesh.h_min,
            t.bilinear,
            t.interior,
            t.boundary,
            t.boundary_abs,
            t.residual,
        ]);
    }
    let header = ["level", "n_nodes", "h_max", "h_min", "bilinear", "interior", "boundary", "boundary_abs", "residual"];
    io::write_table_csv(&header, &rows, create(out, "greens.csv")?)?;
    let residuals: Vec<f64> = rows.iter().map(|r| r[8]).collect();
    let ratios: Vec<f64> = residuals.windows(2).map(|w| w[0] / w[1]).collect();
    let v = json!({ "command": "greens", "delta": g.delta, "method": if nodal { "nodal" } else { "quadrature" },
                    "residuals": residuals, "ratios": ratios });
    write_json(out, "greens.json", &v)?;
    Ok(v)
}

/// Profile and localization constants at the first δ.
pub fn constants(cfg: &RunConfig, out: &Path) -> Result<Value> {
    let scn = cfg.scenario()?;
    let prof = &scn.profile;
    let delta = cfg.deltas[0];
    let eta = LocalizationField::build_unchecked(&scn.domain, delta, scn.kappa0, scn.mode)?;
    let c_rho = linear_mode_constant(prof)?;
    let inst = scn.instance(delta)?;
    let op = NodalOperator::build(&inst.kernel, &inst.mesh, scn.inner)?;
    let (mu_lo, mu_hi) = op.scaled_phi_bounds();
    let by_k1 = if eta.kappa1 > 0.0 { Some(1.0 / (9.0 * eta.kappa1 * eta.kappa1)) } else { None };
    let by_kb = eta.kappa_bar0.map(|k| 1.0 / (2.0 * k * k));
    let v = json!({
        "family": io::ProfileFile::from_profile(prof),
        "delta": delta,
        "rho_bar": prof.rho_bar()?,
        "rho_under_d": prof.rho_under_d()?,
        "c_rho": c_rho,
        "mu_lower": mu_lo,
        "mu_upper": mu_hi,
        "kappa1": eta.kappa1,
        "kappa2": eta.kappa2,
        "kappa_bar0": eta.kappa_bar0,
        "kappa_bar0_nominal": eta.kappa_bar0_nominal(),
        "delta0": eta.delta0,
        "delta0_candidates": { "one": 1.0, "by_kappa1": by_k1, "by_kappa_bar0": by_kb },
    });
    write_json(out, "constants.json", &v)?;
    Ok(v)
}
