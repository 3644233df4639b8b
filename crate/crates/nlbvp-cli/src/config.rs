//! Run configuration: JSON file plus `--set key=value` overrides.

use std::path::{Path, PathBuf};

use nlbvp::solvers::SolverOptions;
use nlbvp::verify::{Benchmark, MeshPolicy, Scenario};
use nlbvp::{AnalyticFn, Domain, InnerResolution, KernelProfile, Mode, NlError, ProfileFamily, Result};
use serde::Deserialize;
use serde_json::Value;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_domain")]
    pub domain: Domain,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub localization: LocalizationSection,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub mesh: MeshPolicy,
    #[serde(default)]
    pub inner: InnerResolution,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub study: StudySection,
    #[serde(default)]
    pub greens: GreensSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_domain() -> Domain {
    Domain::unit_interval()
}

fn default_deltas() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub family: String,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub p: f64,
    /// CSV with columns r,rho,drho for the tabulated family.
    pub table: Option<PathBuf>,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection { family: "poly_bump".into(), r0: 0.9, p: 2.0, table: None }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizationSection {
    pub kappa0: f64,
    pub mode: Mode,
}

impl Default for LocalizationSection {
    fn default() -> Self {
        LocalizationSection { kappa0: 0.25, mode: Mode::Quadratic }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bc {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Cg,
    FixedPoint,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub bc: Bc,
    /// δ for `solve`; the first entry of `deltas` when absent.
    pub delta: Option<f64>,
    /// Named load function.
    pub f: String,
    /// Named boundary data (Dirichlet values or Neumann flux).
    pub g: Option<String>,
    /// Nodal load as `node_index,value` CSV; overrides `f`.
    pub f_csv: Option<PathBuf>,
    /// Nodal boundary data as `node_index,value` CSV; overrides `g`.
    pub g_csv: Option<PathBuf>,
    /// Rough data (x..., f0, f1...) CSV; overrides `f` and `f_csv`.
    pub rough_csv: Option<PathBuf>,
    /// Collar on which f1 must vanish (Neumann rough data).
    pub support_radius: Option<f64>,
    pub solver: SolverKind,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection {
            bc: Bc::Dirichlet,
            delta: None,
            f: "sin_pi_load".into(),
            g: None,
            f_csv: None,
            g_csv: None,
            rough_csv: None,
            support_radius: None,
            solver: SolverKind::Cg,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Convergence,
    Localization,
    LinearDemo,
    Poincare,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub kind: StudyKind,
    pub benchmark: Benchmark,
    pub u: String,
    pub v: String,
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            kind: StudyKind::Convergence,
            benchmark: Benchmark::DirichletSine,
            u: "sin_pi".into(),
            v: "sin_pi".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreensMethod {
    /// Nodal in 1D, quadrature in 2D.
    Auto,
    Nodal,
    Quadrature,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreensSection {
    pub delta: f64,
    pub levels: u32,
    pub u: String,
    pub v: String,
    pub method: GreensMethod,
}

impl Default for GreensSection {
    fn default() -> Self {
        GreensSection { delta: 0.05, levels: 3, u: "sin_pi".into(), v: "cos_pi".into(), method: GreensMethod::Auto }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tol: f64,
    pub max_iter: usize,
    pub tol_compat: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let o = SolverOptions::default();
        Tolerances { tol: o.tol, max_iter: o.max_iter, tol_compat: o.tol_compat }
    }
}

/// Sets `path` (dot-separated) in a JSON object tree. The value is parsed
/// as JSON when possible and taken as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| NlError::Parameter(format!("--set expects key=value, got '{assignment}'")))?;
    let value = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(NlError::Parameter(format!("bad override key '{key}'")));
    }
    let mut node = root;
    for p in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| NlError::Parameter(format!("override '{key}' descends into a non-object")))?;
        node = obj.entry(p.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| NlError::Parameter(format!("override '{key}' descends into a non-object")))?;
    obj.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NlError::Parameter(format!("cannot read config {}: {e}", path.display())))?;
        let mut value: Value = serde_json::from_str(&text)?;
        if !value.is_object() {
            return Err(NlError::Parameter("config must be a JSON object".into()));
        }
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: RunConfig = serde_json::from_value(value)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base).validate()
    }

    fn resolve_paths(mut self, base: &Path) -> Self {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut self.kernel.table);
        fix(&mut self.problem.f_csv);
        fix(&mut self.problem.g_csv);
        fix(&mut self.problem.rough_csv);
        self
    }

    /// Rules the schema cannot express: positive δ, known function names,
    /// referenced files present.
    pub fn validate(self) -> Result<Self> {
        self.domain.validate()?;
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(NlError::Parameter("deltas must be a non-empty list of positive numbers".into()));
        }
        let m = &self.mesh;
        if [m.h_max_factor, m.h_min_factor, m.c_grade].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(NlError::Parameter("mesh factors must be positive".into()));
        }
        if self.inner.n_radial == 0 || self.inner.n_angular == 0 {
            return Err(NlError::Parameter("inner resolution must be positive".into()));
        }
        for name in [&self.problem.f, &self.study.u, &self.study.v, &self.greens.u, &self.greens.v]
            .into_iter()
            .chain(self.problem.g.as_ref())
        {
            AnalyticFn::from_name(name, &self.domain)?;
        }
        for p in [&self.kernel.table, &self.problem.f_csv, &self.problem.g_csv, &self.problem.rough_csv]
            .into_iter()
            .flatten()
        {
            if !p.is_file() {
                return Err(NlError::Parameter(format!("referenced file {} does not exist", p.display())));
            }
        }
        if self.threads == Some(0) {
            return Err(NlError::Parameter("threads must be positive".into()));
        }
        if self.tolerances.tol <= 0.0 || self.tolerances.tol_compat <= 0.0 || self.tolerances.max_iter == 0 {
            return Err(NlError::Parameter("tolerances must be positive".into()));
        }
        Ok(self)
    }

    pub fn profile(&self) -> Result<KernelProfile> {
        let dim = self.domain.dim();
        let family = match self.kernel.family.as_str() {
            "poly_bump" => ProfileFamily::PolyBump { p: self.kernel.p },
            "tabulated" => {
                let path = self
                    .kernel
                    .table
                    .as_ref()
                    .ok_or_else(|| NlError::Parameter("tabulated kernel needs kernel.table".into()))?;
                read_table(path)?
            }
            other => return Err(NlError::Parameter(format!("unknown kernel family '{other}'"))),
        };
        KernelProfile::new(family, self.kernel.r0, dim)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Ok(Scenario {
            domain: self.domain.clone(),
            profile: self.profile()?,
            kappa0: self.localization.kappa0,
            mode: self.localization.mode,
            policy: self.mesh,
            inner: self.inner,
        })
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tolerances.tol,
            max_iter: self.tolerances.max_iter,
            tol_compat: self.tolerances.tol_compat,
        }
    }

    pub fn function(&self, name: &str) -> Result<AnalyticFn> {
        AnalyticFn::from_name(name, &self.domain)
    }
}

/// Tabulated profile samples from a CSV with header r,rho,drho.
fn read_table(path: &Path) -> Result<ProfileFamily> {
    let text = std::fs::read_to_string(path)?;
    let mut cols: [Vec<f64>; 3] = Default::default();
    for (k, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(NlError::Data(format!("{}: line {} needs 3 columns", path.display(), k + 1)));
        }
        for (c, s) in cols.iter_mut().zip(cells) {
            c.push(s.trim().parse().map_err(|_| NlError::Data(format!("{}: bad number '{s}'", path.display())))?);
        }
    }
    let [r, rho, drho] = cols;
    Ok(ProfileFamily::Tabulated { r, rho, drho })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_create_nested_keys() {
        let mut v = serde_json::json!({});
        apply_override(&mut v, "problem.bc=neumann").unwrap();
        apply_override(&mut v, "deltas=[0.1,0.05]").unwrap();
        assert_eq!(v["problem"]["bc"], "neumann");
        assert_eq!(v["deltas"][1], 0.05);
        assert!(apply_override(&mut v, "novalue").is_err());
        assert!(apply_override(&mut v, "deltas.x=1").is_err());
    }

    #[test]
    fn empty_config_takes_defaults() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        let cfg = cfg.validate().unwrap();
        assert_eq!(cfg.deltas, vec![0.1, 0.05, 0.025]);
        assert_eq!(cfg.localization.kappa0, 0.25);
        assert_eq!(cfg.problem.bc, Bc::Dirichlet);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"delta": 0.1}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"mesh": {"h_max": 0.1}}"#).is_err());
    }
}
