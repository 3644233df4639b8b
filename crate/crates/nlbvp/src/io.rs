//! Artifact formats: JSON for meshes, profiles and metadata; CSV for nodal
//! data and studies; coordinate text for sparse matrices.
//!
//! Floats written to CSV and text use `{:.16e}` (17 significant digits),
//! so identical inputs give byte-identical files.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sprs::CsMat;

use crate::error::{NlError, Result};
use crate::field::GridFunction;
use crate::geometry::{Domain, Mesh, Point};
use crate::kernels::{KernelProfile, ProfileFamily};
use crate::mollify::RoughData;
use crate::solvers::Solution;
use crate::verify::StudyReport;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> NlError {
    NlError::Data(format!("csv: {e}"))
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| NlError::Data(format!("{what}: cannot parse '{s}' as a number")))
}

/// Mesh as exchanged on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub domain: Domain,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub boundary_nodes: Vec<usize>,
    pub elements: Vec<[usize; 3]>,
}

impl MeshFile {
    pub fn from_mesh(mesh: &Mesh) -> Self {
        MeshFile {
            domain: mesh.domain.clone(),
            nodes: mesh.nodes.clone(),
            weights: mesh.weights.clone(),
            boundary_nodes: mesh.boundary_nodes.clone(),
            elements: mesh.elements.clone(),
        }
    }

    pub fn into_mesh(self) -> Result<Mesh> {
        Mesh::from_parts(self.domain, self.nodes, self.weights, self.boundary_nodes, self.elements)
    }
}

pub fn write_mesh_json<W: Write>(mesh: &Mesh, w: W) -> Result<()> {
    serde_json::to_writer(w, &MeshFile::from_mesh(mesh))?;
    Ok(())
}

pub fn read_mesh_json<R: Read>(r: R) -> Result<Mesh> {
    let file: MeshFile = serde_json::from_reader(r)?;
    file.into_mesh()
}

/// Profile as exchanged on disk: {family, R0, p, c, d}. `p` is absent for
/// tabulated profiles, whose samples travel in `table`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub family: String,
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<[Vec<f64>; 3]>,
}

impl ProfileFile {
    pub fn from_profile(p: &KernelProfile) -> Self {
        let (family, power, table) = match &p.family {
            ProfileFamily::PolyBump { p } => ("poly_bump", Some(*p), None),
            ProfileFamily::Tabulated { r, rho, drho } => {
                ("tabulated", None, Some([r.clone(), rho.clone(), drho.clone()]))
            }
        };
        ProfileFile { family: family.into(), r0: p.support, p: power, c: Some(p.c), d: p.dim, table }
    }

    /// Rebuilds the profile. The normalization constant is recomputed; a
    /// stored `c` that disagrees by more than 1e-9 relative is rejected.
    pub fn into_profile(self) -> Result<KernelProfile> {
        let family = match (self.family.as_str(), self.p, self.table) {
            ("poly_bump", Some(p), None) => ProfileFamily::PolyBump { p },
            ("tabulated", None, Some([r, rho, drho])) => ProfileFamily::Tabulated { r, rho, drho },
            (f, _, _) => return Err(NlError::Parameter(format!("profile family '{f}' with inconsistent fields"))),
        };
        let prof = KernelProfile::new(family, self.r0, self.d)?;
        if let Some(c) = self.c {
            if (c - prof.c).abs() > 1e-9 * prof.c.abs() {
                return Err(NlError::Parameter(format!("stored c = {c} differs from the normalization {}", prof.c)));
            }
        }
        Ok(prof)
    }
}

/// CSV `node_index,value`.
pub fn write_grid_csv<W: Write>(g: &[f64], w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wr.write_record(["node_index", "value"]).map_err(csv_err)?;
    for (i, v) in g.iter().enumerate() {
        wr.write_record([i.to_string(), fmt_f64(*v)]).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads `node_index,value` rows; indices must cover 0..n exactly once.
pub fn read_grid_csv<R: Read>(r: R) -> Result<GridFunction> {
    let mut rd = csv::Reader::from_reader(r);
    let mut pairs = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 2 {
            return Err(NlError::Data(format!("expected 2 columns, got {}", rec.len())));
        }
        let i: usize = rec[0].trim().parse().map_err(|_| NlError::Data(format!("bad node index '{}'", &rec[0])))?;
        pairs.push((i, parse_f64(&rec[1], "value")?));
    }
    let n = pairs.len();
    let mut values = vec![f64::NAN; n];
    let mut seen = vec![false; n];
    for (i, v) in pairs {
        if i >= n || seen[i] {
            return Err(NlError::Data(format!("node index {i} missing or repeated")));
        }
        seen[i] = true;
        values[i] = v;
    }
    Ok(GridFunction::new(values))
}

pub fn write_grid_json<W: Write>(g: &[f64], w: W) -> Result<()> {
    serde_json::to_writer(w, &serde_json::json!({ "values": g }))?;
    Ok(())
}

pub fn read_grid_json<R: Read>(r: R) -> Result<GridFunction> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Values {
        values: Vec<f64>,
    }
    let v: Values = serde_json::from_reader(r)?;
    Ok(GridFunction::new(v.values))
}

/// Coordinate text format, one `i j value` line per stored entry in row
/// order.
pub fn write_matrix_coo<W: Write>(a: &CsMat<f64>, mut w: W) -> Result<()> {
    writeln!(w, "{} {} {}", a.rows(), a.cols(), a.nnz())?;
    let a = if a.is_csr() { a.clone() } else { a.to_csr() };
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, v) in row.iter() {
            writeln!(w, "{i} {j} {}", fmt_f64(*v))?;
        }
    }
    Ok(())
}

/// Metadata mirror of a solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionMeta {
    pub delta: f64,
    pub iters: usize,
    pub residual: f64,
    pub energy: f64,
    pub constraint_residual: f64,
}

impl From<&Solution> for SolutionMeta {
    fn from(s: &Solution) -> Self {
        SolutionMeta {
            delta: s.delta,
            iters: s.iterations,
            residual: s.residual,
            energy: s.energy,
            constraint_residual: s.constraint_residual,
        }
    }
}

/// CSV `x[,y],u` with one row per node.
pub fn write_solution_csv<W: Write>(mesh: &Mesh, u: &[f64], w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let dim = mesh.dim();
    let header: &[&str] = if dim == 1 { &["x", "u"] } else { &["x", "y", "u"] };
    wr.write_record(header).map_err(csv_err)?;
    for (x, v) in mesh.nodes.iter().zip(u) {
        let mut rec: Vec<String> = x[..dim].iter().map(|c| fmt_f64(*c)).collect();
        rec.push(fmt_f64(*v));
        wr.write_record(&rec).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_solution_meta<W: Write>(sol: &Solution, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, &SolutionMeta::from(sol))?;
    Ok(())
}

/// CSV with columns `delta,h_max,h_min` followed by the metric names in
/// sorted order. Missing metrics are written as `nan`.
pub fn write_study_csv<W: Write>(report: &StudyReport, w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let names = report.metric_names();
    let mut header = vec!["delta".to_string(), "h_max".into(), "h_min".into()];
    header.extend(names.iter().cloned());
    wr.write_record(&header).map_err(csv_err)?;
    for row in &report.rows {
        let mut rec = vec![fmt_f64(row.delta), fmt_f64(row.h_max), fmt_f64(row.h_min)];
        for n in &names {
            rec.push(row.metrics.get(n).map_or_else(|| "nan".to_string(), |v| fmt_f64(*v)));
        }
        wr.write_record(&rec).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_study_json<W: Write>(report: &StudyReport, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, report)?;
    Ok(())
}

/// Generic numeric table with a header row.
pub fn write_table_csv<W: Write>(header: &[&str], rows: &[Vec<f64>], w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wr.write_record(header).map_err(csv_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(NlError::Data(format!("table row has {} cells for {} columns", row.len(), header.len())));
        }
        wr.write_record(row.iter().map(|v| fmt_f64(*v))).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Rough data from CSV columns `x[,y],f0,f1_x[,f1_y]`, one row per node in
/// node order. Coordinates must match the mesh nodes to 1e-9.
pub fn read_rough_csv<R: Read>(mesh: &Mesh, r: R) -> Result<RoughData> {
    let dim = mesh.dim();
    let mut rd = csv::Reader::from_reader(r);
    let width = 2 * dim + 1;
    let mut f0 = Vec::new();
    let mut f1 = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != width {
            return Err(NlError::Data(format!("row {k}: expected {width} columns, got {}", rec.len())));
        }
        let vals: Vec<f64> = rec.iter().map(|s| parse_f64(s, "rough data")).collect::<Result<_>>()?;
        let node = mesh
            .nodes
            .get(k)
            .ok_or_else(|| NlError::Data(format!("more rows than the {} mesh nodes", mesh.n_nodes())))?;
        if (0..dim).any(|c| (vals[c] - node[c]).abs() > 1e-9) {
            return Err(NlError::Data(format!("row {k}: coordinates do not match node {k}")));
        }
        f0.push(vals[dim]);
        let mut g = [0.0; 2];
        g[..dim].copy_from_slice(&vals[dim + 1..]);
        f1.push(g);
    }
    let data = RoughData { f0, f1, support_radius: None };
    data.check(mesh)?;
    Ok(data)
}
