//! Bounded C² domains (interval, disk), graded meshes and quadrature rules.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{NlError, Result};
use crate::localization::LocalizationField;
use crate::quadrature::{gauss_on, TRIANGLE_RULE};

/// Points always carry two coordinates; in 1D the second one is zero.
pub type Point = [f64; 2];

/// Sentinel for the unused third vertex of a 1D element.
pub const NO_NODE: usize = usize::MAX;

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Symmetric 2×2 matrix stored as [[xx, xy], [xy, yy]].
pub type Mat2 = [[f64; 2]; 2];

pub const ZERO_MAT: Mat2 = [[0.0; 2]; 2];

/// Spectral norm of a symmetric 2×2 matrix.
pub fn sym_norm(m: &Mat2) -> f64 {
    let tr = 0.5 * (m[0][0] + m[1][1]);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr - det).max(0.0).sqrt();
    (tr + disc).abs().max((tr - disc).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Disk { center: Point, radius: f64 },
}

/// Distance to the boundary together with its gradient and Hessian.
#[derive(Clone, Copy, Debug)]
pub struct DistInfo {
    pub dist: f64,
    pub grad: Point,
    pub hess: Mat2,
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(NlError::Parameter(format!("interval needs a < b, got ({a}, {b})")));
        }
        Ok(Domain::Interval { a, b })
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0 && center.iter().all(|c| c.is_finite())) {
            return Err(NlError::Parameter(format!("disk radius must be positive, got {radius}")));
        }
        Ok(Domain::Disk { center, radius })
    }

    pub fn unit_interval() -> Self {
        Domain::Interval { a: 0.0, b: 1.0 }
    }

    pub fn unit_disk() -> Self {
        Domain::Disk { center: [0.0, 0.0], radius: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain::Interval { a, b } => Domain::interval(a, b).map(|_| ()),
            Domain::Disk { center, radius } => Domain::disk(center, radius).map(|_| ()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Disk { .. } => 2,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Disk { radius, .. } => 2.0 * radius,
        }
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Disk { radius, .. } => PI * radius * radius,
        }
    }

    /// Surface measure of the boundary (counting measure in 1D).
    pub fn boundary_measure(&self) -> f64 {
        match *self {
            Domain::Interval { .. } => 2.0,
            Domain::Disk { radius, .. } => 2.0 * PI * radius,
        }
    }

    /// Largest distance to the boundary attained inside the domain.
    pub fn inradius(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => 0.5 * (b - a),
            Domain::Disk { radius, .. } => radius,
        }
    }

    pub fn centroid(&self) -> Point {
        match *self {
            Domain::Interval { a, b } => [0.5 * (a + b), 0.0],
            Domain::Disk { center, .. } => center,
        }
    }

    fn tol(&self) -> f64 {
        1e-12 * self.diameter()
    }

    fn signed_dist(&self, x: Point) -> f64 {
        match *self {
            Domain::Interval { a, b } => (x[0] - a).min(b - x[0]),
            Domain::Disk { center, radius } => radius - norm(sub(x, center)),
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        self.signed_dist(x) >= -self.tol()
    }

    /// Exact distance to the boundary for points of the closed domain.
    pub fn dist_to_boundary(&self, x: Point) -> Result<f64> {
        let d = self.signed_dist(x);
        if d < -self.tol() || !d.is_finite() {
            return Err(NlError::DomainMembership { point: x });
        }
        Ok(d.max(0.0))
    }

    /// Distance of `x + s` computed from the offset, without forming the
    /// sum first; this keeps full relative accuracy next to the boundary.
    pub fn dist_info_offset(&self, x: Point, s: Point) -> DistInfo {
        match *self {
            Domain::Interval { a, b } => {
                let left = (x[0] - a) + s[0];
                let right = (b - x[0]) - s[0];
                if left <= right {
                    DistInfo { dist: left.max(0.0), grad: [1.0, 0.0], hess: ZERO_MAT }
                } else {
                    DistInfo { dist: right.max(0.0), grad: [-1.0, 0.0], hess: ZERO_MAT }
                }
            }
            Domain::Disk { center, radius } => {
                let xc = sub(x, center);
                let y = add(xc, s);
                let rx = norm(xc);
                let ry = norm(y);
                let dist = (radius - rx) - (2.0 * dot(xc, s) + dot(s, s)) / (ry + rx).max(f64::MIN_POSITIVE);
                if ry <= 1e-300 {
                    return DistInfo { dist, grad: [0.0, 0.0], hess: ZERO_MAT };
                }
                let n = scale(y, 1.0 / ry);
                let k = -1.0 / ry;
                DistInfo {
                    dist: dist.max(0.0),
                    grad: [-n[0], -n[1]],
                    hess: [[k * (1.0 - n[0] * n[0]), -k * n[0] * n[1]], [-k * n[0] * n[1], k * (1.0 - n[1] * n[1])]],
                }
            }
        }
    }

    pub fn dist_info(&self, x: Point) -> DistInfo {
        self.dist_info_offset(x, [0.0, 0.0])
    }

    pub fn outward_normal(&self, xb: Point) -> Result<Point> {
        if self.signed_dist(xb).abs() > 1e-10 * self.diameter() {
            return Err(NlError::NotOnBoundary { point: xb });
        }
        Ok(match *self {
            Domain::Interval { a, b } => {
                if (xb[0] - a).abs() <= (xb[0] - b).abs() {
                    [-1.0, 0.0]
                } else {
                    [1.0, 0.0]
                }
            }
            Domain::Disk { center, .. } => {
                let v = sub(xb, center);
                scale(v, 1.0 / norm(v))
            }
        })
    }
}

/// Result of locating a point in the mesh: element index and barycentric
/// coordinates (possibly slightly negative when extrapolating).
#[derive(Clone, Copy, Debug)]
pub struct Location {
    pub elem: usize,
    pub bary: [f64; 3],
}

/// Boundary quadrature node.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BoundaryQuad {
    pub node: usize,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub domain: Domain,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub boundary_nodes: Vec<usize>,
    pub boundary_quad: Vec<BoundaryQuad>,
    pub elements: Vec<[usize; 3]>,
    pub h_max: f64,
    pub h_min: f64,
    /// Ring radii of a structured disk mesh (outermost first).
    pub radii: Vec<f64>,
    is_boundary: Vec<bool>,
    locator: Locator,
}

/// Quadrature point of an outer (volume) rule, with its host element.
#[derive(Clone, Copy, Debug)]
pub struct OuterPoint {
    pub x: Point,
    pub weight: f64,
    pub elem: usize,
    pub bary: [f64; 3],
}

/// Spacing function of the grading policy at distance `t` from the boundary.
fn spacing(eta: &LocalizationField, t: f64, h_max: f64, h_min: f64, c_grade: f64) -> f64 {
    if h_min >= h_max {
        return h_max;
    }
    h_max.min((c_grade * eta.eta_of_dist(t)).max(h_min))
}

/// Distances 0 = t_0 < t_1 < ... < t_m = `length` marching inward from the
/// boundary with the graded spacing; the last step is rebalanced so no
/// spacing exceeds the local target.
fn graded_offsets(eta: &LocalizationField, length: f64, h_max: f64, h_min: f64, c_grade: f64) -> Vec<f64> {
    let mut ts = vec![0.0];
    let mut hs = vec![];
    loop {
        let t = *ts.last().unwrap();
        let h = spacing(eta, t, h_max, h_min, c_grade);
        if t + h >= length {
            let rest = length - t;
            if rest < 0.5 * h && ts.len() > 1 {
                // merge the short tail into the previous step; split the
                // merged span evenly unless it is within roundoff of one step
                ts.pop();
                let prev = *ts.last().unwrap();
                if length - prev > h * (1.0 + 1e-9) {
                    ts.push(0.5 * (prev + length));
                }
            }
            ts.push(length);
            break;
        }
        ts.push(t + h);
        hs.push(h);
    }
    ts
}

impl Mesh {
    /// Graded mesh for `domain`: local spacing min(h_max, max(c_grade·η, h_min)).
    pub fn build(domain: &Domain, h_max: f64, h_min: f64, c_grade: f64, eta: &LocalizationField) -> Result<Self> {
        domain.validate()?;
        if !(h_min > 0.0) {
            return Err(NlError::Parameter("h_min must be positive".into()));
        }
        if !(h_max > 0.0 && h_max.is_finite() && c_grade > 0.0) {
            return Err(NlError::Parameter("h_max and c_grade must be positive".into()));
        }
        if eta.domain() != domain {
            return Err(NlError::Parameter("localization field built on another domain".into()));
        }
        match *domain {
            Domain::Interval { a, b } => {
                let half = 0.5 * (b - a);
                let ts = graded_offsets(eta, half, h_max, h_min, c_grade);
                let mut xs: Vec<f64> = ts.iter().map(|t| a + t).collect();
                let mid = *xs.last().unwrap();
                for t in ts.iter().rev().skip(1) {
                    xs.push(b - t);
                }
                debug_assert!(xs.windows(2).all(|w| w[1] > w[0]) && mid <= b);
                Ok(Self::interval_from_nodes(domain.clone(), xs, h_max, h_min))
            }
            Domain::Disk { center, radius } => {
                let ts = graded_offsets(eta, radius, h_max, h_min, c_grade);
                let radii: Vec<f64> = ts[..ts.len() - 1].iter().map(|t| radius - t).collect();
                let mut counts = Vec::with_capacity(radii.len());
                for (k, r) in radii.iter().enumerate() {
                    let h = spacing(eta, ts[k], h_max, h_min, c_grade);
                    counts.push(((2.0 * PI * r / h).ceil() as usize).max(6));
                }
                Ok(Self::disk_from_rings(domain.clone(), center, &radii, &counts, h_max, h_min))
            }
        }
    }

    fn interval_from_nodes(domain: Domain, xs: Vec<f64>, h_max: f64, h_min: f64) -> Self {
        let n = xs.len();
        let mut weights = vec![0.0; n];
        let mut elements = Vec::with_capacity(n - 1);
        for e in 0..n - 1 {
            let h = xs[e + 1] - xs[e];
            weights[e] += 0.5 * h;
            weights[e + 1] += 0.5 * h;
            elements.push([e, e + 1, NO_NODE]);
        }
        let nodes: Vec<Point> = xs.iter().map(|&x| [x, 0.0]).collect();
        let boundary_nodes = vec![0, n - 1];
        let boundary_quad = vec![BoundaryQuad { node: 0, weight: 1.0 }, BoundaryQuad { node: n - 1, weight: 1.0 }];
        Self::assemble(domain, nodes, weights, boundary_nodes, boundary_quad, elements, h_max, h_min, vec![])
    }

    fn disk_from_rings(domain: Domain, center: Point, radii: &[f64], counts: &[usize], h_max: f64, h_min: f64) -> Self {
        let mut nodes = Vec::new();
        let mut ring_start = Vec::new();
        let mut angles: Vec<Vec<f64>> = Vec::new();
        for (k, (&r, &n)) in radii.iter().zip(counts).enumerate() {
            ring_start.push(nodes.len());
            let offset = if k % 2 == 0 { 0.0 } else { 0.5 };
            let mut ring_angles = Vec::with_capacity(n);
            for i in 0..n {
                let th = 2.0 * PI * (i as f64 + offset) / n as f64;
                ring_angles.push(th);
                nodes.push([center[0] + r * th.cos(), center[1] + r * th.sin()]);
            }
            angles.push(ring_angles);
        }
        let center_node = nodes.len();
        nodes.push(center);

        let mut elements = Vec::new();
        let mut push_tri = |mut t: [usize; 3], nodes: &Vec<Point>| {
            let area = tri_area_signed(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
            if area < 0.0 {
                t.swap(1, 2);
            }
            elements.push(t);
        };
        for k in 0..radii.len().saturating_sub(1) {
            let (na, nb) = (counts[k], counts[k + 1]);
            let (sa, sb) = (ring_start[k], ring_start[k + 1]);
            let ang = |ring: &Vec<f64>, i: usize, n: usize| ring[i % n] + if i >= n { 2.0 * PI } else { 0.0 };
            let (mut i, mut j) = (0usize, 0usize);
            while i < na || j < nb {
                let next_a = if i < na { ang(&angles[k], i + 1, na) } else { f64::INFINITY };
                let next_b = if j < nb { ang(&angles[k + 1], j + 1, nb) } else { f64::INFINITY };
                if next_a <= next_b {
                    push_tri([sa + i % na, sa + (i + 1) % na, sb + j % nb], &nodes);
                    i += 1;
                } else {
                    push_tri([sa + i % na, sb + (j + 1) % nb, sb + j % nb], &nodes);
                    j += 1;
                }
            }
        }
        let last = radii.len() - 1;
        let (sl, nl) = (ring_start[last], counts[last]);
        for i in 0..nl {
            push_tri([center_node, sl + i, sl + (i + 1) % nl], &nodes);
        }

        let mut weights = vec![0.0; nodes.len()];
        for t in &elements {
            let a = tri_area_signed(nodes[t[0]], nodes[t[1]], nodes[t[2]]) / 3.0;
            for &v in t {
                weights[v] += a;
            }
        }
        let nb = counts[0];
        let arc = 2.0 * PI * radii[0] / nb as f64;
        let boundary_nodes: Vec<usize> = (0..nb).collect();
        let boundary_quad = boundary_nodes.iter().map(|&i| BoundaryQuad { node: i, weight: arc }).collect();
        Self::assemble(domain, nodes, weights, boundary_nodes, boundary_quad, elements, h_max, h_min, radii.to_vec())
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        domain: Domain,
        nodes: Vec<Point>,
        weights: Vec<f64>,
        boundary_nodes: Vec<usize>,
        boundary_quad: Vec<BoundaryQuad>,
        elements: Vec<[usize; 3]>,
        h_max: f64,
        h_min: f64,
        radii: Vec<f64>,
    ) -> Self {
        let mut is_boundary = vec![false; nodes.len()];
        for &b in &boundary_nodes {
            is_boundary[b] = true;
        }
        let locator = Locator::new(domain.dim(), &nodes, &elements);
        Mesh {
            domain,
            nodes,
            weights,
            boundary_nodes,
            boundary_quad,
            elements,
            h_max,
            h_min,
            radii,
            is_boundary,
            locator,
        }
    }

    /// Rebuilds a mesh from exported arrays. Boundary quadrature is derived
    /// from the boundary nodes (unit weights in 1D, arc lengths in 2D).
    pub fn from_parts(
        domain: Domain,
        nodes: Vec<Point>,
        weights: Vec<f64>,
        boundary_nodes: Vec<usize>,
        elements: Vec<[usize; 3]>,
    ) -> Result<Self> {
        domain.validate()?;
        let n = nodes.len();
        if weights.len() != n || n < 2 {
            return Err(NlError::Mesh("weights and nodes differ in length".into()));
        }
        let nv = domain.dim() + 1;
        for e in &elements {
            if e[..nv].iter().any(|&v| v >= n) {
                return Err(NlError::Mesh("element references a missing node".into()));
            }
        }
        if boundary_nodes.is_empty() || boundary_nodes.iter().any(|&b| b >= n) {
            return Err(NlError::Mesh("invalid boundary node set".into()));
        }
        let boundary_quad = match domain {
            Domain::Interval { .. } => boundary_nodes.iter().map(|&b| BoundaryQuad { node: b, weight: 1.0 }).collect(),
            Domain::Disk { center, .. } => {
                let mut sorted: Vec<(f64, usize)> = boundary_nodes
                    .iter()
                    .map(|&b| {
                        let v = sub(nodes[b], center);
                        (v[1].atan2(v[0]), b)
                    })
                    .collect();
                sorted.sort_by(|p, q| p.0.total_cmp(&q.0));
                let m = sorted.len();
                (0..m)
                    .map(|i| {
                        let prev = sorted[(i + m - 1) % m].1;
                        let next = sorted[(i + 1) % m].1;
                        let cur = sorted[i].1;
                        let w = 0.5 * (norm(sub(nodes[cur], nodes[prev])) + norm(sub(nodes[next], nodes[cur])));
                        BoundaryQuad { node: cur, weight: w }
                    })
                    .collect()
            }
        };
        let mut h_max: f64 = 0.0;
        let mut h_min = f64::INFINITY;
        for e in &elements {
            for a in 0..nv {
                for b in a + 1..nv {
                    let l = norm(sub(nodes[e[a]], nodes[e[b]]));
                    h_max = h_max.max(l);
                    h_min = h_min.min(l);
                }
            }
        }
        Ok(Self::assemble(domain, nodes, weights, boundary_nodes, boundary_quad, elements, h_max, h_min, vec![]))
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&i| !self.is_boundary[i]).collect()
    }

    /// Vertices of element `e`.
    pub fn element_nodes(&self, e: usize) -> &[usize] {
        &self.elements[e][..self.dim() + 1]
    }

    pub fn element_measure(&self, e: usize) -> f64 {
        let t = self.elements[e];
        match self.dim() {
            1 => self.nodes[t[1]][0] - self.nodes[t[0]][0],
            _ => tri_area_signed(self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]).abs(),
        }
    }

    pub fn locate(&self, y: Point) -> Location {
        self.locator.locate(&self.nodes, &self.elements, y)
    }

    /// Evaluates the piecewise-linear interpolant of nodal `values` at `y`.
    pub fn interpolate(&self, values: &[f64], y: Point) -> f64 {
        let loc = self.locate(y);
        self.element_nodes(loc.elem).iter().zip(loc.bary).map(|(&v, l)| l * values[v]).sum()
    }

    /// Gradient of the P1 interpolant on element `e`.
    pub fn element_gradient(&self, e: usize, values: &[f64]) -> Point {
        let t = self.elements[e];
        match self.dim() {
            1 => {
                let h = self.nodes[t[1]][0] - self.nodes[t[0]][0];
                [(values[t[1]] - values[t[0]]) / h, 0.0]
            }
            _ => {
                let g = tri_basis_gradients(self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]);
                let mut out = [0.0, 0.0];
                for a in 0..3 {
                    out[0] += g[a][0] * values[t[a]];
                    out[1] += g[a][1] * values[t[a]];
                }
                out
            }
        }
    }

    /// Gradients of the three (or two) hat functions on element `e`.
    pub fn basis_gradients(&self, e: usize) -> [Point; 3] {
        let t = self.elements[e];
        match self.dim() {
            1 => {
                let h = self.nodes[t[1]][0] - self.nodes[t[0]][0];
                [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]]
            }
            _ => tri_basis_gradients(self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]),
        }
    }

    /// Element-to-node adjacency (elements incident to each node).
    pub fn node_elements(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes()];
        for e in 0..self.elements.len() {
            for &v in self.element_nodes(e) {
                adj[v].push(e);
            }
        }
        adj
    }

    /// Longest incident edge per node.
    pub fn local_spacing(&self) -> Vec<f64> {
        let mut h = vec![0.0f64; self.n_nodes()];
        for e in 0..self.elements.len() {
            let vs = self.element_nodes(e);
            for a in 0..vs.len() {
                for b in a + 1..vs.len() {
                    let l = norm(sub(self.nodes[vs[a]], self.nodes[vs[b]]));
                    h[vs[a]] = h[vs[a]].max(l);
                    h[vs[b]] = h[vs[b]].max(l);
                }
            }
        }
        h
    }

    /// Element Gauss points (3 per segment or triangle) with host data.
    pub fn element_rule(&self) -> Vec<OuterPoint> {
        let mut out = Vec::with_capacity(3 * self.elements.len());
        let (gx, gw) = gauss_on(3, 0.0, 1.0);
        for (e, t) in self.elements.iter().enumerate() {
            match self.dim() {
                1 => {
                    let (x0, x1) = (self.nodes[t[0]][0], self.nodes[t[1]][0]);
                    for (l, w) in gx.iter().zip(&gw) {
                        out.push(OuterPoint {
                            x: [x0 + l * (x1 - x0), 0.0],
                            weight: w * (x1 - x0),
                            elem: e,
                            bary: [1.0 - l, *l, 0.0],
                        });
                    }
                }
                _ => {
                    let area = self.element_measure(e);
                    let p = [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]];
                    for (b, w) in TRIANGLE_RULE {
                        let x = [
                            b[0] * p[0][0] + b[1] * p[1][0] + b[2] * p[2][0],
                            b[0] * p[0][1] + b[1] * p[1][1] + b[2] * p[2][1],
                        ];
                        out.push(OuterPoint { x, weight: w * area, elem: e, bary: b });
                    }
                }
            }
        }
        out
    }

    /// Volume rule on the exact domain for smooth integrands. Interval meshes
    /// reuse the element rule; structured disk meshes use radial Gauss points
    /// between ring radii times `n_theta` uniform angles.
    pub fn exact_domain_rule(&self, n_theta: usize) -> Vec<(Point, f64)> {
        match self.domain {
            Domain::Disk { center, .. } if !self.radii.is_empty() => {
                let mut edges: Vec<f64> = self.radii.clone();
                edges.push(0.0);
                let dth = 2.0 * PI / n_theta as f64;
                let mut out = Vec::new();
                for k in 0..edges.len() - 1 {
                    let (ro, ri) = (edges[k], edges[k + 1]);
                    let (rs, ws) = gauss_on(3, ri, ro);
                    for (r, w) in rs.iter().zip(&ws) {
                        for j in 0..n_theta {
                            let th = (j as f64 + 0.5) * dth;
                            out.push(([center[0] + r * th.cos(), center[1] + r * th.sin()], w * r * dth));
                        }
                    }
                }
                out
            }
            _ => self.element_rule().into_iter().map(|q| (q.x, q.weight)).collect(),
        }
    }
}

/// Uniform bucket grid over points for radius queries.
#[derive(Clone, Debug)]
pub struct NodeGrid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl NodeGrid {
    pub fn new(points: &[Point], cell: f64) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for c in 0..2 {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        let cell = cell.max(1e-12 * (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-300));
        let nx = (((hi[0] - lo[0]) / cell).floor() as usize + 1).min(1 << 20);
        let ny = (((hi[1] - lo[1]) / cell).floor() as usize + 1).min(1 << 20);
        let cell = cell.max((hi[0] - lo[0]) / nx as f64).max((hi[1] - lo[1]) / ny as f64);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (k, p) in points.iter().enumerate() {
            let i = (((p[0] - lo[0]) / cell) as usize).min(nx - 1);
            let j = (((p[1] - lo[1]) / cell) as usize).min(ny - 1);
            buckets[j * nx + i].push(k);
        }
        NodeGrid { origin: lo, cell, nx, ny, buckets }
    }

    /// Indices of points within `radius` of `x`, in increasing order.
    pub fn within(&self, points: &[Point], x: Point, radius: f64) -> Vec<usize> {
        let span = |v: f64, o: f64, n: usize| {
            let lo = ((v - radius - o) / self.cell).floor().max(0.0) as usize;
            let hi = (((v + radius - o) / self.cell).floor().max(0.0) as usize).min(n - 1);
            (lo.min(n - 1), hi)
        };
        let (i0, i1) = span(x[0], self.origin[0], self.nx);
        let (j0, j1) = span(x[1], self.origin[1], self.ny);
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                for &k in &self.buckets[j * self.nx + i] {
                    if norm(sub(points[k], x)) <= radius {
                        out.push(k);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

pub fn tri_area_signed(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn tri_basis_gradients(a: Point, b: Point, c: Point) -> [Point; 3] {
    let twice = 2.0 * tri_area_signed(a, b, c);
    [
        [(b[1] - c[1]) / twice, (c[0] - b[0]) / twice],
        [(c[1] - a[1]) / twice, (a[0] - c[0]) / twice],
        [(a[1] - b[1]) / twice, (b[0] - a[0]) / twice],
    ]
}

fn tri_bary(p: [Point; 3], y: Point) -> [f64; 3] {
    let twice = 2.0 * tri_area_signed(p[0], p[1], p[2]);
    let l1 = ((p[2][0] - p[0][0]) * (p[0][1] - y[1]) - (p[0][0] - y[0]) * (p[2][1] - p[0][1])) / twice;
    let l2 = ((p[0][0] - y[0]) * (p[1][1] - p[0][1]) - (p[1][0] - p[0][0]) * (p[0][1] - y[1])) / twice;
    [1.0 - l1 - l2, l1, l2]
}

/// Point location: binary search in 1D, a uniform bucket grid in 2D.
#[derive(Clone, Debug)]
enum Locator {
    Line { xs: Vec<f64> },
    Grid { origin: Point, cell: f64, nx: usize, ny: usize, buckets: Vec<Vec<usize>> },
}

impl Locator {
    fn new(dim: usize, nodes: &[Point], elements: &[[usize; 3]]) -> Self {
        if dim == 1 {
            // elements of an interval mesh are consecutive sorted nodes
            let mut xs: Vec<f64> = Vec::with_capacity(elements.len() + 1);
            for (k, e) in elements.iter().enumerate() {
                if k == 0 {
                    xs.push(nodes[e[0]][0]);
                }
                xs.push(nodes[e[1]][0]);
            }
            return Locator::Line { xs };
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in nodes {
            for c in 0..2 {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        let area = ((hi[0] - lo[0]) * (hi[1] - lo[1])).max(1e-300);
        let cell = (area / elements.len().max(1) as f64).sqrt() * 2.0;
        let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).max(1);
        let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (e, t) in elements.iter().enumerate() {
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for &v in t {
                for c in 0..2 {
                    a[c] = a[c].min(nodes[v][c]);
                    b[c] = b[c].max(nodes[v][c]);
                }
            }
            let i0 = (((a[0] - lo[0]) / cell).floor() as usize).min(nx - 1);
            let i1 = (((b[0] - lo[0]) / cell).floor() as usize).min(nx - 1);
            let j0 = (((a[1] - lo[1]) / cell).floor() as usize).min(ny - 1);
            let j1 = (((b[1] - lo[1]) / cell).floor() as usize).min(ny - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(e);
                }
            }
        }
        Locator::Grid { origin: lo, cell, nx, ny, buckets }
    }

    fn locate(&self, nodes: &[Point], elements: &[[usize; 3]], y: Point) -> Location {
        match self {
            Locator::Line { xs } => {
                let n = xs.len();
                let k = xs.partition_point(|&x| x <= y[0]);
                let e = k.saturating_sub(1).min(n - 2);
                let l = (y[0] - xs[e]) / (xs[e + 1] - xs[e]);
                Location { elem: e, bary: [1.0 - l, l, 0.0] }
            }
            Locator::Grid { origin, cell, nx, ny, buckets } => {
                let fi = ((y[0] - origin[0]) / cell).floor();
                let fj = ((y[1] - origin[1]) / cell).floor();
                let ci = fi.clamp(0.0, (*nx - 1) as f64) as isize;
                let cj = fj.clamp(0.0, (*ny - 1) as f64) as isize;
                let mut best: Option<(f64, Location)> = None;
                let mut ring = 0isize;
                loop {
                    for dj in -ring..=ring {
                        for di in -ring..=ring {
                            if di.abs() != ring && dj.abs() != ring {
                                continue;
                            }
                            let (i, j) = (ci + di, cj + dj);
                            if i < 0 || j < 0 || i >= *nx as isize || j >= *ny as isize {
                                continue;
                            }
                            for &e in &buckets[j as usize * nx + i as usize] {
                                let t = elements[e];
                                let b = tri_bary([nodes[t[0]], nodes[t[1]], nodes[t[2]]], y);
                                let m = b[0].min(b[1]).min(b[2]);
                                if m >= -1e-12 {
                                    return Location { elem: e, bary: b };
                                }
                                if best.as_ref().is_none_or(|(bm, _)| m > *bm) {
                                    best = Some((m, Location { elem: e, bary: b }));
                                }
                            }
                        }
                    }
                    ring += 1;
                    let exhausted = ring > (*nx).max(*ny) as isize;
                    if (best.is_some() && ring > 2) || exhausted {
                        break;
                    }
                }
                best.expect("mesh has no elements").1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localization::{LocalizationField, Mode};

    #[test]
    fn distances_and_normals() {
        let i = Domain::unit_interval();
        assert_eq!(i.dist_to_boundary([0.3, 0.0]).unwrap(), 0.3);
        assert_eq!(i.dist_to_boundary([0.0, 0.0]).unwrap(), 0.0);
        assert!(i.dist_to_boundary([1.5, 0.0]).is_err());
        assert_eq!(i.outward_normal([1.0, 0.0]).unwrap(), [1.0, 0.0]);
        assert_eq!(i.outward_normal([0.0, 0.0]).unwrap(), [-1.0, 0.0]);
        assert!(i.outward_normal([0.5, 0.0]).is_err());
        let d = Domain::unit_disk();
        assert!((d.dist_to_boundary([0.6, 0.0]).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(d.outward_normal([0.0, 1.0]).unwrap(), [0.0, 1.0]);
    }

    #[test]
    fn offset_distance_matches_direct() {
        let d = Domain::unit_disk();
        let x = [0.3, -0.4];
        let s = [1e-3, 2e-3];
        let direct = d.dist_to_boundary(add(x, s)).unwrap();
        assert!((d.dist_info_offset(x, s).dist - direct).abs() < 1e-15);
    }

    #[test]
    fn disk_mesh_is_valid() {
        let dom = Domain::unit_disk();
        let eta = LocalizationField::build(&dom, 0.05, 0.25, Mode::Quadratic).unwrap();
        let m = Mesh::build(&dom, 0.05, 0.02, 0.125, &eta).unwrap();
        for t in &m.elements {
            assert!(tri_area_signed(m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]]) > 0.0);
        }
        let total: f64 = m.weights.iter().sum();
        assert!((total - PI).abs() < 2e-2);
        for q in m.element_rule().iter().step_by(17) {
            let loc = m.locate(q.x);
            let b = loc.bary;
            assert!(b.iter().all(|&v| v >= -1e-9), "{b:?}");
        }
    }
}
