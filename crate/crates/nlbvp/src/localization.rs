//! The heterogeneous localization field η_δ and checks of its assumptions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{NlError, Result};
use crate::geometry::{add, norm, scale, sym_norm, Domain, Mat2, Mesh, NodeGrid, Point, ZERO_MAT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// η = dist² in the collar, δ in the interior.
    Quadratic,
    /// η = dist in the collar, δ in the interior.
    Linear,
    /// η ≡ δ everywhere.
    Constant,
}

/// Safety factor applied to sampled constants so that recorded bounds are
/// strict upper bounds of the realized field.
const CONSTANT_INFLATION: f64 = 1.01;

/// C² transition G on [a, b] in the scaled distance τ: matches the collar
/// branch at τ = a (value, slope, curvature) and reaches 1 with zero slope
/// and curvature at τ = b. G'' is piecewise linear on a few knots.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    a: f64,
    b: f64,
    knots: Vec<f64>,
    g2: Vec<f64>,
    g1: Vec<f64>,
    g0: Vec<f64>,
}

impl Transition {
    fn knots_for(a: f64, b: f64, slope: f64, curv: f64, c1: f64, w: f64, wp: f64) -> (Vec<f64>, Vec<f64>) {
        let mut ks = vec![a];
        let mut ys = vec![curv];
        if curv != 0.0 {
            ks.push(a + w);
            ys.push(0.0);
        }
        ks.push(c1);
        ys.push(0.0);
        let mut gp = slope;
        for i in 0..ks.len() - 1 {
            gp += 0.5 * (ys[i] + ys[i + 1]) * (ks[i + 1] - ks[i]);
        }
        let s = gp / (b - c1 - wp);
        ks.extend([c1 + wp, b - wp, b]);
        ys.extend([-s, -s, 0.0]);
        (ks, ys)
    }

    fn integrate(ks: &[f64], ys: &[f64], value: f64, slope: f64) -> (Vec<f64>, Vec<f64>) {
        let mut g0 = vec![value];
        let mut g1 = vec![slope];
        let (mut g, mut gp) = (value, slope);
        for i in 0..ks.len() - 1 {
            let h = ks[i + 1] - ks[i];
            let m = (ys[i + 1] - ys[i]) / h;
            g += gp * h + ys[i] * h * h / 2.0 + m * h.powi(3) / 6.0;
            gp += ys[i] * h + m * h * h / 2.0;
            g0.push(g);
            g1.push(gp);
        }
        (g0, g1)
    }

    /// Builds the transition starting at `a` with the given value, slope
    /// and curvature, rising to 1 over a length chosen near `length`.
    pub fn new(a: f64, value: f64, slope: f64, curv: f64, length: f64) -> Result<Self> {
        let mut scales = vec![1.0];
        for k in 1..12 {
            scales.push(1.25f64.powi(k));
            scales.push(0.8f64.powi(k));
        }
        for sc in scales {
            let len = length * sc;
            let (w, wp) = (0.02 * len, 0.1 * len);
            let b = a + len;
            let end = |c1: f64| {
                let (ks, ys) = Self::knots_for(a, b, slope, curv, c1, w, wp);
                *Self::integrate(&ks, &ys, value, slope).0.last().unwrap()
            };
            let mut lo = a + if curv != 0.0 { w } else { 0.0 } + 1e-12;
            let mut hi = b - 2.0 * wp - 1e-12;
            if !(end(lo) <= 1.0 && end(hi) >= 1.0) {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if end(mid) < 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (knots, g2) = Self::knots_for(a, b, slope, curv, lo, w, wp);
            let (g0, g1) = Self::integrate(&knots, &g2, value, slope);
            return Ok(Transition { a, b, knots, g2, g1, g0 });
        }
        Err(NlError::Parameter(format!("no admissible transition profile from value {value} with slope {slope}")))
    }

    pub fn start(&self) -> f64 {
        self.a
    }

    pub fn end(&self) -> f64 {
        self.b
    }

    /// (G, G', G'') at τ ∈ [a, b].
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        if t >= self.b {
            return (1.0, 0.0, 0.0);
        }
        let i = self.knots.partition_point(|&k| k <= t).saturating_sub(1).min(self.knots.len() - 2);
        let x = t - self.knots[i];
        let h = self.knots[i + 1] - self.knots[i];
        let m = (self.g2[i + 1] - self.g2[i]) / h;
        (
            self.g0[i] + self.g1[i] * x + self.g2[i] * x * x / 2.0 + m * x.powi(3) / 6.0,
            self.g1[i] + self.g2[i] * x + m * x * x / 2.0,
            self.g2[i] + m * x,
        )
    }
}

/// Value, gradient and Hessian of η at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaEval {
    pub value: f64,
    pub grad: Point,
    pub hess: Mat2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationField {
    domain: Domain,
    pub delta: f64,
    pub kappa0: f64,
    pub mode: Mode,
    pub kappa1: f64,
    pub kappa2: f64,
    /// None in constant mode, where the upper bound by dist² cannot hold.
    pub kappa_bar0: Option<f64>,
    pub delta0: f64,
    transition: Option<Transition>,
}

/// Raw sampled suprema of the realized field.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SampledConstants {
    pub grad_sup: f64,
    pub hess_sup: f64,
    pub ratio_sup: f64,
}

impl LocalizationField {
    /// Builds η_δ for `domain` and rejects inadmissible δ.
    pub fn build(domain: &Domain, delta: f64, kappa0: f64, mode: Mode) -> Result<Self> {
        let field = Self::build_unchecked(domain, delta, kappa0, mode)?;
        if delta >= field.delta0 {
            let (k1, kb) = field.delta0_candidates();
            return Err(NlError::Admissibility { delta, delta0: field.delta0, by_kappa1: k1, by_kappa_bar0: kb });
        }
        let collar = field.collar_width();
        if collar >= domain.inradius() {
            return Err(NlError::CollarTooWide { collar, inradius: domain.inradius() });
        }
        Ok(field)
    }

    /// Same as `build` without the admissibility checks on δ.
    pub fn build_unchecked(domain: &Domain, delta: f64, kappa0: f64, mode: Mode) -> Result<Self> {
        domain.validate()?;
        if !(kappa0 > 0.0 && kappa0 < 1.0) {
            return Err(NlError::Parameter(format!("kappa0 must lie in (0,1), got {kappa0}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(NlError::Parameter(format!("delta must be positive, got {delta}")));
        }
        let transition = match mode {
            Mode::Quadratic => {
                let a = kappa0.sqrt();
                Some(Transition::new(a, kappa0, 2.0 * a, 2.0, 1.0)?)
            }
            Mode::Linear => Some(Transition::new(kappa0, kappa0, 1.0, 0.0, 1.0)?),
            Mode::Constant => None,
        };
        let mut field = LocalizationField {
            domain: domain.clone(),
            delta,
            kappa0,
            mode,
            kappa1: 0.0,
            kappa2: 0.0,
            kappa_bar0: None,
            delta0: 1.0,
            transition,
        };
        if mode != Mode::Constant {
            let s = field.sample_constants(20_001);
            field.kappa1 = CONSTANT_INFLATION * s.grad_sup;
            field.kappa2 = CONSTANT_INFLATION * s.hess_sup;
            field.kappa_bar0 = Some(CONSTANT_INFLATION * s.ratio_sup);
            let (k1, kb) = field.delta0_candidates();
            field.delta0 = 1f64.min(k1).min(kb);
        }
        Ok(field)
    }

    fn delta0_candidates(&self) -> (f64, f64) {
        let by_k1 = if self.kappa1 > 0.0 { 1.0 / (9.0 * self.kappa1 * self.kappa1) } else { f64::INFINITY };
        let by_kb = self.kappa_bar0.map_or(f64::INFINITY, |k| 1.0 / (2.0 * k * k));
        (by_k1, by_kb)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// The nominal bound 2/κ₀ − 1 for η/min(δ, dist²) from the abstract construction.
    pub fn kappa_bar0_nominal(&self) -> f64 {
        2.0 / self.kappa0 - 1.0
    }

    /// Distance scale of the collar variable: √δ (quadratic) or δ (linear).
    fn scale_len(&self) -> f64 {
        match self.mode {
            Mode::Quadratic => self.delta.sqrt(),
            _ => self.delta,
        }
    }

    /// Distance from the boundary beyond which η ≡ δ.
    pub fn collar_width(&self) -> f64 {
        self.transition.as_ref().map_or(0.0, |t| t.end() * self.scale_len())
    }

    /// Relative comparability radius ε with (1−ε)η(x) ≤ η(y) ≤ (1+ε)η(x)
    /// whenever |x−y| ≤ R0·η(x).
    pub fn comparability_eps(&self, r0: f64) -> f64 {
        match self.mode {
            Mode::Quadratic => self.kappa1 * r0 * self.delta.sqrt(),
            Mode::Linear => self.kappa1 * r0,
            Mode::Constant => 0.0,
        }
    }

    /// Profile pieces as functions of distance: (η, dη/dd, d²η/dd²).
    pub fn profile(&self, d: f64) -> (f64, f64, f64) {
        let delta = self.delta;
        match (&self.transition, self.mode) {
            (Some(t), Mode::Quadratic) => {
                let sq = delta.sqrt();
                let tau = d / sq;
                if tau <= t.start() {
                    (d * d, 2.0 * d, 2.0)
                } else {
                    let (g, g1, g2) = t.eval(tau);
                    (delta * g, sq * g1, g2)
                }
            }
            (Some(t), Mode::Linear) => {
                let tau = d / delta;
                if tau <= t.start() {
                    (d, 1.0, 0.0)
                } else {
                    let (g, g1, g2) = t.eval(tau);
                    (delta * g, g1, g2 / delta)
                }
            }
            _ => (delta, 0.0, 0.0),
        }
    }

    pub fn eta_of_dist(&self, d: f64) -> f64 {
        self.profile(d).0
    }

    fn compose(&self, info: crate::geometry::DistInfo) -> EtaEval {
        let (v, d1, d2) = self.profile(info.dist);
        if d1 == 0.0 && d2 == 0.0 {
            return EtaEval { value: v, grad: [0.0, 0.0], hess: ZERO_MAT };
        }
        let n = info.grad;
        let h = info.hess;
        EtaEval {
            value: v,
            grad: scale(n, d1),
            hess: [
                [d2 * n[0] * n[0] + d1 * h[0][0], d2 * n[0] * n[1] + d1 * h[0][1]],
                [d2 * n[1] * n[0] + d1 * h[1][0], d2 * n[1] * n[1] + d1 * h[1][1]],
            ],
        }
    }

    /// η, ∇η, ∇²η at `x` ∈ Ω̄.
    pub fn eval(&self, x: Point) -> Result<EtaEval> {
        if !self.domain.contains(x) {
            return Err(NlError::DomainMembership { point: x });
        }
        Ok(self.compose(self.domain.dist_info(x)))
    }

    /// η at `x + s`, with the distance computed from the offset.
    pub fn eval_offset(&self, x: Point, s: Point) -> EtaEval {
        self.compose(self.domain.dist_info_offset(x, s))
    }

    /// Dense sampling of the realized profile over the collar.
    pub fn sample_constants(&self, samples: usize) -> SampledConstants {
        let upper = (self.collar_width() * 1.05).min(self.domain.inradius());
        let r = self.domain.inradius();
        let mut out = SampledConstants { grad_sup: 0.0, hess_sup: 0.0, ratio_sup: 0.0 };
        for k in 1..=samples {
            let d = upper * k as f64 / samples as f64;
            let (v, d1, d2) = self.profile(d);
            let tangential = match self.domain {
                Domain::Disk { .. } => (d1 / (r - d)).abs(),
                _ => 0.0,
            };
            let (g, h, bound) = match self.mode {
                Mode::Quadratic => (d1.abs() / self.delta.sqrt(), d2.abs().max(tangential), self.delta.min(d * d)),
                Mode::Linear => (d1.abs(), (d2.abs().max(tangential)) * self.delta, self.delta.min(d)),
                Mode::Constant => (0.0, 0.0, self.delta),
            };
            out.grad_sup = out.grad_sup.max(g);
            out.hess_sup = out.hess_sup.max(h);
            out.ratio_sup = out.ratio_sup.max(v / bound);
        }
        out
    }
}

/// Outcome of one assumption check.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AssumptionCheck {
    pub pass: bool,
    pub margin: f64,
    pub witness_point: Option<Point>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct LocalizationReport {
    #[serde(flatten)]
    pub checks: BTreeMap<String, AssumptionCheck>,
}

impl LocalizationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.values().all(|c| c.pass)
    }

    pub fn min_margin(&self) -> f64 {
        self.checks.values().map(|c| c.margin).fold(f64::INFINITY, f64::min)
    }
}

/// Running minimum of a margin with the point attaining it.
struct Tracker {
    margin: f64,
    witness: Option<Point>,
}

impl Tracker {
    fn new() -> Self {
        Tracker { margin: f64::INFINITY, witness: None }
    }

    fn see(&mut self, margin: f64, at: Point) {
        if margin < self.margin || self.witness.is_none() {
            self.margin = margin.min(self.margin);
            self.witness = Some(at);
        }
    }

    fn finish(self) -> AssumptionCheck {
        let margin = if self.margin.is_finite() { self.margin } else { 1.0 };
        AssumptionCheck { pass: margin > 0.0, margin, witness_point: self.witness }
    }
}

/// Checks the localization assumptions, the horizon comparability bound and the
/// boundary-layer inclusion on the nodes of `mesh` and on sampled points
/// inside each node's horizon.
pub fn check_localization_assumptions(eta: &LocalizationField, mesh: &Mesh, r0: f64) -> LocalizationReport {
    check_localization_assumptions_with(eta, mesh, r0, |x| eta.eval(x).expect("mesh node inside domain"))
}

/// Variant taking an explicit evaluator for η, for probing modified fields
/// against the constants recorded in `eta`.
pub fn check_localization_assumptions_with<F>(
    eta: &LocalizationField,
    mesh: &Mesh,
    r0: f64,
    eval: F,
) -> LocalizationReport
where
    F: Fn(Point) -> EtaEval,
{
    let dom = eta.domain();
    let delta = eta.delta;
    let tol = 1e-12 * delta;
    let mut t_i = Tracker::new();
    let mut t_ii = Tracker::new();
    let mut t_grad = Tracker::new();
    let mut t_hess = Tracker::new();
    let mut t_iv = Tracker::new();
    let mut t_iv_nominal = Tracker::new();
    let mut t_cmp = Tracker::new();
    let mut t_layer = Tracker::new();
    let eps = eta.comparability_eps(r0);
    let kb = eta.kappa_bar0.unwrap_or(f64::INFINITY);
    let layer_factor = match eta.mode {
        Mode::Quadratic => 1.0 + kb * r0 * delta.sqrt(),
        Mode::Linear => 1.0 + kb * r0,
        Mode::Constant => f64::INFINITY,
    };

    let sample_dirs: Vec<Point> = match dom.dim() {
        1 => [-1.0, -0.5, 0.5, 1.0].iter().map(|&t| [t, 0.0]).collect(),
        _ => (0..8)
            .flat_map(|k| {
                let th = std::f64::consts::PI * k as f64 / 4.0;
                [0.5, 1.0].map(|r| [r * th.cos(), r * th.sin()])
            })
            .collect(),
    };

    let mut probes: Vec<Point> = mesh.nodes.clone();
    // densify the collar, where mesh nodes are sparse relative to the horizon
    let collar = eta.collar_width().max(mesh.h_max);
    let centre = dom.centroid();
    for k in 1..=400 {
        let d = collar * (k as f64 / 400.0).powi(2);
        match *dom {
            Domain::Interval { a, b } => {
                probes.push([a + d, 0.0]);
                probes.push([b - d, 0.0]);
            }
            Domain::Disk { radius, .. } => {
                let th = 0.37 + 2.399963 * k as f64;
                probes.push(add(centre, scale([th.cos(), th.sin()], radius - d)));
            }
        }
    }

    for &x in &probes {
        let d = dom.dist_to_boundary(x).unwrap_or(0.0);
        if d <= 0.0 {
            continue;
        }
        let e = eval(x);
        let (collar_target, collar_cond, interior_cond) = match eta.mode {
            Mode::Quadratic => (d * d, d * d < eta.kappa0 * delta, eta.kappa0 * d * d > delta),
            Mode::Linear => (d, d < eta.kappa0 * delta, eta.kappa0 * d > delta),
            Mode::Constant => (delta, false, true),
        };
        if collar_cond {
            t_i.see(1.0 - (e.value - collar_target).abs() / tol, x);
        }
        if interior_cond {
            t_ii.see(1.0 - (e.value - delta).abs() / tol, x);
        }
        if eta.mode != Mode::Constant {
            let g = norm(e.grad);
            let gbound = match eta.mode {
                Mode::Quadratic => eta.kappa1 * delta.sqrt(),
                _ => eta.kappa1,
            };
            t_grad.see(1.0 - g / gbound, x);
            let hbound = match eta.mode {
                Mode::Quadratic => eta.kappa2,
                _ => eta.kappa2 / delta,
            };
            t_hess.see(1.0 - sym_norm(&e.hess) / hbound, x);
            let m = match eta.mode {
                Mode::Quadratic => delta.min(d * d),
                _ => delta.min(d),
            };
            t_iv.see(1.0 - e.value / (kb * m), x);
            t_iv_nominal.see(1.0 - e.value / (eta.kappa_bar0_nominal() * m), x);
        }

        // comparability and layer inclusion over sampled partners in the horizon
        let reach = r0 * e.value;
        for w in &sample_dirs {
            let y = add(x, scale(*w, reach));
            if !dom.contains(y) {
                continue;
            }
            let ey = eval(y);
            t_cmp.see(comparability_margin(ey.value / e.value, eps), x);
            if layer_factor.is_finite() {
                let dy = dom.dist_to_boundary(y).unwrap_or(0.0);
                t_layer.see(1.0 - dy / (d * layer_factor), x);
            }
        }
    }

    // node pairs inside the horizon
    let grid = NodeGrid::new(&mesh.nodes, mesh.h_max.max(r0 * delta));
    for (i, &x) in mesh.nodes.iter().enumerate() {
        if mesh.is_boundary(i) {
            continue;
        }
        let e = eval(x);
        let reach = r0 * e.value;
        for j in grid.within(&mesh.nodes, x, reach) {
            if j == i {
                continue;
            }
            if mesh.is_boundary(j) {
                continue;
            }
            let ey = eval(mesh.nodes[j]);
            t_cmp.see(comparability_margin(ey.value / e.value, eps), x);
        }
    }

    let mut checks = BTreeMap::new();
    let admissible =
        AssumptionCheck { pass: delta < eta.delta0, margin: 1.0 - delta / eta.delta0, witness_point: None };
    checks.insert("admissible_delta".to_string(), admissible);
    checks.insert("i_collar_profile".to_string(), t_i.finish());
    checks.insert("ii_interior_constant".to_string(), t_ii.finish());
    if eta.mode != Mode::Constant {
        checks.insert("iii_gradient_bound".to_string(), t_grad.finish());
        checks.insert("iii_hessian_bound".to_string(), t_hess.finish());
        checks.insert("iv_upper_bound".to_string(), t_iv.finish());
        checks.insert("iv_upper_bound_nominal".to_string(), t_iv_nominal.finish());
        checks.insert("layer_inclusion".to_string(), t_layer.finish());
    }
    checks.insert("comparability".to_string(), t_cmp.finish());
    LocalizationReport { checks }
}

/// Relative slack of a two-point horizon ratio against (1 ± ε).
fn comparability_margin(ratio: f64, eps: f64) -> f64 {
    let dev = (ratio - 1.0).abs();
    if eps > 0.0 {
        1.0 - dev / eps
    } else if dev == 0.0 {
        1.0
    } else {
        -dev
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transition_is_c2_and_reaches_one() {
        let t = Transition::new(0.5, 0.25, 1.0, 2.0, 1.0).unwrap();
        let (g, g1, g2) = t.eval(0.5);
        assert!((g - 0.25).abs() < 1e-14 && (g1 - 1.0).abs() < 1e-14 && (g2 - 2.0).abs() < 1e-14);
        let (g, g1, g2) = t.eval(t.end() - 1e-12);
        assert!((g - 1.0).abs() < 1e-9 && g1.abs() < 1e-9 && g2.abs() < 1e-9);
    }

    #[test]
    fn quadratic_field_examples() {
        let dom = Domain::unit_interval();
        let eta = LocalizationField::build(&dom, 1e-3, 0.25, Mode::Quadratic).unwrap();
        assert_eq!(eta.eval([0.5, 0.0]).unwrap().value, 1e-3);
        let e = eta.eval([0.01, 0.0]).unwrap();
        assert!((e.value - 1e-4).abs() < 1e-18);
        assert!((e.grad[0] - 0.02).abs() < 1e-15);
        assert!((e.hess[0][0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn admissibility_threshold() {
        let dom = Domain::unit_interval();
        let eta = LocalizationField::build(&dom, 0.1, 0.25, Mode::Quadratic).unwrap();
        assert!(eta.delta0 > 0.1 && eta.delta0 < 0.11, "{}", eta.delta0);
        let err = LocalizationField::build(&dom, 0.2, 0.25, Mode::Quadratic).unwrap_err();
        assert!(matches!(err, NlError::Admissibility { .. }));
        assert!(LocalizationField::build(&dom, 0.1, 1.2, Mode::Quadratic).is_err());
    }
}
