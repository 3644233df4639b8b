//! Scalar fields: named analytic functions and piecewise-linear grid functions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{NlError, Result};
use crate::geometry::{add, dot, scale, sub, Domain, Mesh, Point};
use crate::quadrature::gauss_on;

/// Anything that can be evaluated together with its gradient.
pub trait Field: Sync {
    fn value(&self, x: Point) -> f64;
    fn grad(&self, x: Point) -> Point;

    /// u(x + s) − u(x), integrated along the segment to avoid cancellation
    /// when s is tiny compared with x.
    fn diff(&self, x: Point, s: Point) -> f64 {
        let (t, w) = segment_rule();
        let mut acc = 0.0;
        for (ti, wi) in t.iter().zip(w.iter()) {
            acc += wi * dot(self.grad(add(x, scale(s, *ti))), s);
        }
        acc
    }
}

fn segment_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    RULE.get_or_init(|| gauss_on(6, 0.0, 1.0))
}

/// Catalog of smooth test functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalyticFn {
    /// sin(πx₁)cos(πx₂); reduces to sin(πx) in 1D.
    SinPi,
    /// cos(πx) in 1D, cos(πx₁)cos(πx₂) in 2D.
    CosPi,
    /// |x|²/2.
    Quadratic,
    /// x₁².
    X1Squared,
    /// 1 + x₁ + x₂.
    Affine,
    /// Smooth compactly supported bump exp(1 − 1/(1 − |x−c|²/r²)).
    Bump {
        center: Point,
        radius: f64,
    },
    Constant {
        value: f64,
    },
    /// π² sin(πx), the load of the sine benchmark.
    SinPiLoad,
    /// π² cos(πx), the load of the cosine benchmark.
    CosPiLoad,
}

impl AnalyticFn {
    /// Looks up a catalog name; `bump` is centred in the domain with radius
    /// half the inradius.
    pub fn from_name(name: &str, domain: &Domain) -> Result<Self> {
        Ok(match name {
            "sin_pi" => AnalyticFn::SinPi,
            "cos_pi" => AnalyticFn::CosPi,
            "quadratic" => AnalyticFn::Quadratic,
            "x1_squared" => AnalyticFn::X1Squared,
            "affine" => AnalyticFn::Affine,
            "bump" => AnalyticFn::Bump { center: domain.centroid(), radius: 0.5 * domain.inradius() },
            "zero" => AnalyticFn::Constant { value: 0.0 },
            "one" => AnalyticFn::Constant { value: 1.0 },
            "sin_pi_load" => AnalyticFn::SinPiLoad,
            "cos_pi_load" => AnalyticFn::CosPiLoad,
            other => return Err(NlError::Parameter(format!("unknown function '{other}'"))),
        })
    }

    pub const NAMES: [&'static str; 10] =
        ["sin_pi", "cos_pi", "quadratic", "x1_squared", "affine", "bump", "zero", "one", "sin_pi_load", "cos_pi_load"];

    fn bump_parts(center: Point, radius: f64, x: Point) -> Option<(f64, f64, f64, Point)> {
        let v = sub(x, center);
        let q = dot(v, v) / (radius * radius);
        if q >= 1.0 {
            return None;
        }
        let om = 1.0 - q;
        let phi = (1.0 - 1.0 / om).exp();
        let d1 = -phi / (om * om);
        let d2 = phi * (1.0 / om.powi(4) - 2.0 / om.powi(3));
        Some((phi, d1, d2, v))
    }

    /// Laplacian of the function.
    pub fn laplacian(&self, x: Point, dim: usize) -> f64 {
        let pi2 = PI * PI;
        match self {
            AnalyticFn::SinPi | AnalyticFn::CosPi => -(dim as f64) * pi2 * self.value(x),
            AnalyticFn::SinPiLoad | AnalyticFn::CosPiLoad => -pi2 * self.value(x),
            AnalyticFn::Quadratic => dim as f64,
            AnalyticFn::X1Squared => 2.0,
            AnalyticFn::Affine | AnalyticFn::Constant { .. } => 0.0,
            AnalyticFn::Bump { center, radius } => match Self::bump_parts(*center, *radius, x) {
                None => 0.0,
                Some((_, d1, d2, v)) => {
                    let r2 = radius * radius;
                    d2 * 4.0 * dot(v, v) / (r2 * r2) + d1 * 2.0 * dim as f64 / r2
                }
            },
        }
    }
}

impl Field for AnalyticFn {
    fn value(&self, x: Point) -> f64 {
        let p = PI;
        match self {
            AnalyticFn::SinPi => (p * x[0]).sin() * (p * x[1]).cos(),
            AnalyticFn::CosPi => (p * x[0]).cos() * (p * x[1]).cos(),
            AnalyticFn::Quadratic => 0.5 * dot(x, x),
            AnalyticFn::X1Squared => x[0] * x[0],
            AnalyticFn::Affine => 1.0 + x[0] + x[1],
            AnalyticFn::Bump { center, radius } => Self::bump_parts(*center, *radius, x).map_or(0.0, |b| b.0),
            AnalyticFn::Constant { value } => *value,
            AnalyticFn::SinPiLoad => p * p * (p * x[0]).sin(),
            AnalyticFn::CosPiLoad => p * p * (p * x[0]).cos(),
        }
    }

    fn grad(&self, x: Point) -> Point {
        let p = PI;
        match self {
            AnalyticFn::SinPi => [p * (p * x[0]).cos() * (p * x[1]).cos(), -p * (p * x[0]).sin() * (p * x[1]).sin()],
            AnalyticFn::CosPi => [-p * (p * x[0]).sin() * (p * x[1]).cos(), -p * (p * x[0]).cos() * (p * x[1]).sin()],
            AnalyticFn::Quadratic => x,
            AnalyticFn::X1Squared => [2.0 * x[0], 0.0],
            AnalyticFn::Affine => [1.0, 1.0],
            AnalyticFn::Bump { center, radius } => match Self::bump_parts(*center, *radius, x) {
                None => [0.0, 0.0],
                Some((_, d1, _, v)) => scale(v, 2.0 * d1 / (radius * radius)),
            },
            AnalyticFn::Constant { .. } => [0.0, 0.0],
            AnalyticFn::SinPiLoad => [p * p * p * (p * x[0]).cos(), 0.0],
            AnalyticFn::CosPiLoad => [-p * p * p * (p * x[0]).sin(), 0.0],
        }
    }

    fn diff(&self, x: Point, s: Point) -> f64 {
        match self {
            AnalyticFn::Constant { .. } => 0.0,
            AnalyticFn::Quadratic => dot(x, s) + 0.5 * dot(s, s),
            AnalyticFn::X1Squared => s[0] * (2.0 * x[0] + s[0]),
            AnalyticFn::Affine => s[0] + s[1],
            _ => {
                let (t, w) = segment_rule();
                let mut acc = 0.0;
                for (ti, wi) in t.iter().zip(w.iter()) {
                    acc += wi * dot(self.grad(add(x, scale(s, *ti))), s);
                }
                acc
            }
        }
    }
}

impl AnalyticFn {
    /// Nodal samples on a mesh.
    pub fn sample(&self, mesh: &Mesh) -> Vec<f64> {
        mesh.nodes.iter().map(|&x| self.value(x)).collect()
    }
}

/// Nodal values on a mesh, interpreted as the P1 interpolant.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        GridFunction { values }
    }

    pub fn from_fn<F: Fn(Point) -> f64>(mesh: &Mesh, f: F) -> Self {
        GridFunction { values: mesh.nodes.iter().map(|&x| f(x)).collect() }
    }

    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.values.len() != mesh.n_nodes() {
            return Err(NlError::Data(format!(
                "grid function has {} values for {} nodes",
                self.values.len(),
                mesh.n_nodes()
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(NlError::Data(format!("non-finite value at node {i}")));
        }
        Ok(())
    }
}

impl std::ops::Deref for GridFunction {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// P1 interpolant viewed as a `Field`.
pub struct P1Field<'a> {
    pub mesh: &'a Mesh,
    pub values: &'a [f64],
}

impl<'a> Field for P1Field<'a> {
    fn value(&self, x: Point) -> f64 {
        self.mesh.interpolate(self.values, x)
    }

    fn grad(&self, x: Point) -> Point {
        let loc = self.mesh.locate(x);
        self.mesh.element_gradient(loc.elem, self.values)
    }

    fn diff(&self, x: Point, s: Point) -> f64 {
        let lx = self.mesh.locate(x);
        let y = add(x, s);
        let ly = self.mesh.locate(y);
        if lx.elem == ly.elem {
            dot(self.mesh.element_gradient(lx.elem, self.values), s)
        } else {
            self.mesh.interpolate(self.values, y) - self.mesh.interpolate(self.values, x)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_laplacian_matches_finite_differences() {
        let f = AnalyticFn::Bump { center: [0.1, -0.2], radius: 0.5 };
        let x = [0.25, -0.05];
        let h = 1e-4;
        let mut lap = 0.0;
        for e in [[h, 0.0], [0.0, h]] {
            lap += (f.value(add(x, e)) - 2.0 * f.value(x) + f.value(sub(x, e))) / (h * h);
        }
        assert!((lap - f.laplacian(x, 2)).abs() < 1e-5 * lap.abs().max(1.0));
    }

    #[test]
    fn diff_is_accurate_for_tiny_offsets() {
        let f = AnalyticFn::SinPi;
        let x = [1.0 - 1e-9, 0.0];
        let s = [-3e-10, 0.0];
        let exact = 2.0 * (PI * (x[0] + s[0] / 2.0)).cos() * (PI * s[0] / 2.0).sin();
        assert!((f.diff(x, s) - exact).abs() <= 1e-12 * exact.abs());
    }
}
