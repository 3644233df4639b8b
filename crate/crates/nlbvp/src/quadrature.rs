//! Gauss rules, reference-ball rules and adaptive integration.

use std::f64::consts::PI;

use crate::error::{NlError, Result};
use crate::geometry::Point;

/// Legendre polynomial P_n and its derivative at `z`.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// Gauss-Legendre nodes (ascending) and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss-Legendre rule mapped to [a, b].
pub fn gauss_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| v * half).collect())
}

/// Quadrature rule on the ball of radius `radius` centred at the origin in
/// dimension `dim` (1 or 2).
#[derive(Clone, Debug)]
pub struct BallRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl BallRule {
    /// Gauss-Legendre on [-R, R] in 1D; radial Gauss times uniform angles in 2D.
    pub fn new(dim: usize, radius: f64, n_radial: usize, n_angular: usize) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        match dim {
            1 => {
                let (x, w) = gauss_on(2 * n_radial, -radius, radius);
                for (xi, wi) in x.into_iter().zip(w) {
                    points.push([xi, 0.0]);
                    weights.push(wi);
                }
            }
            2 => {
                let (r, wr) = gauss_on(n_radial, 0.0, radius);
                let dth = 2.0 * PI / n_angular as f64;
                for (ri, wi) in r.iter().zip(&wr) {
                    for k in 0..n_angular {
                        let th = (k as f64 + 0.5) * dth;
                        points.push([ri * th.cos(), ri * th.sin()]);
                        weights.push(wi * ri * dth);
                    }
                }
            }
            _ => panic!("unsupported dimension {dim}"),
        }
        BallRule { points, weights }
    }
}

/// Adaptive Gauss-Legendre integration of `f` over [a, b]: a panel is
/// accepted when its 10-point value agrees with the sum over its halves.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (x, w) = gauss_legendre(10);
    let panel = |lo: f64, hi: f64| -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        x.iter().zip(&w).map(|(t, wt)| wt * f(mid + half * t)).sum::<f64>() * half
    };
    let mut total = 0.0;
    let mut stack = vec![(a, b, panel(a, b), 0usize)];
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = panel(lo, mid);
        let right = panel(mid, hi);
        let err = (left + right - whole).abs();
        if err <= tol * (hi - lo) / (b - a) || (hi - lo) < 1e-14 * (b - a).abs() {
            total += left + right;
        } else if depth >= 60 {
            return Err(NlError::Normalization(format!(
                "adaptive quadrature stalled on [{lo}, {hi}] with error {err:e}"
            )));
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok(total)
}

/// Degree-2 three-point rule on a triangle, as barycentric coordinates with
/// weights relative to the triangle area.
pub const TRIANGLE_RULE: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(t, wt)| wt * t.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ball_rule_measures_disk() {
        let rule = BallRule::new(2, 0.5, 8, 12);
        let area: f64 = rule.weights.iter().sum();
        assert!((area - PI * 0.25).abs() < 1e-13);
        let m2: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[0] * p[0]).sum();
        assert!((m2 - PI * 0.5f64.powi(4) / 4.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_kinks() {
        let v = integrate(&|x: f64| x.abs().sqrt(), -1.0, 1.0, 1e-12).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-9);
    }
}
