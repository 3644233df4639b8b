//! Radial kernel profiles and the two-point heterogeneous kernel.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{NlError, Result};
use crate::geometry::{add, dot, norm, scale, sub, Point};
use crate::localization::{LocalizationField, Mode};
use crate::quadrature::{integrate, BallRule};

const QUAD_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileFamily {
    /// (1 − (r/R0)²)^p
    PolyBump { p: f64 },
    /// Cubic Hermite interpolant of (r, ρ, ρ') samples on [0, R0].
    Tabulated { r: Vec<f64>, rho: Vec<f64>, drho: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelProfile {
    pub family: ProfileFamily,
    /// Support radius R0.
    pub support: f64,
    pub dim: usize,
    /// Normalization constant multiplying the raw shape.
    pub c: f64,
    /// Floor radius r0 = R0/2 and the value ρ(r0).
    pub floor_radius: f64,
    pub floor_value: f64,
}

/// Surface measure of the unit sphere in R^d.
fn sphere_measure(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => unreachable!(),
    }
}

impl KernelProfile {
    /// Builds a profile normalized so that ∫_{B(0,1)} |z|² ρ(|z|) dz = d.
    pub fn new(family: ProfileFamily, support: f64, dim: usize) -> Result<Self> {
        if !(support > 0.0 && support <= 0.95) {
            return Err(NlError::Parameter(format!("R0 must lie in (0, 0.95], got {support}")));
        }
        if dim != 1 && dim != 2 {
            return Err(NlError::Parameter(format!("dimension must be 1 or 2, got {dim}")));
        }
        match &family {
            ProfileFamily::PolyBump { p } => {
                if !(*p >= 2.0 && p.is_finite()) {
                    return Err(NlError::Parameter(format!("poly_bump power must be >= 2, got {p}")));
                }
            }
            ProfileFamily::Tabulated { r, rho, drho } => {
                let ok = r.len() >= 2
                    && r.len() == rho.len()
                    && r.len() == drho.len()
                    && r[0] == 0.0
                    && (r[r.len() - 1] - support).abs() < 1e-12
                    && r.windows(2).all(|w| w[1] > w[0])
                    && rho.iter().all(|&v| v >= 0.0)
                    && drho[0] == 0.0
                    && rho[rho.len() - 1] == 0.0
                    && drho[drho.len() - 1] == 0.0;
                if !ok {
                    return Err(NlError::Parameter(
                        "tabulated profile needs increasing r from 0 to R0, rho >= 0, rho'(0) = 0 and rho = rho' = 0 at R0".into(),
                    ));
                }
            }
        }
        let mut prof = KernelProfile { family, support, dim, c: 1.0, floor_radius: 0.5 * support, floor_value: 0.0 };
        let m2 = prof.radial_integral(|r| r.powi(dim as i32 + 1) * prof.raw(r))?;
        if !(m2 > 0.0) {
            return Err(NlError::Normalization("second moment of the raw profile is not positive".into()));
        }
        prof.c = dim as f64 / m2;
        prof.floor_value = prof.rho(prof.floor_radius);
        if !(prof.floor_value > 0.0) {
            return Err(NlError::Parameter("profile vanishes at the floor radius R0/2".into()));
        }
        Ok(prof)
    }

    /// Default profile: poly_bump, p = 2, R0 = 0.9.
    pub fn default_for(dim: usize) -> Self {
        Self::new(ProfileFamily::PolyBump { p: 2.0 }, 0.9, dim).expect("default profile is valid")
    }

    /// Copy whose values are multiplied by `factor` without renormalizing.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.c *= factor;
        out.floor_value *= factor;
        out
    }

    /// |S^{d−1}| ∫_0^{R0} f(r) dr.
    fn radial_integral<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let knots: Vec<f64> = match &self.family {
            ProfileFamily::Tabulated { r, .. } => r.clone(),
            _ => vec![0.0, self.support],
        };
        let mut total = 0.0;
        for w in knots.windows(2) {
            total += integrate(&f, w[0], w[1], QUAD_TOL)?;
        }
        Ok(sphere_measure(self.dim) * total)
    }

    fn hermite(&self, r: f64) -> (f64, f64) {
        let ProfileFamily::Tabulated { r: rs, rho, drho } = &self.family else { unreachable!() };
        let k = rs.partition_point(|&v| v <= r).saturating_sub(1).min(rs.len() - 2);
        let h = rs[k + 1] - rs[k];
        let t = (r - rs[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * rho[k]
            + (t3 - 2.0 * t2 + t) * h * drho[k]
            + (-2.0 * t3 + 3.0 * t2) * rho[k + 1]
            + (t3 - t2) * h * drho[k + 1];
        let dv = ((6.0 * t2 - 6.0 * t) * rho[k]
            + (3.0 * t2 - 4.0 * t + 1.0) * h * drho[k]
            + (-6.0 * t2 + 6.0 * t) * rho[k + 1]
            + (3.0 * t2 - 2.0 * t) * h * drho[k + 1])
            / h;
        (v, dv)
    }

    /// Unnormalized shape.
    fn raw(&self, r: f64) -> f64 {
        if r >= self.support {
            return 0.0;
        }
        match &self.family {
            ProfileFamily::PolyBump { p } => (1.0 - (r / self.support).powi(2)).powf(*p),
            ProfileFamily::Tabulated { .. } => self.hermite(r).0,
        }
    }

    fn raw_d(&self, r: f64) -> f64 {
        if r >= self.support {
            return 0.0;
        }
        match &self.family {
            ProfileFamily::PolyBump { p } => {
                let u = 1.0 - (r / self.support).powi(2);
                -2.0 * p * r / (self.support * self.support) * u.powf(p - 1.0)
            }
            ProfileFamily::Tabulated { .. } => self.hermite(r).1,
        }
    }

    pub fn rho(&self, r: f64) -> f64 {
        self.c * self.raw(r)
    }

    pub fn rho_prime(&self, r: f64) -> f64 {
        self.c * self.raw_d(r)
    }

    /// ρ̲(r) = −ρ'(r)/r, continuous at 0.
    pub fn rho_under(&self, r: f64) -> f64 {
        if r >= self.support {
            return 0.0;
        }
        match &self.family {
            ProfileFamily::PolyBump { p } => {
                let r0 = self.support;
                2.0 * self.c * p / (r0 * r0) * (1.0 - (r / r0).powi(2)).powf(p - 1.0)
            }
            ProfileFamily::Tabulated { r: rs, .. } => {
                let eps = 1e-6 * rs[1];
                let rr = r.max(eps);
                -self.rho_prime(rr) / rr
            }
        }
    }

    /// ∫_{B(0,1)} |z|² ρ(|z|) dz; equals d after normalization.
    pub fn second_moment(&self) -> Result<f64> {
        self.radial_integral(|r| r.powi(self.dim as i32 + 1) * self.rho(r))
    }

    /// Matrix ∫ z_i z_j ρ(|z|) dz (identity after normalization).
    pub fn isotropy_matrix(&self) -> [[f64; 2]; 2] {
        let rule = BallRule::new(self.dim, self.support, 64, 64);
        let mut m = [[0.0; 2]; 2];
        for (z, w) in rule.points.iter().zip(&rule.weights) {
            let v = w * self.rho(norm(*z));
            for i in 0..2 {
                for j in 0..2 {
                    m[i][j] += v * z[i] * z[j];
                }
            }
        }
        m
    }

    /// ρ̄ = ∫_{B(0,1)} ρ(|z|) dz.
    pub fn rho_bar(&self) -> Result<f64> {
        self.radial_integral(|r| r.powi(self.dim as i32 - 1) * self.rho(r))
    }

    /// ρ̲_d: 2∫_0^1 ρ̲ in 1D and 2πρ(0) in 2D.
    pub fn rho_under_d(&self) -> Result<f64> {
        match self.dim {
            1 => Ok(2.0 * integrate(&|r| self.rho_under(r), 0.0, self.support, QUAD_TOL)?),
            _ => Ok(2.0 * PI * self.rho(0.0)),
        }
    }

    /// Profile with the same shape re-normalized (undoes `scaled`).
    pub fn normalized(&self) -> Result<Self> {
        Self::new(self.family.clone(), self.support, self.dim)
    }

    /// C_ρ = ∫_{B(0,R0) ∩ {z_d > 0}} z_d ln((1+z_d)/(1−z_d)) ρ(|z|) dz with the
    /// current scale of the profile.
    pub fn c_rho_raw(&self) -> Result<f64> {
        let g = |t: f64| t * ((1.0 + t) / (1.0 - t)).ln();
        match self.dim {
            1 => integrate(&|z| g(z) * self.rho(z), 0.0, self.support, QUAD_TOL),
            _ => {
                let inner =
                    |r: f64| -> f64 { integrate(&|th: f64| g(r * th.sin()), 0.0, PI, 1e-13).unwrap_or(f64::NAN) };
                let v = integrate(&|r| r * self.rho(r) * inner(r), 0.0, self.support, 1e-12)?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(NlError::Normalization("angular quadrature for C_rho failed".into()))
                }
            }
        }
    }
}

/// Boundary factor of the Green's identity under linear localization,
/// computed from the normalized profile.
pub fn linear_mode_constant(profile: &KernelProfile) -> Result<f64> {
    let c = profile.normalized()?.c_rho_raw()?;
    if !(c > 1.0) {
        return Err(NlError::Normalization(format!("C_rho = {c} is not larger than 1")));
    }
    Ok(c)
}

/// ρ_{δ,α}(x,y) = ½[η(x)^{-d-α} ρ(|y−x|/η(x)) + η(y)^{-d-α} ρ(|y−x|/η(y))].
#[derive(Clone, Debug)]
pub struct TwoPointKernel {
    pub profile: KernelProfile,
    pub eta: LocalizationField,
    pub alpha: f64,
}

impl TwoPointKernel {
    pub fn new(profile: KernelProfile, eta: LocalizationField, alpha: f64) -> Result<Self> {
        if profile.dim != eta.domain().dim() {
            return Err(NlError::Parameter("kernel and domain dimensions differ".into()));
        }
        if !(alpha >= 0.0) {
            return Err(NlError::Parameter(format!("alpha must be >= 0, got {alpha}")));
        }
        if eta.comparability_eps(profile.support) >= 1.0 {
            return Err(NlError::Parameter(format!(
                "R0·kappa1 scaling {} must stay below 1",
                eta.comparability_eps(profile.support)
            )));
        }
        if eta.mode == Mode::Linear && profile.support * eta.kappa1 >= 1.0 {
            return Err(NlError::Parameter("linear localization needs R0·kappa1 < 1".into()));
        }
        Ok(TwoPointKernel { profile, eta, alpha })
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        TwoPointKernel { alpha, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.profile.dim
    }

    /// Scaled profile η^{-d-α} ρ(r/η).
    pub fn scaled_rho(&self, eta: f64, r: f64) -> f64 {
        eta.powf(-(self.dim() as f64) - self.alpha) * self.profile.rho(r / eta)
    }

    /// Scaled derived profile η^{-d-α} ρ̲(r/η).
    pub fn scaled_rho_under(&self, eta: f64, r: f64) -> f64 {
        eta.powf(-(self.dim() as f64) - self.alpha) * self.profile.rho_under(r / eta)
    }

    fn horizons(&self, x: Point, y: Point) -> Result<(crate::localization::EtaEval, crate::localization::EtaEval)> {
        let ex = self.eta.eval(x)?;
        let ey = self.eta.eval(y)?;
        if !(ex.value > 0.0) {
            return Err(NlError::SingularHorizon { point: x });
        }
        if !(ey.value > 0.0) {
            return Err(NlError::SingularHorizon { point: y });
        }
        Ok((ex, ey))
    }

    pub fn eval(&self, x: Point, y: Point) -> Result<f64> {
        let (ex, ey) = self.horizons(x, y)?;
        let r = norm(sub(y, x));
        Ok(0.5 * (self.scaled_rho(ex.value, r) + self.scaled_rho(ey.value, r)))
    }

    /// ∇_x ρ_{δ,α}(x, y).
    pub fn grad_x(&self, x: Point, y: Point) -> Result<Point> {
        let (ex, ey) = self.horizons(x, y)?;
        let d = sub(y, x);
        let r2 = dot(d, d);
        let r = r2.sqrt();
        let (hx, hy) = (ex.value, ey.value);
        let ux = self.scaled_rho_under(hx, r);
        let uy = self.scaled_rho_under(hy, r);
        let radial = 0.5 * (ux / (hx * hx) + uy / (hy * hy));
        let drift =
            r2 / (2.0 * hx.powi(3)) * ux - (self.dim() as f64 + self.alpha) / (2.0 * hx) * self.scaled_rho(hx, r);
        Ok(add(scale(d, radial), scale(ex.grad, drift)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_bump_normalization_1d() {
        let p = KernelProfile::default_for(1);
        assert!((p.c - 9.002057613168672).abs() < 1e-9, "{}", p.c);
        assert!((p.second_moment().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(p.rho(0.9), 0.0);
    }

    #[test]
    fn rho_under_closed_form() {
        let p = KernelProfile::default_for(1);
        for r in [0.0, 0.3, 0.7] {
            let expect = 4.0 * p.c / 0.81 * (1.0 - r * r / 0.81);
            assert!((p.rho_under(r) - expect).abs() < 1e-12);
        }
        assert_eq!(p.rho_under(0.9), 0.0);
        let p2 = KernelProfile::default_for(2);
        assert!((p2.rho_under_d().unwrap() - 2.0 * PI * p2.rho(0.0)).abs() < 1e-10);
    }
}
