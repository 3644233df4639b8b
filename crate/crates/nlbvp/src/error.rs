use serde::Serialize;
use thiserror::Error;

use crate::geometry::Point;

/// Broad failure class; the CLI maps these onto process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    Validation,
    Solver,
    Resolution,
}

#[derive(Debug, Error)]
pub enum NlError {
    #[error("point {point:?} lies outside the closed domain")]
    DomainMembership { point: Point },

    #[error("point {point:?} is not on the boundary")]
    NotOnBoundary { point: Point },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error(
        "delta = {delta} is not admissible (delta0 = {delta0}; candidates 1, 1/(9 kappa1^2) = {by_kappa1}, 1/(2 kappa_bar0^2) = {by_kappa_bar0})"
    )]
    Admissibility { delta: f64, delta0: f64, by_kappa1: f64, by_kappa_bar0: f64 },

    #[error("transition collar of width {collar} does not fit inside the domain (inradius {inradius})")]
    CollarTooWide { collar: f64, inradius: f64 },

    #[error("kernel evaluated at a boundary point {point:?} where the horizon vanishes")]
    SingularHorizon { point: Point },

    #[error("normalization quadrature did not converge: {0}")]
    Normalization(String),

    #[error("mesh too coarse for the horizon at node {node} ({neighbors} neighbours)")]
    Resolution { node: usize, neighbors: usize },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    Solver { iterations: usize, residual: f64, history: Vec<f64> },

    #[error("Neumann data violate compatibility: defect {defect:e} exceeds tolerance {tolerance:e}")]
    Compatibility { defect: f64, tolerance: f64 },

    #[error("data error: {0}")]
    Data(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl NlError {
    pub fn class(&self) -> ErrorClass {
        match self {
            NlError::Solver { .. } => ErrorClass::Solver,
            NlError::Resolution { .. } => ErrorClass::Resolution,
            _ => ErrorClass::Validation,
        }
    }

    /// Short stable identifier for machine-readable error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            NlError::DomainMembership { .. } => "domain_membership",
            NlError::NotOnBoundary { .. } => "not_on_boundary",
            NlError::Parameter(_) => "parameter",
            NlError::Admissibility { .. } => "admissibility",
            NlError::CollarTooWide { .. } => "collar_too_wide",
            NlError::SingularHorizon { .. } => "singular_horizon",
            NlError::Normalization(_) => "normalization",
            NlError::Resolution { .. } => "resolution",
            NlError::Mesh(_) => "mesh",
            NlError::Solver { .. } => "solver",
            NlError::Compatibility { .. } => "compatibility",
            NlError::Data(_) => "data",
            NlError::Io(_) => "io",
            NlError::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, NlError>;
