//! Heterogeneously localized nonlocal diffusion: operators, Galerkin
//! assembly, boundary-value solvers and verification studies.

pub mod assembly;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod localization;
pub mod mollify;
pub mod operator;
pub mod quadrature;
pub mod solvers;
pub mod verify;

pub use error::{NlError, Result};
pub use field::{AnalyticFn, Field, GridFunction};
pub use geometry::{Domain, Mesh, Point};
pub use kernels::{KernelProfile, ProfileFamily, TwoPointKernel};
pub use localization::{LocalizationField, Mode};
pub use operator::{InnerResolution, NodalOperator};
