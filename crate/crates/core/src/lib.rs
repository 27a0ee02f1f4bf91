//! Laguerre surface geometry in the cyclographic model.
//!
//! Builds the spectral (T-transform) family of an L-isothermic surface from
//! its Blaschke potential `e^u`: the middle Maurer–Cartan form is assembled
//! on a rectangular grid, integrated into Laguerre frames, and the resulting
//! L-Gauss maps are analysed as surfaces in Minkowski 4-space.
//!
//! Module map:
//!
//! * [`minkowski`]: metric, Laguerre group, Lie algebra, exponential.
//! * [`cyclographic`]: spheres, planes and contact elements as points,
//!   null hyperplanes and isotropic lines.
//! * [`grid`]: sampled fields on a rectangular chart and finite differences.
//! * [`blaschke`]: seed potentials, Liouville/Blaschke residuals, the Newton
//!   solver and the Laguerre invariants.
//! * [`frames`]: Maurer–Cartan assembly, flatness, frame integration and the
//!   Legendre lift.
//! * [`geometry`]: differentials, hyperplane/hyperquadric detection,
//!   constant mean curvature, Lawson tables, middle spheres and meshes.
//! * [`pipeline`]: one full deformation run with its verification report.

// `!(x <= tol)` is how NaN gets rejected; banded solves read best indexed.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod blaschke;
pub mod cyclographic;
pub mod error;
pub mod frames;
pub mod geometry;
pub mod grid;
pub mod minkowski;
pub mod pipeline;

pub use error::{Error, Result};
pub use minkowski::{Mat4, Vec4};
