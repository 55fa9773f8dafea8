//! High-order signed distance fields for two-phase volumetric images.
//!
//! The pipeline turns a density image `ρ` into an implicit surface
//! `ψ = T - Gσ * ρ`, solves the distance to the zero level set of `ψ` on a
//! narrow band with a collinear closest-point iteration through a cubic
//! B-spline interpolant, extends it to the whole grid with fast sweeping,
//! and measures phase densities and surface morphometry directly from the
//! resulting embedding `φ`.

pub mod error;
pub mod interp;
pub mod mesh;
pub mod morpho;
pub mod narrowband;
pub mod phantom;
pub mod phases;
pub mod study;
pub mod sweep;
pub mod volume;

pub use error::{Error, Result};
pub use interp::SplineInterpolant;
pub use volume::{GridGeometry, MaskField, ScalarField, Vec3};
