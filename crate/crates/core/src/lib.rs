//! Box dimensions of orbits near fixed points of discrete dynamical systems
//! and singularities of flows.
//!
//! Orbits converging to a hyperbolic fixed point have box dimension zero.
//! On a center manifold whose restricted map is `k`-nondegenerate, the orbit
//! dimension is `1 - 1/k`. The crate estimates these dimensions from generated
//! orbits and uses per-axis (projective) dimensions as a nonhyperbolicity
//! detector.
//!
//! Modules:
//! - [`expr`]: expression parsing, evaluation, symbolic derivatives, Taylor tables.
//! - [`dynsys`]: maps, flows, forward/inverse/unit-time orbits.
//! - [`boxdim`]: ε-neighborhood measures, box counting, dimension fits.
//! - [`manifolds`]: invariant-manifold series, restricted maps, nondegeneracy order.
//! - [`classify`]: spectra, hyperbolicity verdicts, the projective-dimension detector.
//! - [`syslib`]: catalog of reference systems, [`config`]: the system file format.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod boxdim;
pub mod classify;
pub mod config;
pub mod dynsys;
pub mod eigen;
pub mod error;
pub mod expr;
pub mod manifolds;
mod poly;
pub mod syslib;

pub use error::{Error, Result};
