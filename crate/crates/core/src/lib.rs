//! Numerical solution of the Beltrami equation on the unit disk.
//!
//! A prescribed Beltrami derivative `mu` is pulled back to logarithmic
//! coordinates, discretized on a structured triangular mesh, and turned into
//! an overdetermined sparse complex linear system whose least-squares
//! solution gives the vertex images of a piecewise-linear approximation to
//! the normalized `mu`-conformal self-map of the disk (`f(0) = 0`,
//! `f(1) = 1`).
//!
//! The pipeline is:
//!
//! 1. [`mesh::build_mesh`] builds the logarithmic mesh for a [`mesh::MeshOrder`].
//! 2. [`beltrami::nu_table`] averages the pulled-back field over each triangle.
//! 3. [`assembly::assemble`] emits triangle, boundary and normalization rows.
//! 4. A solver from [`lsq::SolverRegistry`] minimizes `|AV - B|`.
//! 5. [`mapping::exponentiate`] maps the solution back to the disk.
//!
//! [`pipeline::solve`] runs all of these in order.

// `!(x < 1.0)` rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod beltrami;
pub mod error;
pub mod fields;
pub mod fuchsian;
pub mod lsq;
pub mod mapping;
pub mod mesh;
pub mod oracles;
pub mod pipeline;

pub use error::{Error, Result};
pub use num_complex::Complex64;
