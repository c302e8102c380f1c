//! Numerical laboratory for exponential sums whose spectrum lies on dilated
//! curved hypersurfaces.
//!
//! The crate enumerates lattice points on spheres, ellipsoids and paraboloids,
//! evaluates the associated trigonometric polynomials exactly on torus grids,
//! and measures moment ratios, decoupling defects, multilinear averages,
//! additive energies and periodic Strichartz ratios.
//!
//! Module map:
//! - [`surfaces`]: hypersurfaces, lattice enumeration, normals, separation.
//! - [`caps`]: cap partitions, transversality, broad/narrow classification, rescaling.
//! - [`expsum`]: torus-grid and direct evaluation of exponential sums.
//! - [`moments`]: `L^p` norms, moment ratios, decoupling defects, growth fits.
//! - [`arithmetic`]: representation numbers and additive-pair counts.
//! - [`strichartz`]: space-time ratios, level sets, exponent splitting, sharpness sweeps.
//! - [`runner`]: experiment configs, CSV/JSON output, plot data, oracle suites.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arithmetic;
pub mod caps;
mod error;
pub mod expsum;
pub mod linalg;
pub mod moments;
pub mod runner;
pub mod strichartz;
pub mod surfaces;

pub use error::{Error, Result};
pub use num_complex::Complex64;
