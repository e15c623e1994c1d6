//! Planar spectral-geometry laboratory for the Dirichlet Laplacian.
//!
//! The crate builds parametric planar domains (disks, rectangles, narrow
//! convex domains, dumbbells, hole-punched annular domains), triangulates
//! them, solves the generalized eigenproblem `K v = lambda M v` with P1
//! finite elements, and then analyses the computed eigenpairs:
//!
//! * nodal sets, nodal-domain counts and inradius/wavelength statistics,
//! * boundary Neumann traces and sign-pattern (Payne-property) verdicts,
//! * junction angles between nodal lines and the boundary, with
//!   quantization against the admissible set `{p*pi/q}`,
//! * shape-derivative calculus: the Hadamard boundary formula, transported
//!   mesh finite differences, directional-derivative matrices for repeated
//!   eigenvalues, fundamental-gap and dumbbell parameter sweeps.
//!
//! Every analytic claim used in tests is backed by an independent oracle in
//! [`reference`] (Bessel zeros, product spectra, annular cross-products).
//!
//! Entry points: the `examples/` directory has one runnable program per
//! capability; the thin `lab` binary exposes `spectrum`, `nodal`, `sweep`
//! and `validate` subcommands driven by a TOML config.

pub mod error;
pub mod geometry;
pub mod reference;
pub mod mesh;
pub mod eigensolve;
pub mod nodal;
pub mod shapecalc;
pub mod lab;

pub(crate) mod svg;

pub use error::{Error, Result};
