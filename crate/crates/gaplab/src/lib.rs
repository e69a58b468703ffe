//! Numerical laboratory for spectral gaps of reversible generators.
//!
//! The crate has four computational layers and one reporting layer:
//!
//! * [`geometry`]: closed-form lower bounds for the first nonzero Laplacian
//!   eigenvalue on a manifold described by dimension, diameter, and a Ricci
//!   curvature floor, plus a dual variational formula evaluated by nested
//!   adaptive quadrature over one-dimensional test functions.
//! * [`forms`]: finite reversible Markov chains with rate-matrix validation,
//!   stationary distributions, Dirichlet forms, exact spectral gaps via
//!   symmetrized eigensolves, and a multi-start log-Sobolev optimizer.
//! * [`cheeger`]: weighted Cheeger constants over exhaustively enumerated
//!   subsets, the Lawler-Sokal and Diaconis-Saloff-Coste bounds, and a
//!   combined positivity report.
//! * [`ergodicity`]: heat semigroups, variance and total-variation decay
//!   curves, algebraic decay constants, and truncation-family probes that
//!   track how the diagnostics degenerate as state spaces grow.
//! * [`report`]: a flat row schema rendered as TSV or JSON with fixed
//!   precision, shared by the CLI.
//!
//! Everything is deterministic: iterative routines take explicit seeds and
//! all orderings are fixed.

#![forbid(unsafe_code)]

pub mod cheeger;
pub mod ergodicity;
pub mod forms;
pub mod geometry;
pub mod report;
