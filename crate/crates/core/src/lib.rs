//! Numerical laboratory for isometric immersions of negatively curved
//! surfaces through the viscous Gauss–Codazzi system.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: variable transforms, the Gauss constraint, eigenvalues,
//!   Christoffel symbols of `dt² + B² dx²`;
//! * [`profile`] and [`metric`]: curvature profiles, the metric ODE
//!   `h'' = k* h`, `C₁`, the sign-switch time and the comparison function φ;
//! * [`solver`]: method-of-lines solver for the viscous system in `(l, m)` or
//!   Riemann-invariant `(u, v)` form with invariant-region monitors;
//! * [`diagnostics`]: entropy pair, dissipation norms, weak residuals and
//!   the vanishing-viscosity sweep;
//! * [`surface`]: frame integration of the Gauss–Weingarten system and OBJ
//!   export;
//! * [`io`]: CSV, JSON and binary checkpoint formats.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metric;
pub mod profile;
pub mod quadrature;
pub mod solver;
pub mod surface;

pub use error::{Error, Result};
pub use profile::CurvatureProfile;
