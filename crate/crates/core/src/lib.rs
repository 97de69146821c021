//! Dirac operators on model cusp manifolds and their eigenvalue counting laws.
//!
//! The model geometry is the half-cylinder `(0, x0] × M` carrying the metric
//! `g_p = x^{2p} (dx²/x⁴ + h)`, where `(M, h)` is a closed boundary manifold
//! with explicitly known Dirac spectrum. Separation of variables reduces the
//! Dirac operator to one radial Dirac system per boundary eigenvalue, whose
//! square is a pair of Schrödinger operators. Counting their eigenvalues with
//! Sturm sequences gives the global counting function `N_p(λ)`, which is then
//! compared against the three-regime Weyl asymptotics computed in [`weyl`].
//!
//! Module map:
//!
//! - [`boundary`]: boundary models, spectral gaps, spectral zeta values.
//! - [`radial`]: warp profiles and the per-mode radial problems.
//! - [`tridiag`]: symmetric tridiagonal discretizations and Sturm counts.
//! - [`counting`]: the assembled counting function and the demonstration scans.
//! - [`weyl`]: predicted asymptotics and fits of counting data.
//! - [`ellipticity`]: invertibility scans of the boundary normal family.
//! - [`cli`]: the batch experiment driver behind the `cusp-weyl` binary.

pub mod boundary;
pub mod cli;
pub mod counting;
pub mod ellipticity;
mod error;
pub mod quadrature;
pub mod radial;
pub mod tridiag;
pub mod weyl;

pub use error::{Error, Result};
