//! Numerical machinery for the sharp norm `pi^2/4 + 1` of the reduced
//! Brown-Ravenhall kernel `t(x, y)` on `L^2(0, inf)`.
//!
//! * [`kernels`]: `t`, `t_0`, the partial-wave kernels `k_{l,s}`, Legendre `Q_l`
//!   and the physical constants.
//! * [`quadrature`]: adaptive Gauss-Kronrod integration with declared
//!   singularities and semi-infinite tails.
//! * [`schur`]: weighted Schur-test upper bounds and the analysis of `F`.
//! * [`variational`]: Rayleigh quotients, `f_delta` lower bounds and the
//!   single-channel stability form.
//! * [`spectral`]: Nyström discretization and the largest eigenvalue.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernels;
pub mod quadrature;
pub mod schur;
pub mod spectral;
pub mod variational;

pub use error::{Error, Result};
pub use kernels::{KernelSpec, PhysicalParams, SHARP_CONSTANT};

/// Library version, as recorded in CLI reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
