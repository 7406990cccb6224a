//! Exact simulation of the standard spin-1/2 teleportation protocol and
//! numerical consistency checks for hidden-variable models of it.
//!
//! The crate has five parts:
//!
//! * [`spinor`] — dense complex linear algebra for 1-3 spin-1/2 particles:
//!   states, operators, tensor products, projective measurement.
//! * [`teleport`] — the protocol itself: Bell basis, correction unitaries
//!   and their rotation images, selective Bell projection, and the two
//!   algebraic routes to post-selection expectation values.
//! * [`quadrature`] — seeded Monte Carlo and a Gauss-Legendre product rule
//!   over the sphere, with standard errors and reproducible partitioning.
//! * [`hv`] — hidden-variable densities and response functions on the
//!   sphere, the two built-in one-spin models, and factorized
//!   three-particle candidate models.
//! * [`nogo`] — the conditional-vs-final density comparison, the p = p^2
//!   chain, response state-dependence detection and symmetry checks.
//!
//! Candidate models can also be loaded from a small text format, see
//! [`model_file`].

pub mod error;
pub mod hv;
pub mod model_file;
pub mod nogo;
pub mod quadrature;
pub mod spinor;
pub mod teleport;

pub use error::{Error, Result};
