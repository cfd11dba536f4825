//! Time-dependent Hermite-Galerkin spectral solver for
//!
//! ```text
//! u_t + a1 g(u) u_x - a2 u_xx + a3 u_xxx = f(x, t),   x in R, t in [0, T]
//! ```
//!
//! The solution is expanded in Hermite functions whose scaling `alpha(t)` and
//! translation `beta(t)` follow a prescribed schedule. Linear terms are
//! stepped with Crank-Nicolson and the convection term with forward Euler.

pub mod assembly;
pub mod banded;
pub mod basis;
pub mod error;
pub mod harness;
pub mod problems;
pub mod quadrature;
pub mod spectral;
pub mod stepper;

pub use basis::{BasisParams, ParamSchedule, Schedule};
pub use error::{Error, Result};
pub use problems::ProblemSpec;
pub use spectral::{ErrorReport, SpectralState};
