//! Numerical construction and certification of counterexamples to the
//! comparison principle and the sub/supersolution method for the nonlocal
//! operator `−M(‖u‖²_H) Δu` with Dirichlet boundary conditions.

pub mod assembly;
pub mod cli;
pub mod construct;
pub mod eigensolve;
pub mod error;
pub mod geometry;
pub mod mcatalog;
pub mod numeric;
pub mod oracle1d;
pub mod verify;

pub use error::{Error, Result};
