//! Two-dimensional electrostatic immersed-finite-element particle-in-cell
//! toolkit.
//!
//! The pieces, bottom up:
//!
//! - [`geometry`]: Cartesian grid, diagonal triangulation, level-set
//!   classification and interface cuts.
//! - [`ife`]: linear IFE basis on cut triangles.
//! - [`solver`]: Galerkin and partially penalized IFE assembly and solve.
//! - [`pic`]: particle loading, standard and charge-conserving deposit,
//!   finite-difference and IFE gathers, Boris push.
//! - [`driver`]: conducting-cylinder benchmark, error metrics, comparison
//!   tables and the time loop.
//! - [`io`]: CSV exports.

pub mod driver;
pub mod error;
pub mod geometry;
pub mod ife;
pub mod io;
pub mod pic;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use error::{IfePicError, Result};

/// Caps the global worker pool. Zero leaves the rayon default in place.
pub fn configure_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| IfePicError::InvalidConfig(format!("thread pool: {e}")))
}
