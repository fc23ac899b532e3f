//! Capacitance of systems of axis-aligned rectangular conductors by the
//! method of moments.
//!
//! Conductors are described as [`geometry::Panel`]s and meshed into tiles
//! that each carry a uniform surface charge. The potential coefficients
//! between tiles come from one of three [`kernels::KernelTier`]s; the
//! default is the exact Galerkin average of `1/r` over both tiles, computed
//! in closed form. [`solver`] assembles and solves the dense system and
//! extracts capacitances; [`oracle`] cross-checks the closed forms against
//! brute-force integration; [`experiments`] drives the standard studies.
//!
//! ```
//! use capmom::{geometry, kernels::KernelTier, solver};
//!
//! let mesh = geometry::build_cube(1.0, 2).unwrap();
//! let p = solver::assemble(&mesh, KernelTier::GalerkinQuadruple).unwrap();
//! let result = solver::solve(p, &mesh).unwrap();
//! assert!((result.capacitance_normalized - 0.66).abs() < 0.02);
//! ```

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod kernels;
pub mod oracle;
pub mod par;
pub mod solver;

pub use error::{Error, Result};
pub use par::Execution;
