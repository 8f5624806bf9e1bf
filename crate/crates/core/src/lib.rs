//! Random-matrix laboratory: block ensembles with dependent but
//! uncorrelated entries, the circular law through Hermitization and the
//! cubic Stieltjes relation, truncation, and exact Littlewood–Offord
//! small-ball computations.

pub mod ensembles;
pub mod limitlaw;
pub mod linalg;
pub mod rng;
pub mod smallball;
pub mod spectral;
pub mod truncation;

pub use linalg::{ComplexMatrix, LinalgError};
pub use num_complex::Complex64;

/// Library version recorded in run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
