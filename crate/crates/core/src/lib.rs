//! Curl-conforming finite elements for time-harmonic Maxwell problems.

pub mod error;
pub mod linalg;
pub mod reference;

pub use error::{Error, Result};
pub mod assembly;
pub mod cli;
pub mod coefficients;
pub mod diagnostics;
pub mod experiments;
pub mod mesh;
pub mod solver;
pub mod spaces;
pub mod sparse;
