//! Numerical toolkit for sum systems of Hilbert spaces, their second quantization,
//! and the invariants separating product systems of type III from type I.

pub mod config;
pub mod error;
pub mod fock;
pub mod hilbert;
pub mod invariants;
pub mod kernels;
pub mod linalg;
pub mod quad;
pub mod shale;
pub mod suite;
pub mod sumsys;
pub mod table;
pub mod units;

pub use error::{Error, Result};
