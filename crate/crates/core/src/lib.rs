//! Matrix-free Riemannian trust-region optimization of two-qubit gate
//! circuits against a target unitary available only through its action on
//! statevectors.

pub mod checks;
pub mod circuit;
pub mod dense;
pub mod error;
pub mod kernels;
pub mod manifold;
pub mod models;
pub mod objective;
pub mod optimizer;
pub mod random;

pub use error::{Error, Result};
