//! Matrix backpropagation: forward and analytic backward passes for global
//! structured layers (SVD, symmetric eigendecomposition, spectral matrix
//! functions, orthogonal projectors and normalized-cuts objectives), a small
//! layer-composition framework to train them, and a finite-difference
//! harness that checks every derivative.

pub mod error;
pub mod gradcheck;
pub mod linalg;
pub mod ncuts;
pub mod netgraph;
pub mod random;
pub mod spectral;

pub use error::{Error, Result};
pub use linalg::RealMatrix;
