//! Quantum phase classification with fidelity kernels over matrix-product
//! ground states.
//!
//! The crate covers the whole chain: model Hamiltonians as MPOs, two-site
//! DMRG with symmetry-sector resolution, fidelity Gram matrices, a dual SVM
//! solved by SMO, the decision observable with its variance and shot budget,
//! the trace-norm generalization bound, and a cached experiment pipeline.

pub mod error;
pub mod exact;
pub mod genbound;
pub mod hamiltonian;
pub mod kernel;
pub mod labels;
pub mod linalg;
pub mod mps;
pub mod observable;
pub mod pipeline;
pub mod repro;
pub mod seed;
pub mod svm;

pub use error::{Error, Result};
pub use linalg::C64;
