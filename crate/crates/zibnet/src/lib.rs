//! Pairwise dependence estimation for zero-inflated relative-abundance data.
//!
//! The model couples two zero-inflated beta margins with a Frank copula.
//! Estimation is two-stage maximum likelihood (margins first, then the
//! dependence parameter), inference is a re-scaled likelihood-ratio test
//! with a jackknife variance estimate, and the network layer turns all-pairs
//! test results into an FDR-controlled dependence graph with null-model and
//! bootstrap-stability diagnostics.

pub mod copula;
pub mod error;
pub mod exec;
pub mod joint;
pub mod margin;
pub mod network;
pub mod numerics;
pub mod simulate;
pub mod tables;
pub mod two_stage;

pub use error::{Error, Result};
