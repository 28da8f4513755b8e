//! Link grammars with termination tags, stochastic sentence-tree sources,
//! frequentist estimation, and path-conditioned tree scoring.

pub mod error;
pub mod estimator;
pub mod fixtures;
pub mod grammar;
pub mod linkage;
pub mod mst;
pub mod par;
pub mod scorer;
pub mod source;
pub mod tree;

pub use error::{Error, Result};
