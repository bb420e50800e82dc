//! Numerical laboratory for prime-block random walks, their Gaussian and
//! Steinhaus surrogates, barrier events and band-limited mollifiers.

pub mod ballot;
pub mod barriers;
pub mod dirichlet;
pub mod error;
pub mod estimate;
pub mod kernel;
pub mod models;
pub mod mollifier;
pub mod primes;
pub mod quad;
pub mod rng;
pub mod special;
pub mod zeta;

pub use error::{Error, Result};
pub use estimate::EstimateCI;
