//! Ordered affinity and total ordered variation for probability measures on
//! finite posets, with order-theoretic stability tools for Markov chains.

pub mod coupling;
pub mod error;
pub mod formats;
pub mod kernel;
pub mod maxflow;
pub mod measure;
pub mod models;
pub mod ordaff;
pub mod poset;
pub mod random;
pub mod suite;

pub use error::{Error, Result};
pub use kernel::MarkovKernel;
pub use measure::Measure;
pub use ordaff::{beta, gamma, ordered_affinity};
pub use poset::{ElementSet, Poset};
