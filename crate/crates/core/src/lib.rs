//! Linear contextual bandits built around indexed minimum empirical divergence.
//!
//! The crate is split into four layers:
//!
//! - [`linalg`]: incremental ridge regression shared by every policy.
//! - [`policies`]: LinIMED-1/2/3, SupLinIMED, LinUCB, LinTS and a uniform baseline.
//! - [`envs`]: the synthetic varying-arm instance, the "End of Optimism" instance
//!   and a MovieLens-style offline replay environment.
//! - [`verify`]: independent oracles and statistical validators.
//!
//! Randomness is always injected by the caller; nothing in this crate touches
//! a global generator.

pub mod envs;
pub mod error;
pub mod linalg;
pub mod policies;
pub mod verify;

pub use error::{Error, Result};

/// Random stream type used by every simulation in this workspace.
pub type SimRng = rand_chacha::ChaCha8Rng;
