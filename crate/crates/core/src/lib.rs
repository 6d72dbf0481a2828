//! Incentive-contract design for user-generated content.
//!
//! The crate is `no_std` (with `alloc`) and covers the numerical side:
//! the contract-theoretic environment, the quality simulator and prompt
//! protocol, a from-scratch mixture-of-experts PPO learner, and the
//! reference baselines and oracles. IO lives in the companion harness crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod baselines;
pub mod contract;
pub mod env;
pub mod error;
pub mod nn;
pub mod policy;
pub mod ppo;
pub mod quality;
pub mod special;

pub use error::{Error, Result};
