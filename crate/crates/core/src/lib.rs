//! Distributional soft actor-critic with a noise-aware optimistic behavior policy.
//!
//! The crate is `no_std` + `alloc` when built without the default `std`
//! feature. Everything here is pure computation: a small multilayer
//! perceptron with reverse-mode gradients, quantile critics, ensemble
//! uncertainty estimates, the optimistic-value-distribution explorer, the
//! learner loop, and the GridChaos navigation environment. File formats,
//! configuration and the command line live in the `ovdx` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod agent;
pub mod critic;
pub mod env;
mod error;
pub mod explorer;
pub mod math;
pub mod nn;
pub mod rng;
pub mod uncertainty;

pub use error::{Error, Result};
