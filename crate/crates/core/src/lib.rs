//! Scale-invariant multi-objective advantage actor-critic (MO-A2C).
//!
//! The crate combines per-objective policy-gradient estimates through the
//! minimum-norm point of their convex hull, so the update direction descends
//! every objective at once without hand-tuned scalarization weights. It ships:
//!
//! - [`minnorm`]: the exact min-norm simplex solver (closed form + away-step
//!   Frank-Wolfe) producing the combination weights.
//! - [`nn`]: a small dense kernel — one-hidden-layer MLP with hand-written
//!   backprop and a diagonal Gaussian policy head.
//! - [`env`] / [`cache`]: the multi-objective MDP abstraction and a surrogate
//!   edge-caching environment with three conflicting objectives.
//! - [`a2c`]: the MO-A2C training loop plus a scalarized single-objective
//!   baseline.
//! - [`harness`]: synthetic strongly-convex problems and SGD traces for
//!   empirical convergence checks.
//!
//! Builds without `std` (enable the `libm` feature); the companion CLI crate
//! carries all IO.

#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("moa2c-core requires either the `std` or the `libm` feature");

extern crate alloc;

pub mod a2c;
pub mod cache;
pub mod env;
pub mod error;
pub mod harness;
mod math;
pub mod minnorm;
pub mod nn;

pub use error::{CoreError, Result};

/// Deterministic RNG used throughout; every stream is seeded by the caller.
pub type Rng = rand_chacha::ChaCha8Rng;
