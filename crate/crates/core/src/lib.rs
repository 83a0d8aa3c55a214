//! Hamilton-Jacobi analysis of singular Lagrangians.
//!
//! `symcore` is a small exact computer-algebra kernel. The other modules build
//! on it: `canonical` derives the Hamilton-Jacobi generators of a model,
//! `integrability` runs the bracket closure, `pathint` assembles the
//! canonical path integral and `numflow` integrates the resulting total
//! differential equations numerically. `models` holds the built-in corpus.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::should_implement_trait, clippy::needless_range_loop)]

extern crate alloc;

pub mod symcore;
pub mod canonical;
pub mod integrability;
pub mod pathint;
pub mod numflow;
pub mod models;
