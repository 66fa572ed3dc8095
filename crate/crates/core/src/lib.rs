//! Online resource allocation with marginally increasing procurement costs.
//!
//! Customers arrive one at a time with concave valuations `v_t` over `D`
//! resources; the operator allocates `x_t` in `[0, 1]^D` and pays a convex
//! procurement cost `f` on the cumulative allocation. The crate provides the
//! offline optimum, two online primal-dual engines driven by a surrogate cost
//! `f_s`, surrogate designers, competitive-ratio bounds and an experiment
//! harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod cost_model;
pub mod error;
pub mod grid;
pub mod harness;
pub mod instances;
pub mod io;
pub mod offline;
pub mod online;
pub mod rng;
pub mod surrogate;

mod numeric;

pub use config::SolverConfig;
pub use error::{Error, Result};
pub use grid::{GridSpec, Variant};
