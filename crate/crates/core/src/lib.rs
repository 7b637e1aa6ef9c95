//! Multi-objective energy management for electro-mechanical transmission (EMT)
//! vehicles.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every numerical piece of
//! the pipeline:
//!
//! * quasi-static component models and the two power-balance equations
//!   ([`powertrain`]),
//! * the three performance objectives and their normalisation ([`objectives`]),
//! * analytic-hierarchy-process weighting ([`ahp`]),
//! * speed-band driving-pattern classification ([`patterns`]),
//! * drive cycles and the bundled synthetic cycle ([`cycle`]),
//! * a generic backward dynamic-programming solver with an exhaustive oracle
//!   ([`dp`]) and its EMT instantiation ([`emt`]),
//! * a rule-based comparison controller ([`baseline`]),
//! * trajectories and run summaries ([`trajectory`]).
//!
//! File formats and the command-line driver live in the `emt-cli` crate.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod ahp;
pub mod baseline;
pub mod config;
pub mod cycle;
pub mod dp;
pub mod emt;
mod error;
pub mod interp;
pub mod objectives;
pub mod patterns;
pub mod powertrain;
pub mod trajectory;

pub use error::{Error, Result};
