//! Shared-control target-reaching benchmark.
//!
//! A ring of circular targets is reached in a star pattern while an
//! autonomous constant-velocity controller and a human (simulated or live)
//! issue position commands that are blended as `u = γ u_r + (1 − γ) u_h`.
//! Movement times are fitted with Fitts' law and with an adapted model that
//! adds the autonomy level and its interaction with difficulty.
//!
//! ```
//! use fittsbench::{engine::{run_trial, TrialConfig}, geometry::RingSpec, operators::OperatorParams};
//!
//! let ring = RingSpec::reference_rings().remove(0);
//! let log = run_trial(&TrialConfig::simulated(ring, 0.4, OperatorParams::expert(), 7)).unwrap();
//! assert_eq!(log.movement_times_s.len(), 8);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod controller;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod logfile;
pub mod lstsq;
pub mod operators;
pub mod vec3;

pub use error::{Error, Result};
pub use vec3::Vec3;
