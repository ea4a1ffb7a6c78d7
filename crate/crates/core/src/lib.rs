//! SINR and rate coverage of indoor visible-light attocell networks with wall
//! reflections.
//!
//! Two independent engines compute the same quantities:
//!
//! * [`analytic`] evaluates the Laplace-functional / Gil-Pelaez coverage
//!   formula for a receiver at any point of a square room, with reflection
//!   images up to a chosen order;
//! * [`simulator`] samples Poisson attocell layouts and measures SINR directly.
//!
//! [`geometry`], [`channel`] and [`quadrature`] are the shared building blocks;
//! [`cli`] drives experiments from a config file and writes CSV reports.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod channel;
pub mod cli;
pub mod geometry;
pub mod parallel;
pub mod quadrature;
pub mod simulator;

pub use analytic::{CoverageCurve, Scenario};
pub use channel::{derive_constants, ChannelConstants, NetworkParams};
pub use geometry::{Region, Square, Vec2};
pub use quadrature::QuadratureSpec;
