//! Numerics and simulation for the coupon collector conditioned to finish
//! early: Stirling-number asymptotics, the conditioned collector chain,
//! its limiting completion curve and the density of accessible automata.

// Reference constants are written to the digits they were computed at.
#![allow(clippy::excessive_precision)]

pub mod automata;
pub mod cli;
pub mod curve;
pub mod error;
pub mod quadrature;
pub mod sampler;
pub mod specialfn;
pub mod stats;
pub mod stirling;

pub use error::{Error, Result};
