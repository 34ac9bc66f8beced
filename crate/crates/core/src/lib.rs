//! Simulation of human and machine-type devices sharing a massive MIMO uplink.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod harness;
pub mod pilots;
pub mod powerctl;
pub mod rates;
pub mod scenario;

pub use error::{Error, Result};
