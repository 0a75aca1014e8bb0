//! Noisy classical-shadow frame analysis over Clifford ensembles: Pauli algebra, channels,
//! exact biases and variances, bias bounds, sampled estimators and scenario drivers.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod channel;
pub mod clifford;
pub mod error;
pub mod frame;
pub mod noise;
pub mod pauli;
pub mod pulses;
pub mod rng;
pub mod scenario;
pub mod shadow;
pub mod stats;

pub use error::{Error, Result};
