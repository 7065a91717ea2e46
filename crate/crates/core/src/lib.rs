//! Security analysis of QRAC-based semi-device-independent QKD against
//! detector-blinding eavesdroppers.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the CLI and
//! parallel drivers live in the companion `qracsec` crate.

#![no_std]
// Index loops read closer to the matrix algebra they implement.
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod attack;
pub mod bounds;
pub mod error;
pub mod protocol;
pub mod qmath;
pub mod sim;

pub use error::{Error, Result};
