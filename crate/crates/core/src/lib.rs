//! Outage, mutual-information and diversity-multiplexing tradeoff analysis
//! for cooperative relaying with two decode-and-forward relays, covering
//! synchronous and asynchronous space-time coding, distributed delay
//! diversity and a mixed amplify/decode protocol.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod mutualinfo;
pub mod outage;
pub mod quad;
pub mod toeplitz;
pub mod tradeoff;
pub mod waveform;

pub use error::{Error, Result};
