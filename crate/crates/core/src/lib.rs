pub mod analysis;
pub mod channel;
pub mod config;
pub mod error;
pub mod filter;
pub mod link;
pub mod multirate;
pub mod ofdm;
pub mod rng;

pub use error::{Error, Result};
