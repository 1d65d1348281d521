//! Exact finite-ring arithmetic and local exponential sums.

pub mod ag;
pub mod chars;
pub mod error;
pub mod expsums;
pub mod hhat;
pub mod kloosterman;
pub mod padic;
pub mod zlocal;

pub use error::{Error, Result};
