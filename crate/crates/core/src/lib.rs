//! Counting, exponential sums and Hardy–Littlewood dissection tools for
//! Waring's problem with unequal box sides.

pub mod arith;
pub mod circle;
pub mod cli;
pub mod counting;
pub mod error;
pub mod expsums;
pub mod guards;
pub mod model;
pub mod numeric;
pub mod phase;
pub mod quad;
pub mod rational;
pub mod verify;

pub use error::{Error, Result};
