// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod driver;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod io;
pub mod kernel;
pub mod numeric;
pub mod oracles;
pub mod rng;
pub mod sim;
pub mod variation;
pub mod volatility;

pub use error::{Error, Result};
