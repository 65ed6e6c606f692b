// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod dynamics;
mod error;
pub mod model;
pub mod ode;
pub mod simulate;

pub use error::{Error, Result};
