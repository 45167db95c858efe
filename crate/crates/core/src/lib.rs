#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod access;
pub mod channel;
pub mod compute;
pub mod env;
pub mod error;
pub mod harness;
pub mod marl;
pub mod neural;

pub use error::{Error, Result};
