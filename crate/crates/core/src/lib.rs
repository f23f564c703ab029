// NaN must fail parameter checks, so they are written as `!(x > bound)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod correct;
pub mod error;
pub mod grid;
pub mod harness;
pub mod io;
pub mod model;
pub mod noise;
pub mod rng;
pub mod sdf;

pub use error::{Error, Result};
