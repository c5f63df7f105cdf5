#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod channel;
pub mod complexity;
pub mod config;
pub mod error;
pub mod linalg;
pub mod rng;

pub use error::{Error, Result};
pub mod solver;
