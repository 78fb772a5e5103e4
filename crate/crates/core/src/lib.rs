#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counting;
pub mod detection;
pub mod elements;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod fock;
pub mod grid;
pub mod permanent;
pub mod resonator;

pub use error::{Error, Result};
