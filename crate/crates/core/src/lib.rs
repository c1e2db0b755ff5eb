pub mod arith;
pub mod cli;
pub mod compare;
pub mod complex;
pub mod error;
pub mod grid;
pub mod plumbing;
pub mod reduction;
pub mod weights;

pub use error::{Error, Result};
