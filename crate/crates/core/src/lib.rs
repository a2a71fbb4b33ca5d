pub mod canonical;
pub mod construction;
pub mod error;
pub mod grid;
pub mod harness;
pub mod nobonds;
pub mod poisson;
pub mod regions;
pub mod seed;
pub mod spectrum;

pub use error::{Error, Result};
