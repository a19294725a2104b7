pub mod envs;
pub mod error;
pub mod ndmath;
pub mod rng;
pub mod victim;

pub use error::{Error, Result};
