pub mod cli;
pub mod data;
pub mod diffcore;
pub mod encoders;
pub mod error;
pub mod fusion;
pub mod layers;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod ssem;
pub mod trainer;

pub use error::{Error, Result};
