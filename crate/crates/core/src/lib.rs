pub mod bench;
pub mod chain;
pub mod datagen;
pub mod dist;
pub mod error;
pub mod linalg;
pub mod model;
pub mod optim;
pub mod rotations;
pub mod switching;
pub mod vb;

pub use error::{Error, Result};
