#![no_std]
extern crate alloc;

pub mod checkpoint;
pub mod error;
pub mod eval;
pub mod longitudinal;
pub mod losses;
pub mod matrix;
pub mod model;
pub mod nn;
pub mod scale;
pub mod synthetic;
pub mod task;
pub mod trainer;

pub use error::{Error, Result};
pub use matrix::Matrix;
