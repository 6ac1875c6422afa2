//! Hierarchical CNN + GRU classifier for multi-sensor vibration windows,
//! with baseline architectures, a training loop, metrics and a synthetic
//! damage-state generator.

pub mod cli;
mod error;

pub mod data;
pub mod eval;
pub mod layers;
pub mod model;
pub mod numerics;
pub mod training;
pub mod verify;

pub use error::{Error, Result};
