//! Network assembly for the hierarchical classifier and the baselines.

mod checkpoint;
mod config;
mod network;

pub use checkpoint::{
    checkpoint_from_str, checkpoint_to_string, load_checkpoint, load_checkpoint_with,
    save_checkpoint, save_checkpoint_with, Metadata,
};
pub use config::{Arch, ModelConfig};
pub use network::{build_model, ForwardTrace, Model};
