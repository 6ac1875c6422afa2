//! Forward and backward passes for every building block of the classifier.
//!
//! Layers work on batches: sequences as time-major [`SeqBatch`]es, vectors as
//! one row per sample. Each `backward` returns the input gradient plus the
//! parameter gradients in the layer's `params()` order.

mod conv;
mod dense;
mod gru;
mod head;
mod init;
mod lstm;
mod seq;

pub use conv::{conv1d_forward, Conv1dLayer, ConvTrace, PatchConvTrace, SensorPatchConv};
pub use dense::{dense_forward, DenseLayer};
pub use gru::{gru_cell, gru_layer_forward, GateTrace, GruLayer, GruTrace};
pub use head::{argmax_class, mse_loss, mse_softmax_backward, one_hot, softmax, softmax_rows};
pub use init::glorot_uniform;
pub use lstm::{lstm_cell, LstmLayer, LstmState, LstmTrace};
pub use seq::SeqBatch;
