//! Minimal neural-network machinery: tensors, LSTM layers with exact
//! backpropagation through time, the stacked network, the Adam optimizer,
//! and checkpoint serialization. Everything runs in f64 and is fully
//! deterministic given a seed.

pub mod adam;
pub mod checkpoint;
pub mod lstm;
pub mod network;
pub mod tensor;

pub use adam::{clip_gradients, Adam};
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointData};
pub use lstm::{lstm_step, LstmWeights, StepCache};
pub use network::Network;
pub use tensor::Tensor;
