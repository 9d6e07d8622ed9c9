//! Minimal dense-prediction CNN engine: planar `f64` tensors, "same"
//! convolutions, exact reverse-mode gradients and plain SGD.

pub mod checkpoint;
pub mod conv;
pub mod gradcheck;
pub mod init;
pub mod network;
pub mod patches;
pub mod tensor;
pub mod train;

pub use conv::{conv2d_forward, relu, ConvLayer};
pub use init::{init_params, InitScheme, LayerShape};
pub use network::{
    backward, backward_into, forward, forward_output, loss_and_output_grad, sgd_step, Activation, Gradients,
    LayerTrace, LossKind, NetworkParams,
};
pub use patches::{extract_patches, InputLayout, Patch, PatchBatch, PatchSource};
pub use tensor::Tensor;
pub use train::{batch_gradients, batch_loss, train_network, TrainConfig};
