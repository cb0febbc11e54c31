//! Dense feed-forward classifier with inverted dropout, trained by manual
//! backpropagation of the softmax cross-entropy.

mod activation;
mod checkpoint;
mod gradcheck;
mod network;
mod train;

pub use activation::{relu, softmax, softplus, Activation};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{gradient_check, GradientCheck};
pub use network::{DenseLayer, DropoutMasks, ForwardOutput, Gradients, Network, NetworkConfig};
pub use train::{
    train, train_with_progress, EpochMetrics, OptimizerKind, TrainingHyperparams, TrainingReport,
};

pub(crate) use activation::{relu_scalar, softplus_scalar};
