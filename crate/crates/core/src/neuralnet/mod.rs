//! The sentence-to-visual-feature network.
//!
//! A stack of affine layers, each followed by ReLU (the output layer
//! included), trained to regress visual features under a per-dimension mean
//! squared error with mini-batch RMSprop, inverted dropout on hidden layers,
//! and patience-based early stopping.

mod network;
mod optim;
mod train;

pub use network::{
    batch_mse_loss, mse_loss, Activations, DropoutMasks, Layer, Mode, NetworkConfig, NetworkParams, DEFAULT_DROPOUT,
};
pub use optim::{rmsprop_update, OptimizerConfig, RmsProp, StopCriterion};
pub use train::{
    dataset_loss, dataset_recall_at_1, train, train_with_monitor, EarlyStopping, EpochStats, StopMonitor, TrainOutcome,
    TrainingPair,
};

use crate::error::{Error, Result};
use crate::textvec::SentenceVector;

/// Projects a sentence vector into the visual space (inference mode).
pub fn encode(params: &NetworkParams, sv: &SentenceVector) -> Result<Vec<f64>> {
    if sv.dim() != params.input_dim() {
        return Err(Error::dims("sentence vector", params.input_dim(), sv.dim()));
    }
    params.predict(&sv.values)
}
