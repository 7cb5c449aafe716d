//! Sentence-to-visual-feature regression and cross-modal retrieval.
//!
//! Sentences are vectorized ([`textvec`]), projected into a precomputed
//! visual feature space by a ReLU perceptron trained with MSE and RMSprop
//! ([`neuralnet`]), and compared against image or video features by cosine
//! similarity ([`retrieval`]). [`metrics`] scores the resulting rankings and
//! [`videofeat`] builds video-level targets from frame features.

pub mod error;
pub mod io;
pub mod metrics;
pub mod neuralnet;
pub mod pipeline;
pub mod retrieval;
pub mod synthetic;
pub mod textvec;
pub mod videofeat;

pub use error::{Error, Result};
pub use io::Model;
pub use metrics::{GroundTruth, Metric, MetricReport};
pub use neuralnet::{NetworkConfig, NetworkParams, OptimizerConfig, TrainOutcome, TrainingPair};
pub use retrieval::{Ranking, VisualFeature};
pub use textvec::{Sentence, SentenceVector, Vectorizer, VectorizerKind};
