//! CORAL ordinal regression of Fitzpatrick type on blurred, downscaled images.
//!
//! A single score (linear in the features, or through one `tanh` layer) is
//! shared by the five cumulative tasks `type > k`; each task adds its own
//! bias.

mod features;
mod model;
mod train;

pub use features::{featurize, FeatureConfig};
pub use model::{
    coral_forward, coral_loss, predict, predict_features, predict_from_probs, CoralGradient, CoralModel, CoralOutput,
    HiddenLayer, InputNorm, N_TASKS, PROB_EPS,
};
pub use train::{
    featurize_images, stratified_split, train, train_on_features, DataSplit, EpochLog, TrainConfig, TrainMeta,
    TrainOutcome,
};
