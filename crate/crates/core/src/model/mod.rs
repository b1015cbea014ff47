//! Model state shared by the inference engine, rotations and baselines.

mod checkpoint;
mod config;
mod data;
mod posterior;

pub use checkpoint::{Checkpoint, CHECKPOINT_SCHEMA, CHECKPOINT_VERSION};
pub use config::{Hyperparameters, InitScales, ModelConfig, ModelVariant, Schedule};
pub use data::ObservationSet;
pub use posterior::{
    check_shapes, init_posteriors, slice_index, w_moments, DynamicsMoments, FactorPosteriors,
    MixingMoments, MixingPosterior,
};
