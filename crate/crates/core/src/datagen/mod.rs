//! Synthetic data sets and masking plans.

pub mod advection;
pub mod io;
pub mod mask;
pub mod signal;

pub use advection::{simulate_advection_diffusion, AdvectionDiffusionData, AdvectionDiffusionSpec};
pub use io::{DatasetMetadata, StationTable};
pub use mask::{make_mask_plan, split_observed, MaskPlan, MaskSplit};
pub use signal::{gen_frequency_signal, FrequencySignalSpec};
