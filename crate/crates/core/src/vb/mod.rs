//! Variational Bayesian inference: coordinate updates, the bound and the
//! fitting loop.

pub mod elbo;
pub mod fit;
pub mod reconstruct;
pub mod updates;

pub use elbo::{compute_elbo, elbo_terms, ElboTerms};
pub use fit::{fit, fit_from, write_sweep_log, FitResult, SweepReport};
pub use reconstruct::reconstruct;
