use serde::{Deserialize, Serialize};

use crate::dist::Gamma;
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};

/// Which dynamics model gates the latent chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelVariant {
    /// Classical LSSM: one constant dynamics matrix.
    #[serde(rename = "lssm")]
    Lssm,
    /// Switching dynamics: an HMM picks one of K matrices per step.
    #[serde(rename = "lssm-sd", alias = "sd")]
    Switching,
    /// Time-varying dynamics: Gaussian mixing weights over K matrices.
    #[serde(rename = "lssm-tvd", alias = "tvd")]
    TimeVarying,
}

impl ModelVariant {
    pub fn name(&self) -> &'static str {
        match self {
            ModelVariant::Lssm => "lssm",
            ModelVariant::Switching => "lssm-sd",
            ModelVariant::TimeVarying => "lssm-tvd",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lssm" => Ok(Self::Lssm),
            "lssm-sd" | "sd" | "switching" => Ok(Self::Switching),
            "lssm-tvd" | "tvd" => Ok(Self::TimeVarying),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Shape/rate pairs of every Gamma prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub a_alpha: f64,
    pub b_alpha: f64,
    pub a_beta: f64,
    pub b_beta: f64,
    pub a_gamma: f64,
    pub b_gamma: f64,
    pub a_tau: f64,
    pub b_tau: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            a_alpha: 1e-6,
            b_alpha: 1e-6,
            a_beta: 1e-6,
            b_beta: 1e-6,
            a_gamma: 1e-6,
            b_gamma: 1e-6,
            a_tau: 1e-6,
            b_tau: 1e-6,
        }
    }
}

impl Hyperparameters {
    pub fn alpha(&self) -> Gamma {
        Gamma::new(self.a_alpha, self.b_alpha)
    }
    pub fn beta(&self) -> Gamma {
        Gamma::new(self.a_beta, self.b_beta)
    }
    pub fn gamma(&self) -> Gamma {
        Gamma::new(self.a_gamma, self.b_gamma)
    }
    pub fn tau(&self) -> Gamma {
        Gamma::new(self.a_tau, self.b_tau)
    }

    fn validate(&self) -> Result<()> {
        let all = [
            self.a_alpha,
            self.b_alpha,
            self.a_beta,
            self.b_beta,
            self.a_gamma,
            self.b_gamma,
            self.a_tau,
            self.b_tau,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::Config("all hyperparameters must be positive".into()))
        }
    }
}

/// Sweep schedule and convergence control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedule {
    /// Sweeps updating only X, C, B and τ before the full schedule starts.
    pub warmup_sweeps: usize,
    pub max_sweeps: usize,
    /// Stop when the relative ELBO improvement over one sweep drops below this.
    pub tolerance: f64,
    pub rotate: bool,
    /// Evaluate the bound after every single update (slower, names the
    /// offending update on a decrease).
    pub check_each_update: bool,
    /// Relative decrease of the bound that aborts the fit.
    pub monotone_tolerance: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            warmup_sweeps: 5,
            max_sweeps: 200,
            tolerance: 1e-6,
            rotate: true,
            check_each_update: false,
            monotone_tolerance: 1e-8,
        }
    }
}

/// Scales of the random initialisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitScales {
    pub x: f64,
    pub c: f64,
    /// Standard deviation of the non-constant mixing-weight components.
    pub s: f64,
    /// Standard deviation of the entries of the non-identity basis matrices.
    pub b: f64,
    /// Marginal variance given to every mixing weight.
    pub s_variance: f64,
    /// Initial value of the constant mixing-weight component; the matching
    /// basis matrix starts at `I / s_constant` so `W_n` starts near `I`.
    pub s_constant: f64,
}

impl Default for InitScales {
    fn default() -> Self {
        Self {
            x: 1.0,
            c: 1.0,
            s: 0.1,
            b: 0.1,
            s_variance: 0.01,
            s_constant: 1.0,
        }
    }
}

/// Everything needed to initialise and fit one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: ModelVariant,
    /// Latent dimension D.
    pub latent_dim: usize,
    /// Number of basis dynamics matrices K (forced to 1 for the classical LSSM).
    pub num_dynamics: usize,
    pub hyper: Hyperparameters,
    pub x0_mean: Vector,
    pub x0_precision: Mat,
    pub s0_mean: Vector,
    pub s0_precision: Mat,
    /// One shared noise precision instead of one per row.
    pub isotropic_noise: bool,
    /// Hold the mixing weights fixed at their initial value (K = 1 only);
    /// turns the time-varying model into a constant-dynamics one.
    pub clamp_mixing_weights: bool,
    /// Dirichlet concentration of the switching model's transition and
    /// initial-state priors.
    pub transition_concentration: f64,
    pub schedule: Schedule,
    pub init: InitScales,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(variant: ModelVariant, latent_dim: usize, num_dynamics: usize) -> Self {
        let k = if variant == ModelVariant::Lssm { 1 } else { num_dynamics };
        Self {
            variant,
            latent_dim,
            num_dynamics: k,
            hyper: Hyperparameters::default(),
            x0_mean: Vector::zeros(latent_dim),
            x0_precision: Mat::identity(latent_dim, latent_dim) * 1e-6,
            s0_mean: Vector::zeros(k),
            s0_precision: Mat::identity(k, k) * 1e-6,
            isotropic_noise: true,
            clamp_mixing_weights: false,
            transition_concentration: 1.0,
            schedule: Schedule::default(),
            init: InitScales::default(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.latent_dim;
        let k = self.num_dynamics;
        if d == 0 {
            return Err(Error::Config("latent dimension must be positive".into()));
        }
        if k == 0 {
            return Err(Error::Config("number of dynamics matrices must be positive".into()));
        }
        if self.variant == ModelVariant::Lssm && k != 1 {
            return Err(Error::Config("the classical LSSM uses exactly one dynamics matrix".into()));
        }
        if self.clamp_mixing_weights && (self.variant != ModelVariant::TimeVarying || k != 1) {
            return Err(Error::Config(
                "clamped mixing weights require the time-varying model with K = 1".into(),
            ));
        }
        self.hyper.validate()?;
        check_prior(&self.x0_mean, &self.x0_precision, d, "initial latent state")?;
        check_prior(&self.s0_mean, &self.s0_precision, k, "initial mixing weights")?;
        if !(self.transition_concentration > 0.0) {
            return Err(Error::Config("transition concentration must be positive".into()));
        }
        if !(self.schedule.tolerance >= 0.0) || !(self.schedule.monotone_tolerance >= 0.0) {
            return Err(Error::Config("tolerances must be non-negative".into()));
        }
        Ok(())
    }
}

fn check_prior(mean: &Vector, prec: &Mat, dim: usize, what: &str) -> Result<()> {
    if mean.len() != dim || prec.shape() != (dim, dim) {
        return Err(Error::Config(format!("{what} prior must have dimension {dim}")));
    }
    if (prec - prec.transpose()).amax() > 1e-12 || crate::linalg::cholesky(prec).is_none() {
        return Err(Error::Config(format!("{what} precision must be symmetric positive definite")));
    }
    Ok(())
}
