//! Conjugate-exponential building blocks: Gamma, Gaussian rows and
//! Dirichlet rows, with the expectations and entropies the bound needs.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::linalg::{ln_det_spd, Mat, Vector};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Gamma distribution with shape/rate parameterisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma {
    pub shape: f64,
    pub rate: f64,
}

impl Gamma {
    pub fn new(shape: f64, rate: f64) -> Self {
        Self { shape, rate }
    }

    /// ⟨λ⟩
    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    /// ⟨log λ⟩
    pub fn mean_ln(&self) -> f64 {
        digamma(self.shape) - self.rate.ln()
    }

    pub fn entropy(&self) -> f64 {
        self.shape - self.rate.ln() + ln_gamma(self.shape) + (1.0 - self.shape) * digamma(self.shape)
    }

    /// E_self[log Gamma(λ | prior)]
    pub fn expected_ln_prior(&self, prior: &Gamma) -> f64 {
        prior.shape * prior.rate.ln() - ln_gamma(prior.shape)
            + (prior.shape - 1.0) * self.mean_ln()
            - prior.rate * self.mean()
    }

    /// -KL(self ‖ prior)
    pub fn neg_kl(&self, prior: &Gamma) -> f64 {
        self.expected_ln_prior(prior) + self.entropy()
    }
}

/// Multivariate Gaussian factor over one row of a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianRow {
    pub mean: Vector,
    pub cov: Mat,
}

impl GaussianRow {
    pub fn new(mean: Vector, cov: Mat) -> Self {
        Self { mean, cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// ⟨v vᵀ⟩
    pub fn second_moment(&self) -> Mat {
        &self.cov + &self.mean * self.mean.transpose()
    }

    /// Entropy, `None` if the covariance is singular.
    pub fn entropy(&self) -> Option<f64> {
        let ld = ln_det_spd(&self.cov)?;
        Some(0.5 * ld + 0.5 * self.dim() as f64 * (1.0 + LN_2PI))
    }

    /// E[log N(v | 0, diag(prec)⁻¹)] with independent precisions.
    pub fn expected_ln_ard_prior(&self, precisions: &[Gamma]) -> f64 {
        debug_assert_eq!(precisions.len(), self.dim());
        precisions
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let second = self.cov[(i, i)] + self.mean[i] * self.mean[i];
                0.5 * g.mean_ln() - 0.5 * LN_2PI - 0.5 * g.mean() * second
            })
            .sum()
    }
}

/// ⟨log p⟩ under a Dirichlet with the given concentrations.
pub fn dirichlet_mean_ln(conc: &[f64]) -> Vec<f64> {
    let total: f64 = conc.iter().sum();
    let dg = digamma(total);
    conc.iter().map(|&a| digamma(a) - dg).collect()
}

fn dirichlet_ln_norm(conc: &[f64]) -> f64 {
    let total: f64 = conc.iter().sum();
    ln_gamma(total) - conc.iter().map(|&a| ln_gamma(a)).sum::<f64>()
}

/// -KL(Dir(post) ‖ Dir(prior))
pub fn dirichlet_neg_kl(post: &[f64], prior: &[f64]) -> f64 {
    let ml = dirichlet_mean_ln(post);
    let expected_prior = dirichlet_ln_norm(prior)
        + prior.iter().zip(&ml).map(|(a, l)| (a - 1.0) * l).sum::<f64>();
    let expected_post =
        dirichlet_ln_norm(post) + post.iter().zip(&ml).map(|(a, l)| (a - 1.0) * l).sum::<f64>();
    expected_prior - expected_post
}

pub fn ln_2pi() -> f64 {
    LN_2PI
}
