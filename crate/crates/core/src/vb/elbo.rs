//! The variational lower bound, split per factor.

use serde::{Deserialize, Serialize};

use crate::chain::GaussianChainPosterior;
use crate::dist::{ln_2pi, Gamma, GaussianRow};
use crate::error::{Error, Result};
use crate::linalg::{ln_det_spd, trace_of_product, Mat, Vector};
use crate::model::{FactorPosteriors, MixingPosterior, ModelConfig, ObservationSet};
use crate::vb::updates::{a_moments, noise_statistics};

/// Contributions to the bound. Each Gaussian term is the expected log
/// conditional of that factor plus its entropy; each Gamma term is the
/// negative KL divergence from its prior.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ElboTerms {
    pub likelihood: f64,
    pub x: f64,
    pub s: f64,
    pub z: f64,
    pub c: f64,
    pub b: f64,
    pub a: f64,
    pub gamma: f64,
    pub beta: f64,
    pub alpha: f64,
    pub tau: f64,
}

impl ElboTerms {
    pub fn total(&self) -> f64 {
        self.likelihood
            + self.x
            + self.s
            + self.z
            + self.c
            + self.b
            + self.a
            + self.gamma
            + self.beta
            + self.alpha
            + self.tau
    }
}

pub fn compute_elbo(post: &FactorPosteriors, data: &ObservationSet, config: &ModelConfig) -> Result<f64> {
    Ok(elbo_terms(post, data, config)?.total())
}

pub fn elbo_terms(post: &FactorPosteriors, data: &ObservationSet, config: &ModelConfig) -> Result<ElboTerms> {
    let mut t = ElboTerms::default();

    let stats = noise_statistics(post, data);
    t.likelihood = stats
        .iter()
        .enumerate()
        .map(|(m, &(count, total))| {
            let tau = post.tau(m);
            count as f64 * 0.5 * (tau.mean_ln() - ln_2pi()) - 0.5 * tau.mean() * total
        })
        .sum();

    let w = post.w_moments_all();
    t.x = chain_term(&post.x, &config.x0_mean, &config.x0_precision, &w, "x")?;

    match &post.mixing {
        MixingPosterior::Constant => {}
        MixingPosterior::Continuous { clamped: true, .. } => {}
        MixingPosterior::Continuous { s, a, alpha, clamped: false } => {
            let (a_mean, ata) = a_moments(a);
            let trans = vec![(a_mean, ata); s.len() - 1];
            t.s = chain_term(s, &config.s0_mean, &config.s0_precision, &trans, "s")?;
            t.a = rows_term(a, alpha, "a")?;
            let prior = config.hyper.alpha();
            t.alpha = alpha.iter().map(|g| g.neg_kl(&prior)).sum();
        }
        MixingPosterior::Switching(hmm) => t.z = hmm.bound(),
    }

    t.c = rows_term(&post.c, &post.gamma, "c")?;
    t.b = rows_term(&post.b, &post.beta, "b")?;
    let gp = config.hyper.gamma();
    t.gamma = post.gamma.iter().map(|g| g.neg_kl(&gp)).sum();
    let bp = config.hyper.beta();
    t.beta = post.beta.iter().map(|g| g.neg_kl(&bp)).sum();
    let tp = config.hyper.tau();
    t.tau = post.tau.iter().map(|g| g.neg_kl(&tp)).sum();
    Ok(t)
}

/// `E[log p(chain)] + H[q(chain)]` for a linear-Gaussian chain with unit
/// innovation covariance and the given per-transition moments
/// `(⟨F_n⟩, ⟨F_nᵀF_n⟩)`.
fn chain_term(
    q: &GaussianChainPosterior,
    mu0: &Vector,
    lambda0: &Mat,
    trans: &[(Mat, Mat)],
    what: &str,
) -> Result<f64> {
    let d = q.dim() as f64;
    let ln_det_prior = ln_det_spd(lambda0).ok_or_else(|| Error::Config(format!("prior precision of {what}")))?;
    let m0 = &q.means[0];
    let mut total = 0.5 * ln_det_prior - 0.5 * d * ln_2pi() - 0.5 * trace_of_product(lambda0, &q.second_moment(0))
        + mu0.dot(&(lambda0 * m0))
        - 0.5 * mu0.dot(&(lambda0 * mu0));
    for (n, (f, ftf)) in trans.iter().enumerate() {
        let step = n + 1;
        let cross = q.cross_moment(step);
        let sq = q.second_moment(step).trace() - 2.0 * f.component_mul(&cross).sum()
            + trace_of_product(ftf, &q.second_moment(step - 1));
        total += -0.5 * d * ln_2pi() - 0.5 * sq;
    }
    let h = q
        .entropy()
        .ok_or_else(|| Error::Unsupported(format!("degenerate posterior covariance of {what}")))?;
    Ok(total + h)
}

fn rows_term(rows: &[GaussianRow], prec: &[Gamma], what: &str) -> Result<f64> {
    let mut total = 0.0;
    for r in rows {
        total += r.expected_ln_ard_prior(prec);
        total += r
            .entropy()
            .ok_or_else(|| Error::Unsupported(format!("degenerate posterior covariance of {what}")))?;
    }
    Ok(total)
}
