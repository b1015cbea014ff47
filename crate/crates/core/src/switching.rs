//! Switching-dynamics baseline: an HMM selects one basis matrix per step.
//!
//! The discrete posterior is computed with a log-domain forward–backward
//! (alpha–beta) recursion. The engine treats the resulting state
//! probabilities as one-hot mixing weights, so `⟨s_n⟩ = p_n` and
//! `⟨s_n s_nᵀ⟩ = diag(p_n)`; the B, X and rotation updates are shared with
//! the other variants.

use serde::{Deserialize, Serialize};

use crate::dist::{dirichlet_mean_ln, dirichlet_neg_kl};
use crate::linalg::{trace_of_product, Mat, Vector};
use crate::model::{DynamicsMoments, FactorPosteriors, MixingPosterior};

/// Posterior over the discrete regime sequence `z_1 … z_N` and its
/// Dirichlet-distributed initial and transition probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmPosterior {
    /// `state_probs[n-1][k] = q(z_n = k)`
    pub state_probs: Vec<Vector>,
    /// `pairwise[n-1][(j, k)] = q(z_n = j, z_{n+1} = k)`
    pub pairwise: Vec<Mat>,
    /// Dirichlet concentrations of each transition-matrix row.
    pub transition: Vec<Vec<f64>>,
    /// Dirichlet concentrations of the initial-state probabilities.
    pub initial: Vec<f64>,
    pub prior_concentration: f64,
}

impl HmmPosterior {
    /// Uniform marginals, Dirichlet factors at the prior.
    pub fn uniform(steps: usize, k: usize, concentration: f64) -> Self {
        let p = 1.0 / k as f64;
        Self {
            state_probs: vec![Vector::from_element(k, p); steps],
            pairwise: vec![Mat::from_element(k, k, p * p); steps.saturating_sub(1)],
            transition: vec![vec![concentration; k]; k],
            initial: vec![concentration; k],
            prior_concentration: concentration,
        }
    }

    /// Marginals drawn at random around uniform, with independent
    /// neighbours, so that the basis matrices see different data from the
    /// first update on.
    pub fn random(steps: usize, k: usize, concentration: f64, rng: &mut impl rand::Rng) -> Self {
        let mut hmm = Self::uniform(steps, k, concentration);
        for p in hmm.state_probs.iter_mut() {
            p.iter_mut().for_each(|v| *v = rng.sample::<f64, _>(rand_distr::StandardNormal).exp());
            *p /= p.sum();
        }
        for (n, pair) in hmm.pairwise.iter_mut().enumerate() {
            *pair = &hmm.state_probs[n] * hmm.state_probs[n + 1].transpose();
        }
        hmm
    }

    pub fn num_states(&self) -> usize {
        self.initial.len()
    }

    /// `E_q[log p(z | π, T)] + H[q(z)] − KL` of the Dirichlet factors.
    pub fn bound(&self) -> f64 {
        let k = self.num_states();
        let prior = vec![self.prior_concentration; k];
        let ln_init = dirichlet_mean_ln(&self.initial);
        let ln_trans: Vec<Vec<f64>> = self.transition.iter().map(|r| dirichlet_mean_ln(r)).collect();

        let mut total = 0.0;
        if let Some(p1) = self.state_probs.first() {
            for s in 0..k {
                total += p1[s] * ln_init[s] - xlogx(p1[s]);
            }
        }
        for (n, xi) in self.pairwise.iter().enumerate() {
            let prev = &self.state_probs[n];
            for j in 0..k {
                for s in 0..k {
                    let v = xi[(j, s)];
                    if v > 0.0 {
                        total += v * ln_trans[j][s] - v * (v / prev[j]).ln();
                    }
                }
            }
        }
        total += dirichlet_neg_kl(&self.initial, &prior);
        for row in &self.transition {
            total += dirichlet_neg_kl(row, &prior);
        }
        total
    }

    /// Expected number of regime changes, `Σ_n Σ_{j≠k} q(z_n=j, z_{n+1}=k)`.
    pub fn expected_switches(&self) -> f64 {
        self.pairwise
            .iter()
            .map(|xi| xi.sum() - xi.diagonal().sum())
            .sum()
    }
}

fn xlogx(v: f64) -> f64 {
    if v > 0.0 {
        v * v.ln()
    } else {
        0.0
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// Result of an exact forward–backward pass.
#[derive(Debug, Clone)]
pub struct ForwardBackward {
    pub state_probs: Vec<Vector>,
    pub pairwise: Vec<Mat>,
    /// log Σ_z exp(total log potential)
    pub log_normalizer: f64,
}

/// Exact chain marginals in the log domain.
///
/// `log_init[k]` scores `z_1 = k`, `log_trans[(j, k)]` scores a `j → k`
/// transition and `log_emission[n][k]` scores `z_{n+1} = k`.
pub fn forward_backward(log_init: &[f64], log_trans: &Mat, log_emission: &[Vector]) -> ForwardBackward {
    let k = log_init.len();
    let n = log_emission.len();
    if n == 0 {
        return ForwardBackward {
            state_probs: vec![],
            pairwise: vec![],
            log_normalizer: 0.0,
        };
    }
    let mut alpha = vec![vec![0.0; k]; n];
    for s in 0..k {
        alpha[0][s] = log_init[s] + log_emission[0][s];
    }
    let mut buf = vec![0.0; k];
    for t in 1..n {
        for s in 0..k {
            for j in 0..k {
                buf[j] = alpha[t - 1][j] + log_trans[(j, s)];
            }
            alpha[t][s] = log_sum_exp(&buf) + log_emission[t][s];
        }
    }
    let mut beta = vec![vec![0.0; k]; n];
    for t in (0..n - 1).rev() {
        for j in 0..k {
            for s in 0..k {
                buf[s] = log_trans[(j, s)] + log_emission[t + 1][s] + beta[t + 1][s];
            }
            beta[t][j] = log_sum_exp(&buf);
        }
    }
    let log_z = log_sum_exp(&alpha[n - 1]);
    let state_probs = (0..n)
        .map(|t| {
            let mut p = Vector::from_fn(k, |s, _| (alpha[t][s] + beta[t][s] - log_z).exp());
            let total = p.sum();
            p /= total;
            p
        })
        .collect();
    let pairwise = (0..n.saturating_sub(1))
        .map(|t| {
            let mut xi = Mat::from_fn(k, k, |j, s| {
                (alpha[t][j] + log_trans[(j, s)] + log_emission[t + 1][s] + beta[t + 1][s] - log_z).exp()
            });
            let total = xi.sum();
            xi /= total;
            xi
        })
        .collect();
    ForwardBackward {
        state_probs,
        pairwise,
        log_normalizer: log_z,
    }
}

/// Per-step, per-regime expected log-density of the latent transition,
/// dropping terms that do not depend on the regime:
/// `tr(⟨B_k⟩⟨x_{n-1} x_nᵀ⟩) − ½ tr(⟨B_kᵀB_k⟩⟨x_{n-1}x_{n-1}ᵀ⟩)`.
pub fn emission_log_potentials(post: &FactorPosteriors, bm: &DynamicsMoments) -> Vec<Vector> {
    let n_steps = post.num_steps();
    let k = bm.num_dynamics;
    let btb: Vec<Mat> = (0..k).map(|s| bm.cross(s, s)).collect();
    (1..=n_steps)
        .map(|n| {
            let cross = post.x.cross_moment(n); // ⟨x_n x_{n-1}ᵀ⟩
            let prev = post.x.second_moment(n - 1);
            Vector::from_fn(k, |s, _| {
                bm.means[s].component_mul(&cross).sum() - 0.5 * trace_of_product(&btb[s], &prev)
            })
        })
        .collect()
}

/// Update q(z) by forward–backward under the current expected log
/// transition probabilities and emissions.
pub fn update_z(post: &mut FactorPosteriors) {
    let bm = post.dynamics_moments();
    let emissions = emission_log_potentials(post, &bm);
    let MixingPosterior::Switching(hmm) = &mut post.mixing else {
        return;
    };
    let k = hmm.num_states();
    let log_init = dirichlet_mean_ln(&hmm.initial);
    let rows: Vec<Vec<f64>> = hmm.transition.iter().map(|r| dirichlet_mean_ln(r)).collect();
    let log_trans = Mat::from_fn(k, k, |j, s| rows[j][s]);
    let fb = forward_backward(&log_init, &log_trans, &emissions);
    hmm.state_probs = fb.state_probs;
    hmm.pairwise = fb.pairwise;
}

/// Conjugate Dirichlet updates of the initial-state and transition factors.
pub fn update_transition(hmm: &mut HmmPosterior) {
    let k = hmm.num_states();
    let prior = hmm.prior_concentration;
    hmm.initial = match hmm.state_probs.first() {
        Some(p) => p.iter().map(|v| prior + v).collect(),
        None => vec![prior; k],
    };
    let mut counts = Mat::zeros(k, k);
    for xi in &hmm.pairwise {
        counts += xi;
    }
    hmm.transition = (0..k)
        .map(|j| (0..k).map(|s| prior + counts[(j, s)]).collect())
        .collect();
}

/// `⟨W_n⟩ = Σ_k p_nk ⟨B_k⟩` and `⟨W_nᵀW_n⟩ = Σ_k p_nk ⟨B_kᵀB_k⟩`.
pub fn averaged_w_moments(hmm: &HmmPosterior, bm: &DynamicsMoments) -> Vec<(Mat, Mat)> {
    let k = bm.num_dynamics;
    let d = bm.latent_dim();
    let btb: Vec<Mat> = (0..k).map(|s| bm.cross(s, s)).collect();
    hmm.state_probs
        .iter()
        .map(|p| {
            let mut w = Mat::zeros(d, d);
            let mut wtw = Mat::zeros(d, d);
            for s in 0..k {
                w += &bm.means[s] * p[s];
                wtw += &btb[s] * p[s];
            }
            (w, wtw)
        })
        .collect()
}
