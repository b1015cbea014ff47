use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chain::GaussianChainPosterior;
use crate::dist::{Gamma, GaussianRow};
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};
use crate::model::{ModelConfig, ModelVariant, ObservationSet};
use crate::switching::HmmPosterior;

/// Position of `b_{k,c,j}` inside the row factor of row `c`: the row slice
/// `B_{:c:}` (a K×D matrix) is stacked column by column, so `k` runs fastest.
#[inline]
pub fn slice_index(k: usize, j: usize, num_dynamics: usize) -> usize {
    j * num_dynamics + k
}

/// Posterior over the process that weights the basis dynamics matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixingPosterior {
    /// Classical LSSM: a single matrix with weight fixed at one.
    Constant,
    /// Gaussian mixing-weight chain `s_0 … s_N` with its own dynamics `A`.
    Continuous {
        s: GaussianChainPosterior,
        /// Rows of `A`.
        a: Vec<GaussianRow>,
        /// Column ARD precisions of `A`.
        alpha: Vec<Gamma>,
        /// Weights held fixed (no S, A or α updates).
        clamped: bool,
    },
    /// Discrete HMM selection among the basis matrices.
    Switching(HmmPosterior),
}

/// All variational factors of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorPosteriors {
    /// Latent chain `x_0 … x_N`.
    pub x: GaussianChainPosterior,
    /// Rows of the loading matrix `C`.
    pub c: Vec<GaussianRow>,
    /// Column ARD precisions of `C`.
    pub gamma: Vec<Gamma>,
    /// Row slices `[B_{:c:}]` of the dynamics tensor, one factor per row `c`;
    /// see [`slice_index`] for the element layout.
    pub b: Vec<GaussianRow>,
    /// `β_{kd}` stored at [`slice_index`]`(k, d)`.
    pub beta: Vec<Gamma>,
    /// Noise precisions, a single shared entry when the noise is isotropic.
    pub tau: Vec<Gamma>,
    pub mixing: MixingPosterior,
}

impl FactorPosteriors {
    pub fn latent_dim(&self) -> usize {
        self.x.dim()
    }

    pub fn num_dynamics(&self) -> usize {
        self.b[0].dim() / self.latent_dim()
    }

    /// Number of time steps N (the chain has N+1 states).
    pub fn num_steps(&self) -> usize {
        self.x.len() - 1
    }

    pub fn num_rows(&self) -> usize {
        self.c.len()
    }

    pub fn tau(&self, m: usize) -> &Gamma {
        if self.tau.len() == 1 {
            &self.tau[0]
        } else {
            &self.tau[m]
        }
    }

    /// Moments of the mixing weights at steps `n = 1..=N` (index `n - 1`).
    pub fn mixing_moments(&self) -> MixingMoments {
        let n = self.num_steps();
        match &self.mixing {
            MixingPosterior::Constant => MixingMoments {
                mean: vec![Vector::from_element(1, 1.0); n],
                second: vec![Mat::from_element(1, 1, 1.0); n],
            },
            MixingPosterior::Continuous { s, .. } => MixingMoments {
                mean: (1..=n).map(|t| s.means[t].clone()).collect(),
                second: (1..=n).map(|t| s.second_moment(t)).collect(),
            },
            MixingPosterior::Switching(hmm) => MixingMoments {
                mean: hmm.state_probs.clone(),
                second: hmm
                    .state_probs
                    .iter()
                    .map(Mat::from_diagonal)
                    .collect(),
            },
        }
    }

    pub fn dynamics_moments(&self) -> DynamicsMoments {
        DynamicsMoments::from_rows(&self.b, self.num_dynamics())
    }

    /// `(⟨W_n⟩, ⟨W_nᵀ W_n⟩)` for `n = 1..=N`.
    pub fn w_moments_all(&self) -> Vec<(Mat, Mat)> {
        let bm = self.dynamics_moments();
        let mm = self.mixing_moments();
        mm.mean
            .iter()
            .zip(&mm.second)
            .map(|(m, s)| w_moments(m, s, &bm))
            .collect()
    }

    pub fn variant(&self) -> ModelVariant {
        match self.mixing {
            MixingPosterior::Constant => ModelVariant::Lssm,
            MixingPosterior::Continuous { .. } => ModelVariant::TimeVarying,
            MixingPosterior::Switching(_) => ModelVariant::Switching,
        }
    }
}

/// Per-step first and second moments of the mixing weights.
#[derive(Debug, Clone)]
pub struct MixingMoments {
    pub mean: Vec<Vector>,
    pub second: Vec<Mat>,
}

/// First and second moments of the dynamics tensor `B`.
#[derive(Debug, Clone)]
pub struct DynamicsMoments {
    pub num_dynamics: usize,
    /// `⟨B_k⟩`
    pub means: Vec<Mat>,
    /// `Σ_c ⟨[B_{:c:}]_: [B_{:c:}]_:ᵀ⟩`, a KD×KD matrix in [`slice_index`] layout.
    /// Entry `((i,k),(j,l))` equals `[⟨B_kᵀB_l⟩]_{ij}` and `[⟨B_{::i} B_{::j}ᵀ⟩]_{kl}`.
    pub second: Mat,
}

impl DynamicsMoments {
    pub fn from_rows(rows: &[GaussianRow], num_dynamics: usize) -> Self {
        let d = rows.len();
        let k = num_dynamics;
        let means = (0..k)
            .map(|kk| Mat::from_fn(d, d, |c, j| rows[c].mean[slice_index(kk, j, k)]))
            .collect();
        let mut second = Mat::zeros(k * d, k * d);
        for r in rows {
            second += r.second_moment();
        }
        Self {
            num_dynamics: k,
            means,
            second,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.means[0].nrows()
    }

    /// `⟨B_kᵀ B_l⟩`
    pub fn cross(&self, k: usize, l: usize) -> Mat {
        let d = self.latent_dim();
        let kk = self.num_dynamics;
        Mat::from_fn(d, d, |i, j| self.second[(slice_index(k, i, kk), slice_index(l, j, kk))])
    }

    /// `Θ = Σ_ij P_ij ⟨B_{::i} B_{::j}ᵀ⟩` for a D×D weight matrix `P`.
    pub fn theta(&self, p: &Mat) -> Mat {
        let d = self.latent_dim();
        let kk = self.num_dynamics;
        let mut out = Mat::zeros(kk, kk);
        for i in 0..d {
            for j in 0..d {
                let w = p[(i, j)];
                if w == 0.0 {
                    continue;
                }
                for k in 0..kk {
                    for l in 0..kk {
                        out[(k, l)] += w * self.second[(slice_index(k, i, kk), slice_index(l, j, kk))];
                    }
                }
            }
        }
        out
    }
}

/// `⟨W⟩ = Σ_k ⟨s_k⟩⟨B_k⟩` and `⟨WᵀW⟩ = Σ_kl ⟨s sᵀ⟩_kl ⟨B_kᵀ B_l⟩`.
pub fn w_moments(s_mean: &Vector, s_second: &Mat, b: &DynamicsMoments) -> (Mat, Mat) {
    let kk = b.num_dynamics;
    let d = b.latent_dim();
    assert_eq!(s_mean.len(), kk, "mixing-weight dimension does not match K");
    assert_eq!(s_second.shape(), (kk, kk), "mixing-weight second moment is not KxK");
    let mut w = Mat::zeros(d, d);
    for (k, bk) in b.means.iter().enumerate() {
        w += bk * s_mean[k];
    }
    let mut wtw = Mat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut acc = 0.0;
            for k in 0..kk {
                for l in 0..kk {
                    acc += s_second[(k, l)] * b.second[(slice_index(k, i, kk), slice_index(l, j, kk))];
                }
            }
            wtw[(i, j)] = acc;
        }
    }
    crate::linalg::symmetrize_mut(&mut wtw);
    (w, wtw)
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

/// Initial factors: random X and C, mixing weights close to a constant
/// first component, first basis matrix at the identity, Gammas at the prior.
pub fn init_posteriors(config: &ModelConfig, data: &ObservationSet) -> Result<FactorPosteriors> {
    config.validate()?;
    let d = config.latent_dim;
    let k = config.num_dynamics;
    let m = data.rows();
    let n = data.cols();
    let sc = &config.init;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let x = GaussianChainPosterior::independent(
        (0..=n).map(|_| normal_vec(&mut rng, d, sc.x)).collect(),
        vec![Mat::identity(d, d); n + 1],
    );
    let c = (0..m)
        .map(|_| GaussianRow::new(normal_vec(&mut rng, d, sc.c), Mat::identity(d, d)))
        .collect();

    let b_var = (sc.b * sc.b).max(1e-12);
    let s_const = if config.variant == ModelVariant::TimeVarying && !config.clamp_mixing_weights {
        sc.s_constant
    } else {
        1.0
    };
    let b = (0..d)
        .map(|row| {
            let mut mean = Vector::zeros(k * d);
            for kk in 0..k {
                for j in 0..d {
                    let base = match config.variant {
                        ModelVariant::Switching => (row == j) as u8 as f64,
                        _ if kk == 0 => (row == j) as u8 as f64 / s_const,
                        _ => 0.0,
                    };
                    let noise = if kk == 0 && config.variant != ModelVariant::Switching {
                        0.0
                    } else {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        sc.b * z
                    };
                    mean[slice_index(kk, j, k)] = base + noise;
                }
            }
            GaussianRow::new(mean, Mat::identity(k * d, k * d) * b_var)
        })
        .collect();

    let mixing = match config.variant {
        ModelVariant::Lssm => MixingPosterior::Constant,
        ModelVariant::TimeVarying => {
            let means: Vec<Vector> = (0..=n)
                .map(|_| {
                    let mut v = normal_vec(&mut rng, k, sc.s);
                    v[0] = s_const;
                    v
                })
                .collect();
            let s = if config.clamp_mixing_weights {
                GaussianChainPosterior {
                    cross_covs: vec![Mat::zeros(k, k); n],
                    covs: vec![Mat::zeros(k, k); n + 1],
                    means,
                    ln_det_cov: None,
                }
            } else {
                GaussianChainPosterior::independent(means, vec![Mat::identity(k, k) * sc.s_variance; n + 1])
            };
            let a = (0..k)
                .map(|row| {
                    let mut mean = Vector::zeros(k);
                    mean[row] = 1.0;
                    GaussianRow::new(mean, Mat::identity(k, k) * sc.s_variance)
                })
                .collect();
            MixingPosterior::Continuous {
                s,
                a,
                alpha: vec![config.hyper.alpha(); k],
                clamped: config.clamp_mixing_weights,
            }
        }
        ModelVariant::Switching => {
            MixingPosterior::Switching(HmmPosterior::random(n, k, config.transition_concentration, &mut rng))
        }
    };

    let tau_len = if config.isotropic_noise { 1 } else { m.max(1) };
    Ok(FactorPosteriors {
        x,
        c,
        gamma: vec![config.hyper.gamma(); d],
        b,
        beta: vec![config.hyper.beta(); k * d],
        tau: vec![config.hyper.tau(); tau_len],
        mixing,
    })
}

/// Check that the posterior shapes agree with a configuration and data set.
pub fn check_shapes(post: &FactorPosteriors, config: &ModelConfig, data: &ObservationSet) -> Result<()> {
    let ok = post.latent_dim() == config.latent_dim
        && post.num_dynamics() == config.num_dynamics
        && post.num_rows() == data.rows()
        && post.num_steps() == data.cols()
        && post.variant() == config.variant;
    if ok {
        Ok(())
    } else {
        Err(Error::Dimension("posterior does not match configuration or data".into()))
    }
}
