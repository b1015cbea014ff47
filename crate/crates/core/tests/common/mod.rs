#![allow(dead_code)]

use lssm_tvd::linalg::{Mat, Vector};
use lssm_tvd::model::{FactorPosteriors, ModelConfig, ModelVariant, ObservationSet};
use lssm_tvd::vb::updates::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn randn(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Data from a slowly rotating 2-D latent oscillator observed through a
/// random loading matrix, with a fraction of entries missing.
pub fn oscillator_data(m: usize, n: usize, missing: f64, seed: u64) -> ObservationSet {
    let mut r = rng(seed);
    let c = Mat::from_fn(m, 2, |_, _| randn(&mut r));
    let mut x = Vector::from_vec(vec![1.0, 0.0]);
    let mut values = Mat::zeros(m, n);
    for t in 0..n {
        let angle = 0.2 + 0.1 * (t as f64 / n as f64);
        let (s, co) = angle.sin_cos();
        let w = Mat::from_row_slice(2, 2, &[co, -s, s, co]) * 0.99;
        x = w * x + Vector::from_fn(2, |_, _| 0.05 * randn(&mut r));
        let y = &c * &x;
        for i in 0..m {
            values[(i, t)] = y[i] + 0.1 * randn(&mut r);
        }
    }
    let mask: Vec<Vec<bool>> = (0..m)
        .map(|_| (0..n).map(|_| r.random::<f64>() >= missing).collect())
        .collect();
    ObservationSet::new(values, &mask).unwrap()
}

pub fn config(variant: ModelVariant, d: usize, k: usize, seed: u64) -> ModelConfig {
    ModelConfig::new(variant, d, k).with_seed(seed)
}

/// Run a few full coordinate sweeps without rotations, so every
/// hyperparameter is at its optimum given the other factors.
pub fn sweeps(post: &mut FactorPosteriors, data: &ObservationSet, config: &ModelConfig, n: usize) {
    for _ in 0..n {
        update_x(post, data, config).unwrap();
        update_s(post, config).unwrap();
        if let lssm_tvd::model::MixingPosterior::Switching(_) = post.mixing {
            lssm_tvd::switching::update_z(post);
            if let lssm_tvd::model::MixingPosterior::Switching(h) = &mut post.mixing {
                lssm_tvd::switching::update_transition(h);
            }
        }
        update_c(post, data).unwrap();
        update_b(post).unwrap();
        update_a(post).unwrap();
        update_tau(post, data, config);
        update_gamma(post, config);
        update_beta(post, config);
        update_alpha(post, config);
    }
}
