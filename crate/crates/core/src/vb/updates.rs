//! Closed-form coordinate updates of every factor.

use crate::chain::{solve_chain, BlockTridiagonalPrecision};
use crate::dist::{Gamma, GaussianRow};
use crate::error::{Error, Result};
use crate::linalg::{inverse_spd, symmetrized, trace_of_product, Mat, Vector};
use crate::model::{slice_index, FactorPosteriors, MixingPosterior, ModelConfig, ObservationSet};

/// ⟨x_n x_nᵀ⟩ for every chain index.
fn x_second_moments(post: &FactorPosteriors) -> Vec<Mat> {
    (0..post.x.len()).map(|n| post.x.second_moment(n)).collect()
}

/// Expected squared residual ξ_mn = ⟨(y_mn − c_mᵀ x_n)²⟩ for data column `col`.
pub fn expected_sq_residual(y: f64, c: &GaussianRow, c2: &Mat, x_mean: &Vector, x2: &Mat) -> f64 {
    y * y - 2.0 * y * c.mean.dot(x_mean) + trace_of_product(c2, x2)
}

/// Per-row sufficient statistics `(N_m, Σ_n ξ_mn)` of the noise update.
pub fn noise_statistics(post: &FactorPosteriors, data: &ObservationSet) -> Vec<(usize, f64)> {
    let x2 = x_second_moments(post);
    (0..data.rows())
        .map(|m| {
            let c = &post.c[m];
            let c2 = c.second_moment();
            let obs = data.observed_in_row(m);
            let total = obs
                .iter()
                .map(|&n| {
                    let y = data.values()[(m, n)];
                    expected_sq_residual(y, c, &c2, &post.x.means[n + 1], &x2[n + 1])
                })
                .sum::<f64>();
            (obs.len(), total)
        })
        .collect()
}

pub fn update_tau(post: &mut FactorPosteriors, data: &ObservationSet, config: &ModelConfig) {
    let prior = config.hyper.tau();
    let stats = noise_statistics(post, data);
    if post.tau.len() == 1 {
        let count: usize = stats.iter().map(|s| s.0).sum();
        let total: f64 = stats.iter().map(|s| s.1).sum();
        post.tau[0] = Gamma::new(prior.shape + 0.5 * count as f64, prior.rate + 0.5 * total);
    } else {
        post.tau = stats
            .iter()
            .map(|&(count, total)| Gamma::new(prior.shape + 0.5 * count as f64, prior.rate + 0.5 * total))
            .collect();
    }
}

pub fn update_c(post: &mut FactorPosteriors, data: &ObservationSet) -> Result<()> {
    let d = post.latent_dim();
    let x2 = x_second_moments(post);
    let prior_prec = Mat::from_diagonal(&Vector::from_iterator(d, post.gamma.iter().map(Gamma::mean)));
    for m in 0..data.rows() {
        let tau = post.tau(m).mean();
        let mut prec = prior_prec.clone();
        let mut lin = Vector::zeros(d);
        for &n in data.observed_in_row(m) {
            prec += &x2[n + 1] * tau;
            lin += &post.x.means[n + 1] * (tau * data.values()[(m, n)]);
        }
        let cov = inverse_spd(&prec).ok_or(Error::NotPositiveDefinite { block: m })?;
        post.c[m] = GaussianRow::new(&cov * lin, cov);
    }
    Ok(())
}

pub fn update_gamma(post: &mut FactorPosteriors, config: &ModelConfig) {
    let prior = config.hyper.gamma();
    let m = post.num_rows() as f64;
    for (d, g) in post.gamma.iter_mut().enumerate() {
        let sq: f64 = post
            .c
            .iter()
            .map(|c| c.cov[(d, d)] + c.mean[d] * c.mean[d])
            .sum();
        *g = Gamma::new(prior.shape + 0.5 * m, prior.rate + 0.5 * sq);
    }
}

/// Update the row factors of the dynamics tensor.
pub fn update_b(post: &mut FactorPosteriors) -> Result<()> {
    let d = post.latent_dim();
    let k = post.num_dynamics();
    let mm = post.mixing_moments();
    let mut prec = Mat::from_diagonal(&Vector::from_iterator(k * d, post.beta.iter().map(Gamma::mean)));
    let mut lin = vec![Vector::zeros(k * d); d];
    for n in 1..=post.num_steps() {
        let prev2 = post.x.second_moment(n - 1);
        prec += prev2.kronecker(&mm.second[n - 1]);
        let cross = post.x.cross_moment(n); // ⟨x_n x_{n-1}ᵀ⟩
        let s = &mm.mean[n - 1];
        for (c, l) in lin.iter_mut().enumerate() {
            for j in 0..d {
                let v = cross[(c, j)];
                for kk in 0..k {
                    l[slice_index(kk, j, k)] += s[kk] * v;
                }
            }
        }
    }
    let cov = inverse_spd(&symmetrized(prec)).ok_or(Error::NotPositiveDefinite { block: 0 })?;
    for (row, l) in post.b.iter_mut().zip(&lin) {
        *row = GaussianRow::new(&cov * l, cov.clone());
    }
    Ok(())
}

pub fn update_beta(post: &mut FactorPosteriors, config: &ModelConfig) {
    let prior = config.hyper.beta();
    let rows = post.latent_dim() as f64;
    for (idx, g) in post.beta.iter_mut().enumerate() {
        let sq: f64 = post
            .b
            .iter()
            .map(|r| r.cov[(idx, idx)] + r.mean[idx] * r.mean[idx])
            .sum();
        *g = Gamma::new(prior.shape + 0.5 * rows, prior.rate + 0.5 * sq);
    }
}

/// Update q(X) through the block-tridiagonal chain solver.
pub fn update_x(post: &mut FactorPosteriors, data: &ObservationSet, config: &ModelConfig) -> Result<()> {
    let d = post.latent_dim();
    let n_steps = post.num_steps();
    let w = post.w_moments_all();
    let c2: Vec<Mat> = post.c.iter().map(GaussianRow::second_moment).collect();
    let eye = Mat::identity(d, d);

    let mut diag = Vec::with_capacity(n_steps + 1);
    let mut rhs = Vec::with_capacity(n_steps + 1);
    for n in 0..=n_steps {
        let mut block = if n == 0 { config.x0_precision.clone() } else { eye.clone() };
        let mut h = if n == 0 {
            &config.x0_precision * &config.x0_mean
        } else {
            Vector::zeros(d)
        };
        if n < n_steps {
            block += &w[n].1;
        }
        if n > 0 {
            for &m in data.observed_in_col(n - 1) {
                let tau = post.tau(m).mean();
                block += &c2[m] * tau;
                h += &post.c[m].mean * (tau * data.values()[(m, n - 1)]);
            }
        }
        diag.push(block);
        rhs.push(h);
    }
    let offdiag = w.iter().map(|(wn, _)| -wn).collect();
    let prec = BlockTridiagonalPrecision::new(diag, offdiag)?;
    post.x = solve_chain(&prec, &rhs)?;
    Ok(())
}

/// Update the mixing-weight chain q(S). No-op unless the model has free
/// continuous mixing weights.
pub fn update_s(post: &mut FactorPosteriors, config: &ModelConfig) -> Result<()> {
    let n_steps = post.num_steps();
    let bm = post.dynamics_moments();
    let k = post.num_dynamics();
    let (a_mean, ata) = match &post.mixing {
        MixingPosterior::Continuous { a, clamped: false, .. } => a_moments(a),
        _ => return Ok(()),
    };
    let eye = Mat::identity(k, k);
    let mut diag = Vec::with_capacity(n_steps + 1);
    let mut rhs = Vec::with_capacity(n_steps + 1);
    for n in 0..=n_steps {
        let mut block = if n == 0 { config.s0_precision.clone() } else { eye.clone() };
        let mut h = if n == 0 {
            &config.s0_precision * &config.s0_mean
        } else {
            Vector::zeros(k)
        };
        if n < n_steps {
            block += &ata;
        }
        if n > 0 {
            block += bm.theta(&post.x.second_moment(n - 1));
            let cross = post.x.cross_moment(n);
            for kk in 0..k {
                h[kk] += bm.means[kk].component_mul(&cross).sum();
            }
        }
        diag.push(symmetrized(block));
        rhs.push(h);
    }
    let prec = BlockTridiagonalPrecision::new(diag, vec![-a_mean; n_steps])?;
    let solved = solve_chain(&prec, &rhs)?;
    if let MixingPosterior::Continuous { s, .. } = &mut post.mixing {
        *s = solved;
    }
    Ok(())
}

/// `(⟨A⟩, ⟨AᵀA⟩)` from the row factors.
pub fn a_moments(rows: &[GaussianRow]) -> (Mat, Mat) {
    let k = rows.len();
    let mean = Mat::from_fn(k, k, |i, j| rows[i].mean[j]);
    let mut ata = Mat::zeros(k, k);
    for r in rows {
        ata += r.second_moment();
    }
    (mean, ata)
}

pub fn update_a(post: &mut FactorPosteriors) -> Result<()> {
    let n_steps = post.num_steps();
    let MixingPosterior::Continuous { s, a, alpha, clamped: false } = &mut post.mixing else {
        return Ok(());
    };
    let k = a.len();
    let mut prec = Mat::from_diagonal(&Vector::from_iterator(k, alpha.iter().map(Gamma::mean)));
    let mut lin = Mat::zeros(k, k); // row i: Σ_n ⟨s_in s_{n-1}⟩ᵀ
    for n in 1..=n_steps {
        prec += s.second_moment(n - 1);
        lin += s.cross_moment(n);
    }
    let cov = inverse_spd(&symmetrized(prec)).ok_or(Error::NotPositiveDefinite { block: 0 })?;
    for (i, row) in a.iter_mut().enumerate() {
        let target = lin.row(i).transpose();
        *row = GaussianRow::new(&cov * target, cov.clone());
    }
    Ok(())
}

pub fn update_alpha(post: &mut FactorPosteriors, config: &ModelConfig) {
    let prior = config.hyper.alpha();
    let MixingPosterior::Continuous { a, alpha, clamped: false, .. } = &mut post.mixing else {
        return;
    };
    let k = a.len() as f64;
    for (col, g) in alpha.iter_mut().enumerate() {
        let sq: f64 = a
            .iter()
            .map(|r| r.cov[(col, col)] + r.mean[col] * r.mean[col])
            .sum();
        *g = Gamma::new(prior.shape + 0.5 * k, prior.rate + 0.5 * sq);
    }
}
