//! Parameter-expansion rotations of the latent and mixing-weight spaces.
//!
//! A rotation `R` maps `x_n ↦ R x_n` and compensates in the factors that
//! multiply the latent states so the model's predictions are unchanged. Rows
//! of a factor that get mixed by `R` are projected back onto the factorised
//! family by keeping their marginals, and the ARD precisions attached to the
//! rotated factors are set to their optimal values. The objectives below are
//! the exact change of the bound as a function of `R`, up to a constant.

use crate::dist::{Gamma, GaussianRow};
use crate::error::Result;
use crate::linalg::{inverse_and_ln_det_spd, symmetrized, trace_of_product, Mat, Vector};
use crate::model::{slice_index, FactorPosteriors, MixingPosterior, ModelConfig, ObservationSet};
use crate::optim::{maximize, BfgsOptions};
use crate::vb::elbo::compute_elbo;
use crate::vb::updates::{update_alpha, update_beta, update_gamma};

/// Smallest `|det R|` considered invertible.
const MIN_ABS_DET: f64 = 1e-8;

/// Outcome of one rotation step.
#[derive(Debug, Clone)]
pub struct RotationOutcome {
    pub rotation: Mat,
    /// Whether the rotated state replaced the old one.
    pub accepted: bool,
    /// Change in the bound (zero when rejected).
    pub gain: f64,
}

/// `−Σ_d ā ln(b + ½[Uᵀ H(Q) U]_dd)` for an ARD-governed factor whose rows
/// are mixed by `R` (`mixed`) or left in place, with `Q = RᵀR` and
/// `H(Q) = MᵀQM + Σ_c Q_cc S_c`.
#[derive(Debug, Clone)]
struct ArdTerm {
    shape: f64,
    rate: f64,
    mixed: Option<(Mat, Vec<Mat>)>,
    fixed: Mat,
}

impl ArdTerm {
    fn fixed(shape: f64, rate: f64, h: Mat) -> Self {
        Self { shape, rate, mixed: None, fixed: h }
    }

    fn mixed(shape: f64, rate: f64, means: Mat, row_covs: Vec<Mat>) -> Self {
        let d = means.ncols();
        Self { shape, rate, mixed: Some((means, row_covs)), fixed: Mat::zeros(d, d) }
    }

    fn eval(&self, r: &Mat, u: &Mat, grad: &mut Mat) -> f64 {
        let h = match &self.mixed {
            None => self.fixed.clone(),
            Some((m, s)) => {
                let q = r.transpose() * r;
                let mut h = m.transpose() * &q * m;
                for (c, sc) in s.iter().enumerate() {
                    h += sc * q[(c, c)];
                }
                h
            }
        };
        let uhu = u.transpose() * &h * u;
        let n = uhu.nrows();
        let mut val = 0.0;
        let mut f = Vector::zeros(n);
        for d in 0..n {
            let hd = self.rate + 0.5 * uhu[(d, d)];
            val -= self.shape * hd.ln();
            f[d] = self.shape / hd;
        }
        let p = u * Mat::from_diagonal(&f) * u.transpose();
        *grad += (&p * &h * u).transpose();
        if let Some((m, s)) = &self.mixed {
            let mut j = m * &p * m.transpose();
            for (c, sc) in s.iter().enumerate() {
                j[(c, c)] += trace_of_product(&p, sc);
            }
            *grad -= r * j;
        }
        val
    }
}

/// `½ Σ_c' ln det(Σ_c R²_{c'c} Σ_c)`: entropy of rows mixed by `R` after
/// projection (without the contribution of the inner linear map).
#[derive(Debug, Clone)]
struct ProjectedEntropy {
    covs: Vec<Mat>,
}

impl ProjectedEntropy {
    fn eval(&self, r: &Mat, grad: &mut Mat) -> Option<f64> {
        let n = self.covs.len();
        let mut val = 0.0;
        for cp in 0..n {
            let mut a = Mat::zeros(self.covs[0].nrows(), self.covs[0].ncols());
            for c in 0..n {
                a += &self.covs[c] * (r[(cp, c)] * r[(cp, c)]);
            }
            let (inv, ld) = inverse_and_ln_det_spd(&symmetrized(a))?;
            val += 0.5 * ld;
            for c in 0..n {
                grad[(cp, c)] += r[(cp, c)] * trace_of_product(&inv, &self.covs[c]);
            }
        }
        Some(val)
    }
}

/// Terms of a rotated Gaussian chain: initial-state prior and expected
/// transition residual `−½ tr(R Z Rᵀ)`.
#[derive(Debug, Clone)]
struct ChainTerm {
    prior_prec: Mat,
    prior_mean: Vector,
    first_mean: Vector,
    first_second: Mat,
    z: Mat,
}

impl ChainTerm {
    fn eval(&self, r: &Mat, grad: &mut Mat) -> f64 {
        let rx = r * &self.first_second;
        let lin = &self.prior_prec * &self.prior_mean;
        let val = -0.5 * trace_of_product(&self.prior_prec, &(&rx * r.transpose()))
            + lin.dot(&(r * &self.first_mean))
            - 0.5 * trace_of_product(&self.z, &(r.transpose() * r));
        *grad += -&self.prior_prec * &rx + &lin * self.first_mean.transpose() - r * &self.z;
        val
    }
}

/// Rotation objective `L(R)` with its analytic gradient.
#[derive(Debug, Clone)]
pub struct RotationObjective {
    dim: usize,
    log_det_coef: f64,
    chain: ChainTerm,
    ard: Vec<ArdTerm>,
    entropy: Option<ProjectedEntropy>,
}

impl RotationObjective {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(L(R), ∂L/∂R)`, `None` when `R` is (numerically) singular.
    pub fn value_and_gradient(&self, r: &Mat) -> Option<(f64, Mat)> {
        let lu = r.clone().lu();
        let det = lu.determinant();
        if !(det.abs() > MIN_ABS_DET) {
            return None;
        }
        let u = lu.try_inverse()?;
        let mut grad = u.transpose() * self.log_det_coef;
        let mut val = self.log_det_coef * det.abs().ln();
        val += self.chain.eval(r, &mut grad);
        for t in &self.ard {
            val += t.eval(r, &u, &mut grad);
        }
        if let Some(e) = &self.entropy {
            val += e.eval(r, &mut grad)?;
        }
        if val.is_finite() {
            Some((val, grad))
        } else {
            None
        }
    }

    pub fn value(&self, r: &Mat) -> Option<f64> {
        self.value_and_gradient(r).map(|v| v.0)
    }

    /// Maximise from the identity; returns the best rotation found.
    pub fn optimize(&self, opts: &BfgsOptions) -> Mat {
        let d = self.dim;
        let f = |v: &Vector| {
            let r = Mat::from_column_slice(d, d, v.as_slice());
            self.value_and_gradient(&r)
                .map(|(val, g)| (val, Vector::from_column_slice(g.as_slice())))
        };
        let start = Vector::from_column_slice(Mat::identity(d, d).as_slice());
        match maximize(f, start.clone(), opts) {
            Some(res) => Mat::from_column_slice(d, d, res.x.as_slice()),
            None => Mat::identity(d, d),
        }
    }
}

fn ard_shape(prior: &Gamma, count: usize) -> f64 {
    prior.shape + 0.5 * count as f64
}

/// Mean of basis matrix `k` (D×D, rows `c`) and the D×D covariance blocks
/// of each row's slice restricted to that `k`.
fn basis_blocks(post: &FactorPosteriors) -> (Vec<Mat>, Vec<Vec<Mat>>) {
    let d = post.latent_dim();
    let k = post.num_dynamics();
    let means = (0..k)
        .map(|kk| Mat::from_fn(d, d, |c, j| post.b[c].mean[slice_index(kk, j, k)]))
        .collect();
    let blocks = (0..k)
        .map(|kk| {
            post.b
                .iter()
                .map(|row| {
                    Mat::from_fn(d, d, |i, j| row.cov[(slice_index(kk, i, k), slice_index(kk, j, k))])
                })
                .collect()
        })
        .collect();
    (means, blocks)
}

/// Objective of the latent-space rotation `x ↦ R x`.
pub fn x_rotation_objective(post: &FactorPosteriors, config: &ModelConfig) -> RotationObjective {
    let d = post.latent_dim();
    let k = post.num_dynamics();
    let n_steps = post.num_steps();
    let mm = post.mixing_moments();
    let (bmeans, bblocks) = basis_blocks(post);

    // Z = Σ_n E[(x_n − W_n x_{n−1})(x_n − W_n x_{n−1})ᵀ]
    let mut z = Mat::zeros(d, d);
    let mut weighted_cross = vec![Mat::zeros(d, d); k]; // Σ_n ⟨s_nk⟩⟨x_n x_{n−1}ᵀ⟩
    let mut weighted_prev = vec![Mat::zeros(d, d); k * k]; // Σ_n ⟨s_nk s_nl⟩⟨x_{n−1}x_{n−1}ᵀ⟩
    let mut omega = Mat::zeros(k * d, k * d);
    for n in 1..=n_steps {
        z += post.x.second_moment(n);
        let cross = post.x.cross_moment(n);
        let prev = post.x.second_moment(n - 1);
        let s = &mm.mean[n - 1];
        let ss = &mm.second[n - 1];
        for kk in 0..k {
            weighted_cross[kk] += &cross * s[kk];
            for l in 0..k {
                weighted_prev[kk * k + l] += &prev * ss[(kk, l)];
            }
        }
        omega += prev.kronecker(ss);
    }
    for kk in 0..k {
        let t = &bmeans[kk] * weighted_cross[kk].transpose();
        z -= &t + t.transpose();
        for l in 0..k {
            z += &bmeans[kk] * &weighted_prev[kk * k + l] * bmeans[l].transpose();
        }
    }
    for c in 0..d {
        z[(c, c)] += trace_of_product(&post.b[c].cov, &omega);
    }

    let mut c2 = Mat::zeros(d, d);
    for row in &post.c {
        c2 += row.second_moment();
    }

    let m = post.num_rows();
    let mut ard = vec![ArdTerm::fixed(ard_shape(&config.hyper.gamma(), m), config.hyper.b_gamma, c2)];
    for kk in 0..k {
        ard.push(ArdTerm::mixed(
            ard_shape(&config.hyper.beta(), d),
            config.hyper.b_beta,
            bmeans[kk].clone(),
            bblocks[kk].clone(),
        ));
    }

    RotationObjective {
        dim: d,
        log_det_coef: (n_steps + 1) as f64 - m as f64 - (d * k) as f64,
        chain: ChainTerm {
            prior_prec: config.x0_precision.clone(),
            prior_mean: config.x0_mean.clone(),
            first_mean: post.x.means[0].clone(),
            first_second: post.x.second_moment(0),
            z: symmetrized(z),
        },
        ard,
        entropy: Some(ProjectedEntropy { covs: post.b.iter().map(|r| r.cov.clone()).collect() }),
    }
}

/// Objective of the mixing-weight rotation `s ↦ R s`; `None` unless the
/// model has free continuous mixing weights.
pub fn s_rotation_objective(post: &FactorPosteriors, config: &ModelConfig) -> Option<RotationObjective> {
    let MixingPosterior::Continuous { s, a, clamped: false, .. } = &post.mixing else {
        return None;
    };
    let d = post.latent_dim();
    let k = post.num_dynamics();
    let n_steps = post.num_steps();
    let a_mean = Mat::from_fn(k, k, |i, j| a[i].mean[j]);

    let mut z = Mat::zeros(k, k);
    let mut prev_sum = Mat::zeros(k, k);
    for n in 1..=n_steps {
        z += s.second_moment(n);
        let t = &a_mean * s.cross_moment(n).transpose();
        z -= &t + t.transpose();
        prev_sum += s.second_moment(n - 1);
    }
    z += &a_mean * &prev_sum * a_mean.transpose();
    for (kk, row) in a.iter().enumerate() {
        z[(kk, kk)] += trace_of_product(&row.cov, &prev_sum);
    }

    let mut ard = vec![ArdTerm::mixed(
        ard_shape(&config.hyper.alpha(), k),
        config.hyper.b_alpha,
        a_mean,
        a.iter().map(|r| r.cov.clone()).collect(),
    )];
    // G_d = Σ_c ⟨b_{:cd} b_{:cd}ᵀ⟩
    for j in 0..d {
        let mut g = Mat::zeros(k, k);
        for row in &post.b {
            let second = row.second_moment();
            g += Mat::from_fn(k, k, |p, q| second[(slice_index(p, j, k), slice_index(q, j, k))]);
        }
        ard.push(ArdTerm::fixed(ard_shape(&config.hyper.beta(), d), config.hyper.b_beta, g));
    }

    Some(RotationObjective {
        dim: k,
        log_det_coef: (n_steps + 1) as f64 - k as f64 - (d * d) as f64,
        chain: ChainTerm {
            prior_prec: config.s0_precision.clone(),
            prior_mean: config.s0_mean.clone(),
            first_mean: s.means[0].clone(),
            first_second: s.second_moment(0),
            z: symmetrized(z),
        },
        ard,
        entropy: Some(ProjectedEntropy { covs: a.iter().map(|r| r.cov.clone()).collect() }),
    })
}

/// Rows `c'` of `Σ_c R_{c'c} row_c` mapped through `t`, keeping marginals.
fn project_rows(rows: &[GaussianRow], r: &Mat, t: &Mat) -> Vec<GaussianRow> {
    let n = rows.len();
    let tt = t.transpose();
    (0..n)
        .map(|cp| {
            let p = rows[0].dim();
            let mut mean = Vector::zeros(p);
            let mut cov = Mat::zeros(p, p);
            for c in 0..n {
                let w = r[(cp, c)];
                mean += &rows[c].mean * w;
                cov += &rows[c].cov * (w * w);
            }
            GaussianRow::new(t * mean, symmetrized(t * cov * &tt))
        })
        .collect()
}

fn map_rows(rows: &mut [GaussianRow], t: &Mat) {
    let tt = t.transpose();
    for row in rows.iter_mut() {
        row.mean = t * &row.mean;
        row.cov = symmetrized(t * &row.cov * &tt);
    }
}

/// Apply the latent rotation to the factors and re-optimise γ and β.
pub fn apply_x_rotation(post: &mut FactorPosteriors, config: &ModelConfig, r: &Mat) {
    let k = post.num_dynamics();
    let u = r.clone().try_inverse().expect("rotation must be invertible");
    let ln_det = r.determinant().abs().ln();
    post.x = post.x.transform(r, ln_det);
    map_rows(&mut post.c, &u.transpose());
    let t = u.transpose().kronecker(&Mat::identity(k, k));
    post.b = project_rows(&post.b, r, &t);
    update_gamma(post, config);
    update_beta(post, config);
}

/// Apply the mixing-weight rotation and re-optimise α and β.
pub fn apply_s_rotation(post: &mut FactorPosteriors, config: &ModelConfig, r: &Mat) {
    let d = post.latent_dim();
    let u = r.clone().try_inverse().expect("rotation must be invertible");
    let ln_det = r.determinant().abs().ln();
    if let MixingPosterior::Continuous { s, a, clamped: false, .. } = &mut post.mixing {
        *s = s.transform(r, ln_det);
        *a = project_rows(a, r, &u.transpose());
    } else {
        return;
    }
    map_rows(&mut post.b, &Mat::identity(d, d).kronecker(&u.transpose()));
    update_alpha(post, config);
    update_beta(post, config);
}

fn rotate_checked<F>(
    post: &mut FactorPosteriors,
    data: &ObservationSet,
    config: &ModelConfig,
    objective: RotationObjective,
    apply: F,
) -> Result<RotationOutcome>
where
    F: Fn(&mut FactorPosteriors, &ModelConfig, &Mat),
{
    let r = objective.optimize(&BfgsOptions::default());
    let identity = Mat::identity(objective.dim(), objective.dim());
    let predicted = match (objective.value(&r), objective.value(&identity)) {
        (Some(a), Some(b)) => a - b,
        _ => 0.0,
    };
    if !(predicted > 0.0) {
        return Ok(RotationOutcome { rotation: identity, accepted: false, gain: 0.0 });
    }
    let before = compute_elbo(post, data, config)?;
    let mut candidate = post.clone();
    apply(&mut candidate, config, &r);
    let after = match compute_elbo(&candidate, data, config) {
        Ok(v) => v,
        Err(_) => return Ok(RotationOutcome { rotation: identity, accepted: false, gain: 0.0 }),
    };
    if after >= before {
        *post = candidate;
        Ok(RotationOutcome { rotation: r, accepted: true, gain: after - before })
    } else {
        log::debug!("rotation rejected: bound would drop by {}", before - after);
        Ok(RotationOutcome { rotation: identity, accepted: false, gain: 0.0 })
    }
}

/// Optimise and apply the latent rotation; the state is only replaced when
/// the full bound does not decrease.
pub fn rotate_x(post: &mut FactorPosteriors, data: &ObservationSet, config: &ModelConfig) -> Result<RotationOutcome> {
    let objective = x_rotation_objective(post, config);
    rotate_checked(post, data, config, objective, apply_x_rotation)
}

/// Same for the mixing-weight rotation (no-op for other mixing models).
pub fn rotate_s(post: &mut FactorPosteriors, data: &ObservationSet, config: &ModelConfig) -> Result<RotationOutcome> {
    match s_rotation_objective(post, config) {
        Some(objective) => rotate_checked(post, data, config, objective, apply_s_rotation),
        None => {
            let k = post.num_dynamics();
            Ok(RotationOutcome { rotation: Mat::identity(k, k), accepted: false, gain: 0.0 })
        }
    }
}
