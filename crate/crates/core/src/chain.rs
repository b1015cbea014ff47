//! Posterior moments of a first-order Gaussian Markov chain.
//!
//! The joint precision of `x_0 … x_N` is block-tridiagonal. A forward block
//! Cholesky sweep followed by a backward recursion yields every marginal
//! covariance and every lag-one cross-covariance in `O(N·d³)` time without
//! forming the dense `(N+1)d × (N+1)d` matrix.

use nalgebra::{Cholesky, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ln_det_from_cholesky, symmetrize_mut, Mat, Vector};

/// Block-tridiagonal precision of a Gaussian chain of length `N+1`.
///
/// `offdiag[n-1]` holds block `(n, n-1)`; block `(n-1, n)` is its transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonalPrecision {
    pub diag: Vec<Mat>,
    pub offdiag: Vec<Mat>,
}

impl BlockTridiagonalPrecision {
    pub fn new(diag: Vec<Mat>, offdiag: Vec<Mat>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Dimension("chain needs at least one block".into()));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::Dimension(format!(
                "{} diagonal blocks need {} off-diagonal blocks, got {}",
                diag.len(),
                diag.len() - 1,
                offdiag.len()
            )));
        }
        let d = diag[0].nrows();
        for (n, b) in diag.iter().enumerate() {
            if b.nrows() != d || b.ncols() != d {
                return Err(Error::Dimension(format!("diagonal block {n} is not {d}x{d}")));
            }
        }
        for (n, b) in offdiag.iter().enumerate() {
            if b.nrows() != d || b.ncols() != d {
                return Err(Error::Dimension(format!(
                    "off-diagonal block {} is not {d}x{d}",
                    n + 1
                )));
            }
        }
        Ok(Self { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag[0].nrows()
    }

    /// Number of blocks, `N+1`.
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Assemble the full dense matrix. Intended for tests and diagnostics.
    pub fn to_dense(&self) -> Mat {
        let d = self.dim();
        let t = self.len();
        let mut full = Mat::zeros(d * t, d * t);
        for (n, b) in self.diag.iter().enumerate() {
            full.view_mut((n * d, n * d), (d, d)).copy_from(b);
        }
        for (i, b) in self.offdiag.iter().enumerate() {
            let n = i + 1;
            full.view_mut((n * d, (n - 1) * d), (d, d)).copy_from(b);
            full.view_mut(((n - 1) * d, n * d), (d, d))
                .copy_from(&b.transpose());
        }
        full
    }
}

/// Marginal and lag-one moments of a Gaussian chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianChainPosterior {
    pub means: Vec<Vector>,
    pub covs: Vec<Mat>,
    /// `cross_covs[n-1] = Cov(x_n, x_{n-1})`.
    pub cross_covs: Vec<Mat>,
    /// log-determinant of the joint covariance; `None` for degenerate
    /// (point-mass) chains.
    #[serde(default)]
    pub ln_det_cov: Option<f64>,
}

impl GaussianChainPosterior {
    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// Independent blocks with the given marginals (zero cross-covariance).
    pub fn independent(means: Vec<Vector>, covs: Vec<Mat>) -> Self {
        let d = means[0].len();
        let n = means.len();
        let ln_det_cov = covs
            .iter()
            .map(crate::linalg::ln_det_spd)
            .sum::<Option<f64>>();
        Self {
            means,
            covs,
            cross_covs: vec![Mat::zeros(d, d); n.saturating_sub(1)],
            ln_det_cov,
        }
    }

    /// ⟨x_n x_nᵀ⟩
    pub fn second_moment(&self, n: usize) -> Mat {
        &self.covs[n] + &self.means[n] * self.means[n].transpose()
    }

    /// ⟨x_n x_{n-1}ᵀ⟩ for `n ≥ 1`.
    pub fn cross_moment(&self, n: usize) -> Mat {
        &self.cross_covs[n - 1] + &self.means[n] * self.means[n - 1].transpose()
    }

    /// Differential entropy of the joint distribution, when non-degenerate.
    pub fn entropy(&self) -> Option<f64> {
        let total = (self.len() * self.dim()) as f64;
        self.ln_det_cov
            .map(|ld| 0.5 * ld + 0.5 * total * (1.0 + (2.0 * std::f64::consts::PI).ln()))
    }

    /// Apply the linear map `x_n ↦ R x_n` to every time slice.
    pub fn transform(&self, r: &Mat, ln_abs_det_r: f64) -> Self {
        let rt = r.transpose();
        let mut covs: Vec<Mat> = self.covs.iter().map(|c| r * c * &rt).collect();
        covs.iter_mut().for_each(symmetrize_mut);
        Self {
            means: self.means.iter().map(|m| r * m).collect(),
            covs,
            cross_covs: self.cross_covs.iter().map(|c| r * c * &rt).collect(),
            ln_det_cov: self
                .ln_det_cov
                .map(|ld| ld + 2.0 * self.len() as f64 * ln_abs_det_r),
        }
    }
}

/// Solve for the chain posterior `N(J⁻¹ h, J⁻¹)` given precision `J` and
/// linear term `h`.
pub fn solve_chain(prec: &BlockTridiagonalPrecision, rhs: &[Vector]) -> Result<GaussianChainPosterior> {
    let t = prec.len();
    let d = prec.dim();
    if rhs.len() != t {
        return Err(Error::Dimension(format!(
            "chain has {t} blocks but {} right-hand sides",
            rhs.len()
        )));
    }
    if let Some(n) = rhs.iter().position(|h| h.len() != d) {
        return Err(Error::Dimension(format!("right-hand side {n} is not length {d}")));
    }

    // Forward sweep: Schur complements F_n and reduced linear terms.
    let mut factors: Vec<Cholesky<f64, Dyn>> = Vec::with_capacity(t);
    let mut reduced: Vec<Vector> = Vec::with_capacity(t);
    let mut ln_det_prec = 0.0;
    for n in 0..t {
        let (schur, h) = if n == 0 {
            (prec.diag[0].clone(), rhs[0].clone())
        } else {
            let off = &prec.offdiag[n - 1];
            let prev = &factors[n - 1];
            // F_{n-1}⁻¹ O_nᵀ
            let gain = prev.solve(&off.transpose());
            let mut schur = &prec.diag[n] - off * &gain;
            symmetrize_mut(&mut schur);
            let h = &rhs[n] - off * prev.solve(&reduced[n - 1]);
            (schur, h)
        };
        let chol = Cholesky::new(schur).ok_or(Error::NotPositiveDefinite { block: n })?;
        ln_det_prec += ln_det_from_cholesky(&chol);
        factors.push(chol);
        reduced.push(h);
    }

    // Backward recursion.
    let mut means = vec![Vector::zeros(d); t];
    let mut covs = vec![Mat::zeros(d, d); t];
    let mut cross_covs = vec![Mat::zeros(d, d); t - 1];
    means[t - 1] = factors[t - 1].solve(&reduced[t - 1]);
    covs[t - 1] = factors[t - 1].inverse();
    symmetrize_mut(&mut covs[t - 1]);
    for n in (0..t - 1).rev() {
        let off_next = &prec.offdiag[n];
        let f_inv = factors[n].inverse();
        // x_n | x_{n+1} = G x_{n+1} + e,  G = -F_n⁻¹ O_{n+1}ᵀ,  Cov(e) = F_n⁻¹
        let g = -(&f_inv * off_next.transpose());
        means[n] = factors[n].solve(&(&reduced[n] - off_next.transpose() * &means[n + 1]));
        let cross = &covs[n + 1] * g.transpose();
        let mut cov = f_inv + &g * &cross;
        symmetrize_mut(&mut cov);
        covs[n] = cov;
        cross_covs[n] = cross;
    }

    Ok(GaussianChainPosterior {
        means,
        covs,
        cross_covs,
        ln_det_cov: Some(-ln_det_prec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Random diagonally dominated block-tridiagonal precision.
    pub(crate) fn random_chain(
        rng: &mut ChaCha8Rng,
        t: usize,
        d: usize,
    ) -> (BlockTridiagonalPrecision, Vec<Vector>) {
        let offdiag: Vec<Mat> = (1..t)
            .map(|_| Mat::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let diag = (0..t)
            .map(|_| {
                let a = Mat::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
                &a * a.transpose() + Mat::identity(d, d) * (2.0 * d as f64 + 1.0)
            })
            .collect();
        let rhs = (0..t)
            .map(|_| Vector::from_fn(d, |_, _| rng.random_range(-3.0..3.0)))
            .collect();
        (BlockTridiagonalPrecision::new(diag, offdiag).unwrap(), rhs)
    }

    #[test]
    fn single_block_diagonal() {
        let prec = BlockTridiagonalPrecision::new(vec![Mat::identity(2, 2) * 2.0], vec![]).unwrap();
        let post = solve_chain(&prec, &[Vector::from_vec(vec![2.0, 4.0])]).unwrap();
        assert!((post.means[0][0] - 1.0).abs() < 1e-15);
        assert!((post.means[0][1] - 2.0).abs() < 1e-15);
        assert!(max_abs(&(&post.covs[0] - Mat::identity(2, 2) * 0.5)) < 1e-15);
        assert!(post.cross_covs.is_empty());
    }

    #[test]
    fn identity_blocks_zero_rhs() {
        let t = 6;
        let prec = BlockTridiagonalPrecision::new(
            vec![Mat::identity(3, 3); t],
            vec![Mat::zeros(3, 3); t - 1],
        )
        .unwrap();
        let post = solve_chain(&prec, &vec![Vector::zeros(3); t]).unwrap();
        for n in 0..t {
            assert_eq!(post.means[n].norm(), 0.0);
            assert!(max_abs(&(&post.covs[n] - Mat::identity(3, 3))) < 1e-15);
        }
        assert!(post.ln_det_cov.unwrap().abs() < 1e-14);
    }

    #[test]
    fn matches_dense_inverse_n10_d3() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (prec, rhs) = random_chain(&mut rng, 11, 3);
        let dense = prec.to_dense();
        let inv = dense.clone().try_inverse().unwrap();
        let mut h = Vector::zeros(33);
        for (n, r) in rhs.iter().enumerate() {
            h.rows_mut(n * 3, 3).copy_from(r);
        }
        let mean = &inv * h;
        let post = solve_chain(&prec, &rhs).unwrap();
        for n in 0..11 {
            assert!((&post.means[n] - mean.rows(n * 3, 3)).amax() < 1e-10);
            assert!(max_abs(&(&post.covs[n] - inv.view((n * 3, n * 3), (3, 3)))) < 1e-10);
            if n > 0 {
                let c = inv.view((n * 3, (n - 1) * 3), (3, 3)).into_owned();
                assert!(max_abs(&(&post.cross_covs[n - 1] - c)) < 1e-10);
            }
        }
        let ld = dense.determinant().ln();
        assert!((post.ln_det_cov.unwrap() + ld).abs() < 1e-9);
    }

    #[test]
    fn reports_failing_block() {
        let mut diag = vec![Mat::identity(2, 2); 4];
        diag[2] = -Mat::identity(2, 2);
        let prec = BlockTridiagonalPrecision::new(diag, vec![Mat::zeros(2, 2); 3]).unwrap();
        match solve_chain(&prec, &vec![Vector::zeros(2); 4]) {
            Err(Error::NotPositiveDefinite { block }) => assert_eq!(block, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_rhs_length_mismatch() {
        let prec = BlockTridiagonalPrecision::new(vec![Mat::identity(2, 2); 2], vec![Mat::zeros(2, 2)])
            .unwrap();
        assert!(matches!(
            solve_chain(&prec, &[Vector::zeros(2)]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn entropy_of_independent_matches_solved() {
        let prec = BlockTridiagonalPrecision::new(
            vec![Mat::identity(2, 2) * 4.0; 3],
            vec![Mat::zeros(2, 2); 2],
        )
        .unwrap();
        let solved = solve_chain(&prec, &vec![Vector::zeros(2); 3]).unwrap();
        let indep = GaussianChainPosterior::independent(
            vec![Vector::zeros(2); 3],
            vec![Mat::identity(2, 2) * 0.25; 3],
        );
        assert!((solved.entropy().unwrap() - indep.entropy().unwrap()).abs() < 1e-12);
    }
}
