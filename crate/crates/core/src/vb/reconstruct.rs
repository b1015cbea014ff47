use crate::linalg::{trace_of_product, Mat};
use crate::model::FactorPosteriors;

/// Posterior mean and variance of every entry of the noise-free signal
/// `c_mᵀ x_n` (data column `n` is latent state `n + 1`). With `predictive`
/// the expected noise variance `1/⟨τ_m⟩` is added.
pub fn reconstruct(post: &FactorPosteriors, predictive: bool) -> (Mat, Mat) {
    let m = post.num_rows();
    let n = post.num_steps();
    let c2: Vec<Mat> = post.c.iter().map(|c| c.second_moment()).collect();
    let mut mean = Mat::zeros(m, n);
    let mut var = Mat::zeros(m, n);
    for t in 0..n {
        let x = &post.x.means[t + 1];
        let x2 = post.x.second_moment(t + 1);
        for row in 0..m {
            let mu = post.c[row].mean.dot(x);
            mean[(row, t)] = mu;
            let mut v = (trace_of_product(&c2[row], &x2) - mu * mu).max(0.0);
            if predictive {
                v += 1.0 / post.tau(row).mean();
            }
            var[(row, t)] = v;
        }
    }
    (mean, var)
}
