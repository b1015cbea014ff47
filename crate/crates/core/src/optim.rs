//! Small dense BFGS maximiser used by the rotation steps.

use crate::linalg::{Mat, Vector};

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop once the gradient infinity norm is below this.
    pub grad_tol: f64,
    /// Armijo sufficient-increase constant.
    pub c1: f64,
    pub max_backtracks: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 30,
            grad_tol: 1e-8,
            c1: 1e-4,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: Vector,
    pub value: f64,
    pub iterations: usize,
}

/// Maximise `f`, which returns the value and gradient or `None` outside its
/// domain. The starting point must lie inside the domain.
pub fn maximize<F>(mut f: F, x0: Vector, opts: &BfgsOptions) -> Option<BfgsResult>
where
    F: FnMut(&Vector) -> Option<(f64, Vector)>,
{
    let n = x0.len();
    let (mut val, mut grad) = f(&x0)?;
    let mut x = x0;
    // Inverse Hessian approximation of the negated objective.
    let mut h = Mat::identity(n, n);
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it;
        if grad.amax() < opts.grad_tol {
            break;
        }
        let mut dir = &h * &grad;
        let mut slope = grad.dot(&dir);
        if !(slope > 0.0) {
            h = Mat::identity(n, n);
            dir = grad.clone();
            slope = grad.dot(&dir);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let cand = &x + &dir * step;
            if let Some((v, g)) = f(&cand) {
                if v.is_finite() && v >= val + opts.c1 * step * slope {
                    accepted = Some((cand, v, g));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, vn, gn)) = accepted else { break };
        let s = &xn - &x;
        let y = &grad - &gn; // gradient of the negated objective changes by -(gn - grad)
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (&s * s.transpose()) * (rho * (1.0 + rho * yhy)) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        let gain = vn - val;
        x = xn;
        val = vn;
        grad = gn;
        iterations = it + 1;
        if gain.abs() <= 1e-14 * val.abs().max(1.0) {
            break;
        }
    }
    Some(BfgsResult { x, value: val, iterations })
}
