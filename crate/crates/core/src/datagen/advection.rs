//! Stochastic advection–diffusion on a periodic unit square.

use nalgebra::SymmetricEigen;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::ObservationSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdvectionDiffusionSpec {
    /// Grid points per side; spacing is `1 / grid`.
    pub grid: usize,
    pub diffusivity: f64,
    /// Velocity persistence per kept sample, in (0, 1).
    pub rho: f64,
    /// Stationary standard deviation of each velocity component.
    pub velocity_std: f64,
    pub source_length_scale: f64,
    /// Source intensity: the field receives `source_std · √dt · R` per step
    /// with `R` a unit-variance Gaussian-process draw.
    pub source_std: f64,
    pub dt: f64,
    /// Integration steps between kept samples.
    pub substeps: usize,
    /// Kept samples discarded at the start so the field is near stationarity.
    pub burn_in: usize,
    pub n_kept: usize,
    pub sensors: usize,
    pub obs_noise_std: f64,
    pub seed: u64,
}

impl Default for AdvectionDiffusionSpec {
    fn default() -> Self {
        Self {
            grid: 32,
            diffusivity: 0.015,
            rho: 0.99,
            velocity_std: 1.0,
            source_length_scale: 0.2,
            source_std: 1.0,
            dt: 0.00075,
            substeps: 20,
            burn_in: 100,
            n_kept: 500,
            sensors: 50,
            obs_noise_std: 0.1,
            seed: 0,
        }
    }
}

/// Output of one simulation.
#[derive(Debug, Clone)]
pub struct AdvectionDiffusionData {
    /// Kept fields, each `grid × grid` (row = y index, column = x index).
    pub fields: Vec<Mat>,
    /// Velocity in force during the interval leading to each kept sample.
    pub velocities: Vec<[f64; 2]>,
    /// Grid nodes `(iy, ix)` of the sensors.
    pub sensor_coords: Vec<(usize, usize)>,
    /// Noiseless field at the sensors, `M × N`.
    pub truth: Mat,
    pub observations: ObservationSet,
}

impl AdvectionDiffusionSpec {
    pub fn spacing(&self) -> f64 {
        1.0 / self.grid as f64
    }

    fn check_static(&self) -> Result<()> {
        if self.grid < 3 {
            return Err(Error::Config("grid must have at least 3 points per side".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Config("velocity persistence must lie in (0, 1)".into()));
        }
        let nonneg = [self.diffusivity, self.velocity_std, self.source_std, self.obs_noise_std];
        if nonneg.iter().any(|v| !(*v >= 0.0)) || !(self.dt > 0.0) || !(self.source_length_scale > 0.0) {
            return Err(Error::Config("simulation constants must be non-negative (dt, length-scale positive)".into()));
        }
        if self.substeps == 0 {
            return Err(Error::Config("substeps must be positive".into()));
        }
        if self.sensors > self.grid * self.grid {
            return Err(Error::Config("more sensors than grid nodes".into()));
        }
        let h = self.spacing();
        let diff = self.diffusivity * self.dt / (h * h);
        if diff > 0.25 {
            return Err(Error::Unstable(format!("diffusion number δ·dt/h² = {diff:.4} exceeds 0.25")));
        }
        Ok(())
    }

    fn check_velocity(&self, v: [f64; 2]) -> Result<()> {
        let h = self.spacing();
        let vmax = v[0].abs().max(v[1].abs());
        let courant = vmax * self.dt / h;
        if courant > 0.5 {
            return Err(Error::Unstable(format!("Courant number max|v|·dt/h = {courant:.4} exceeds 0.5")));
        }
        // forward Euler with central advection needs v²·dt ≤ 2δ per axis
        let v2 = v[0] * v[0] + v[1] * v[1];
        if v2 * self.dt > 2.0 * self.diffusivity && vmax > 0.0 {
            return Err(Error::Unstable(format!(
                "advection-diffusion bound |v|²·dt = {:.4e} exceeds 2δ = {:.4e}",
                v2 * self.dt,
                2.0 * self.diffusivity
            )));
        }
        Ok(())
    }
}

/// Symmetric square root of the periodic squared-exponential kernel on a
/// 1-D grid (negative eigenvalues from the wrap-around are clamped).
fn periodic_kernel_sqrt(g: usize, length_scale: f64) -> Mat {
    let h = 1.0 / g as f64;
    let k = Mat::from_fn(g, g, |i, j| {
        let d = (i as f64 - j as f64).abs() * h;
        let d = d.min(1.0 - d);
        (-0.5 * d * d / (length_scale * length_scale)).exp()
    });
    let eig = SymmetricEigen::new(k);
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * Mat::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose()
}

fn gp_draw(l: &Mat, rng: &mut ChaCha8Rng) -> Mat {
    let g = l.nrows();
    let z = Mat::from_fn(g, g, |_, _| StandardNormal.sample(rng));
    l * z * l.transpose()
}

/// One explicit Euler step with periodic boundaries.
fn euler_step(f: &Mat, spec: &AdvectionDiffusionSpec, v: [f64; 2], source: Option<&Mat>) -> Mat {
    let g = spec.grid;
    let h = spec.spacing();
    let lap_c = spec.diffusivity / (h * h);
    let adv_c = 0.5 / h;
    let mut out = f.clone();
    for i in 0..g {
        let up = (i + g - 1) % g;
        let down = (i + 1) % g;
        for j in 0..g {
            let left = (j + g - 1) % g;
            let right = (j + 1) % g;
            let c = f[(i, j)];
            let lap = f[(up, j)] + f[(down, j)] + f[(i, left)] + f[(i, right)] - 4.0 * c;
            let dfdx = (f[(i, right)] - f[(i, left)]) * adv_c;
            let dfdy = (f[(down, j)] - f[(up, j)]) * adv_c;
            out[(i, j)] += spec.dt * (lap_c * lap - v[0] * dfdx - v[1] * dfdy);
        }
    }
    if let Some(s) = source {
        out += s * (spec.source_std * spec.dt.sqrt());
    }
    out
}

/// AR(1) velocity components started from their stationary distribution.
fn velocity_path(spec: &AdvectionDiffusionSpec, len: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let innov = (1.0 - spec.rho).sqrt() * spec.velocity_std;
    let sr = spec.rho.sqrt();
    let v0: [f64; 2] = [StandardNormal.sample(rng), StandardNormal.sample(rng)];
    let mut v = [spec.velocity_std * v0[0], spec.velocity_std * v0[1]];
    let mut path = Vec::with_capacity(len);
    for _ in 0..len {
        path.push(v);
        let xi: [f64; 2] = [StandardNormal.sample(rng), StandardNormal.sample(rng)];
        v = [sr * v[0] + innov * xi[0], sr * v[1] + innov * xi[1]];
    }
    path
}

/// Simulate the process and sample it at random sensor nodes.
pub fn simulate_advection_diffusion(spec: &AdvectionDiffusionSpec) -> Result<AdvectionDiffusionData> {
    spec.check_static()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total = spec.burn_in + spec.n_kept;

    // velocity path first, so its stability can be checked up front
    let velocities = velocity_path(spec, total, &mut rng);
    for &v in &velocities {
        spec.check_velocity(v)?;
    }

    let l = periodic_kernel_sqrt(spec.grid, spec.source_length_scale);
    let mut field = gp_draw(&l, &mut rng);
    let with_source = spec.source_std > 0.0;
    let mut fields = Vec::with_capacity(spec.n_kept);
    for (t, &v) in velocities.iter().enumerate() {
        for _ in 0..spec.substeps {
            let src = with_source.then(|| gp_draw(&l, &mut rng));
            field = euler_step(&field, spec, v, src.as_ref());
        }
        if t >= spec.burn_in {
            fields.push(field.clone());
        }
    }

    let g = spec.grid;
    let mut nodes = sample(&mut rng, g * g, spec.sensors).into_vec();
    nodes.sort_unstable();
    let sensor_coords: Vec<(usize, usize)> = nodes.iter().map(|&k| (k / g, k % g)).collect();
    let truth = Mat::from_fn(spec.sensors, spec.n_kept, |m, n| {
        let (i, j) = sensor_coords[m];
        fields[n][(i, j)]
    });
    let noisy = Mat::from_fn(spec.sensors, spec.n_kept, |m, n| {
        let z: f64 = StandardNormal.sample(&mut rng);
        truth[(m, n)] + spec.obs_noise_std * z
    });
    Ok(AdvectionDiffusionData {
        fields,
        velocities: velocities[spec.burn_in..].to_vec(),
        sensor_coords,
        truth,
        observations: ObservationSet::from_values(noisy),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> AdvectionDiffusionSpec {
        AdvectionDiffusionSpec {
            grid: 16,
            n_kept: 10,
            burn_in: 0,
            sensors: 5,
            ..Default::default()
        }
    }

    #[test]
    fn frozen_field_without_forcing() {
        let spec = AdvectionDiffusionSpec {
            diffusivity: 0.0,
            velocity_std: 0.0,
            source_std: 0.0,
            ..quiet()
        };
        let out = simulate_advection_diffusion(&spec).unwrap();
        for f in &out.fields {
            assert_eq!(f, &out.fields[0]);
        }
    }

    #[test]
    fn diffusion_conserves_mean() {
        let spec = AdvectionDiffusionSpec { velocity_std: 0.0, source_std: 0.0, ..quiet() };
        let out = simulate_advection_diffusion(&spec).unwrap();
        let m0 = out.fields[0].mean();
        for f in &out.fields {
            assert!((f.mean() - m0).abs() < 1e-12);
        }
        // and it actually smooths
        let var = |f: &Mat| f.map(|v| (v - m0).powi(2)).mean();
        assert!(var(out.fields.last().unwrap()) < var(&out.fields[0]));
    }

    #[test]
    fn names_violated_bound() {
        let spec = AdvectionDiffusionSpec { diffusivity: 2.0, ..quiet() };
        match simulate_advection_diffusion(&spec) {
            Err(Error::Unstable(msg)) => assert!(msg.contains("diffusion number")),
            other => panic!("{other:?}"),
        }
        let spec = AdvectionDiffusionSpec { velocity_std: 100.0, ..quiet() };
        match simulate_advection_diffusion(&spec) {
            Err(Error::Unstable(msg)) => assert!(msg.contains("Courant")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn halving_dt_agrees_with_reference() {
        let coarse = AdvectionDiffusionSpec { source_std: 0.0, n_kept: 5, ..quiet() };
        let fine = AdvectionDiffusionSpec { dt: coarse.dt / 2.0, substeps: coarse.substeps * 2, ..coarse };
        let a = simulate_advection_diffusion(&coarse).unwrap();
        let b = simulate_advection_diffusion(&fine).unwrap();
        for (fa, fb) in a.fields.iter().zip(&b.fields) {
            let rel = (fa - fb).norm() / fb.norm();
            assert!(rel <= 0.05, "relative L2 {rel}");
        }
        assert_ne!(a.fields[0], a.fields[4]);
    }

    #[test]
    fn velocity_variance_is_stationary() {
        let spec = AdvectionDiffusionSpec { velocity_std: 0.7, rho: 0.9, ..quiet() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let path = velocity_path(&spec, 200_000, &mut rng);
        for c in 0..2 {
            let var = path.iter().map(|v| v[c] * v[c]).sum::<f64>() / path.len() as f64;
            assert!((var / 0.49 - 1.0).abs() < 0.1, "component {c}: {var}");
        }
    }

    #[test]
    fn kernel_root_squares_to_kernel() {
        let l = periodic_kernel_sqrt(16, 0.1);
        let k = &l * &l;
        assert!((k[(0, 0)] - 1.0).abs() < 1e-6);
        assert!((k[(0, 1)] - (-0.5 * (1.0f64 / 16.0 / 0.1).powi(2)).exp()).abs() < 1e-6);
    }
}
