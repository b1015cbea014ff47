use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Sinusoid whose phase is modulated by a slower sinusoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrequencySignalSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub n: usize,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for FrequencySignalSpec {
    fn default() -> Self {
        Self { a: 0.1, b: 0.01, c: 8.0, n: 1000, noise_std: 0.1, seed: 0 }
    }
}

impl FrequencySignalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("signal length must be positive".into()));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::Config("noise standard deviation must be non-negative".into()));
        }
        Ok(())
    }

    /// `f(n) = sin(a (n + c sin(2π b n)) 2π)`
    pub fn value(&self, n: usize) -> f64 {
        let t = n as f64;
        (self.a * (t + self.c * (self.b * t * TAU).sin()) * TAU).sin()
    }
}

/// Noiseless signal and its noisy observation.
pub fn gen_frequency_signal(spec: &FrequencySignalSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    let truth: Vec<f64> = (0..spec.n).map(|n| spec.value(n)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let noisy = truth.iter().map(|f| f + noise.sample(&mut rng)).collect();
    Ok((truth, noisy))
}
