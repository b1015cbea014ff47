use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_shapes, init_posteriors, FactorPosteriors, MixingPosterior, ModelConfig, ObservationSet};
use crate::rotations::{rotate_s, rotate_x};
use crate::switching::{update_transition, update_z};
use crate::vb::elbo::compute_elbo;
use crate::vb::updates::*;

/// Per-sweep diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub sweep: usize,
    pub warmup: bool,
    pub elbo: f64,
    /// Wall-clock seconds spent in each update, in schedule order.
    pub timings: Vec<(String, f64)>,
    pub rotation_x_accepted: bool,
    pub rotation_s_accepted: bool,
    pub rotation_gain: f64,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub posteriors: FactorPosteriors,
    pub elbo: f64,
    /// Number of completed sweeps.
    pub sweeps: usize,
    pub converged: bool,
    pub reports: Vec<SweepReport>,
}

/// Initialise from the configuration and run the schedule.
pub fn fit(data: &ObservationSet, config: &ModelConfig) -> Result<FitResult> {
    let post = init_posteriors(config, data)?;
    fit_from(post, data, config, 0)
}

/// Continue fitting from existing factors; `sweeps_done` counts sweeps
/// already performed (they count towards warm-up and the sweep limit).
pub fn fit_from(
    mut post: FactorPosteriors,
    data: &ObservationSet,
    config: &ModelConfig,
    sweeps_done: usize,
) -> Result<FitResult> {
    config.validate()?;
    check_shapes(&post, config, data)?;
    let sched = config.schedule;
    let mut elbo = compute_elbo(&post, data, config)?;
    let mut reports = Vec::new();
    let mut converged = false;
    let mut sweep = sweeps_done;

    while sweep < sched.max_sweeps {
        let warmup = sweep < sched.warmup_sweeps;
        let mut runner = SweepRunner {
            post: &mut post,
            data,
            config,
            sweep,
            last: elbo,
            timings: Vec::new(),
        };
        runner.step("x", update_x)?;
        if !warmup {
            match runner.post.mixing {
                MixingPosterior::Continuous { clamped: false, .. } => runner.step("s", |p, _, c| update_s(p, c))?,
                MixingPosterior::Switching(_) => runner.step("z", |p, _, _| {
                    update_z(p);
                    Ok(())
                })?,
                _ => {}
            }
        }
        runner.step("c", |p, d, _| update_c(p, d))?;
        runner.step("b", |p, _, _| update_b(p))?;
        if !warmup {
            match runner.post.mixing {
                MixingPosterior::Continuous { clamped: false, .. } => runner.step("a", |p, _, _| update_a(p))?,
                MixingPosterior::Switching(_) => runner.step("transition", |p, _, _| {
                    if let MixingPosterior::Switching(h) = &mut p.mixing {
                        update_transition(h);
                    }
                    Ok(())
                })?,
                _ => {}
            }
        }
        runner.step("tau", |p, d, c| {
            update_tau(p, d, c);
            Ok(())
        })?;
        if !warmup {
            runner.step("gamma", |p, _, c| {
                update_gamma(p, c);
                Ok(())
            })?;
            runner.step("beta", |p, _, c| {
                update_beta(p, c);
                Ok(())
            })?;
            if matches!(runner.post.mixing, MixingPosterior::Continuous { clamped: false, .. }) {
                runner.step("alpha", |p, _, c| {
                    update_alpha(p, c);
                    Ok(())
                })?;
            }
        }

        let mut rx = false;
        let mut rs = false;
        let mut gain = 0.0;
        if !warmup && sched.rotate {
            let t = Instant::now();
            let out = rotate_x(runner.post, data, config)?;
            rx = out.accepted;
            gain += out.gain;
            let out = rotate_s(runner.post, data, config)?;
            rs = out.accepted;
            gain += out.gain;
            runner.timings.push(("rotation".into(), t.elapsed().as_secs_f64()));
        }
        let timings = std::mem::take(&mut runner.timings);

        let new_elbo = compute_elbo(&post, data, config)?;
        check_monotone("sweep", sweep, elbo, new_elbo, sched.monotone_tolerance)?;
        let rel = (new_elbo - elbo) / new_elbo.abs().max(f64::MIN_POSITIVE);
        elbo = new_elbo;
        sweep += 1;
        log::debug!("sweep {sweep}: elbo {elbo:.6e}");
        reports.push(SweepReport {
            sweep,
            warmup,
            elbo,
            timings,
            rotation_x_accepted: rx,
            rotation_s_accepted: rs,
            rotation_gain: gain,
        });
        if !warmup && rel < sched.tolerance {
            converged = true;
            break;
        }
    }

    Ok(FitResult { posteriors: post, elbo, sweeps: sweep, converged, reports })
}

fn check_monotone(update: &'static str, sweep: usize, before: f64, after: f64, tol: f64) -> Result<()> {
    let decrease = before - after;
    if decrease > tol * before.abs().max(1.0) || after.is_nan() {
        Err(Error::NonMonotone { update, sweep, before, decrease })
    } else {
        Ok(())
    }
}

struct SweepRunner<'a> {
    post: &'a mut FactorPosteriors,
    data: &'a ObservationSet,
    config: &'a ModelConfig,
    sweep: usize,
    last: f64,
    timings: Vec<(String, f64)>,
}

impl SweepRunner<'_> {
    fn step<F>(&mut self, name: &'static str, f: F) -> Result<()>
    where
        F: FnOnce(&mut FactorPosteriors, &ObservationSet, &ModelConfig) -> Result<()>,
    {
        let t = Instant::now();
        f(self.post, self.data, self.config)?;
        self.timings.push((name.to_string(), t.elapsed().as_secs_f64()));
        if self.config.schedule.check_each_update {
            let after = compute_elbo(self.post, self.data, self.config)?;
            check_monotone(name, self.sweep, self.last, after, self.config.schedule.monotone_tolerance)?;
            self.last = after;
        }
        Ok(())
    }
}

/// Write one JSON object per sweep.
pub fn write_sweep_log(path: &Path, reports: &[SweepReport]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in reports {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}
