//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (no test harness) so the report is printed as it
//! goes. A criterion that fails is reported as FAIL; the process exits
//! nonzero only if a criterion could not be evaluated at all, or if
//! `ACCEPTANCE_STRICT` is set and any criterion failed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use lssm_tvd::bench::*;
use lssm_tvd::chain::{solve_chain, BlockTridiagonalPrecision};
use lssm_tvd::datagen::io::{read_station_csv, write_station_csv};
use lssm_tvd::linalg::{Mat, Vector};
use lssm_tvd::model::*;
use lssm_tvd::rotations::{rotate_s, rotate_x};
use lssm_tvd::switching::{forward_backward, update_transition, update_z};
use lssm_tvd::vb::updates::*;
use lssm_tvd::vb::{compute_elbo, fit, reconstruct};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const SOLVER_INSTANCES: usize = 50;
const SOLVER_REL_TOL: f64 = 1e-8;
const SOLVER_MAX_SECS: f64 = 1.0;
const MONOTONE_DATASETS: usize = 10;
const MONOTONE_SWEEPS: usize = 50;
const MONOTONE_REL_TOL: f64 = 1e-8;
const MONOTONE_MAX_SECS: f64 = 120.0;
const DEGENERATION_RMSE: f64 = 1e-6;
const ENUMERATION_TOL: f64 = 1e-12;
const PRUNED_MAX_ABS: f64 = 0.05;
const FREQUENCY_MAX_SECS: f64 = 600.0;
const ADVECTION_MIN_WINS: usize = 4;
const ADVECTION_RANDOM_SPREAD: f64 = 0.2;
const ADVECTION_MAX_SECS: f64 = 3600.0;
const CONSTANT_COV: f64 = 0.1;
const VARYING_COV: f64 = 0.5;
const ROTATION_SWEEP_RATIO: f64 = 0.5;
const ROTATION_MAX_SWEEPS: usize = 3000;
const STATION_MAX_MISSING: f64 = 0.2;

type Outcome = Result<(bool, String), String>;

struct Report {
    passed: usize,
    failed: usize,
    errors: usize,
}

impl Report {
    fn record(&mut self, id: usize, name: &str, outcome: Outcome) {
        match outcome {
            Ok((true, detail)) => {
                self.passed += 1;
                println!("criterion {id:>2} PASS  {name}: {detail}");
            }
            Ok((false, detail)) => {
                self.failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {detail}");
            }
            Err(e) => {
                self.errors += 1;
                println!("criterion {id:>2} ERROR {name}: {e}");
            }
        }
    }
}

fn experiments_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments")
}

fn load_spec(name: &str) -> Result<ExperimentSpec, String> {
    ExperimentSpec::from_file(&experiments_dir().join(name)).map_err(|e| e.to_string())
}

fn randn(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

// 1 -----------------------------------------------------------------------

fn solver_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..SOLVER_INSTANCES {
        let blocks = rng.random_range(1..=21);
        let d = rng.random_range(1..=4);
        let offdiag: Vec<Mat> = (1..blocks).map(|_| Mat::from_fn(d, d, |_, _| randn(&mut rng))).collect();
        let diag: Vec<Mat> = (0..blocks)
            .map(|n| {
                let g = Mat::from_fn(d, d, |_, _| randn(&mut rng));
                let mut bound = 0.5;
                if n > 0 {
                    bound += offdiag[n - 1].abs().row_sum().max();
                }
                if n + 1 < blocks {
                    bound += offdiag[n].abs().column_sum().max();
                }
                &g * g.transpose() + Mat::identity(d, d) * bound
            })
            .collect();
        let rhs: Vec<Vector> = (0..blocks).map(|_| Vector::from_fn(d, |_, _| randn(&mut rng))).collect();
        let prec = BlockTridiagonalPrecision::new(diag, offdiag).map_err(|e| e.to_string())?;
        let post = solve_chain(&prec, &rhs).map_err(|e| e.to_string())?;
        let inv = prec.to_dense().try_inverse().ok_or("dense inverse failed")?;
        let h = Vector::from_iterator(blocks * d, rhs.iter().flat_map(|r| r.iter().copied()));
        let mean = &inv * h;
        let rel = |a: &Mat, b: &Mat| (a - b).amax() / b.amax().max(1e-300);
        for n in 0..blocks {
            let m = mean.rows(n * d, d);
            worst = worst.max((&post.means[n] - m).amax() / m.amax().max(1e-300));
            worst = worst.max(rel(&post.covs[n], &inv.view((n * d, n * d), (d, d)).into_owned()));
            if n > 0 {
                worst = worst.max(rel(&post.cross_covs[n - 1], &inv.view((n * d, (n - 1) * d), (d, d)).into_owned()));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst < SOLVER_REL_TOL && secs < SOLVER_MAX_SECS,
        format!("{SOLVER_INSTANCES} instances, worst relative error {worst:.2e}, {secs:.3} s"),
    ))
}

// 2 -----------------------------------------------------------------------

/// Data from a 3-D latent rotation whose angle drifts over time.
fn drifting_rotation_data(seed: u64) -> ObservationSet {
    let (m, n) = (8, 60);
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let c = Mat::from_fn(m, 3, |_, _| randn(&mut r));
    let w0 = r.random_range(0.1..0.4);
    let w1 = r.random_range(0.1..0.4);
    let mut x = Vector::from_fn(3, |_, _| randn(&mut r));
    let mut values = Mat::zeros(m, n);
    for t in 0..n {
        let a = w0 + (w1 - w0) * t as f64 / n as f64;
        let (s, co) = a.sin_cos();
        let w = Mat::from_row_slice(3, 3, &[co, -s, 0.0, s, co, 0.0, 0.0, 0.0, 0.9]) * 0.98;
        x = w * x + Vector::from_fn(3, |_, _| 0.1 * randn(&mut r));
        let y = &c * &x;
        for i in 0..m {
            values[(i, t)] = y[i] + 0.1 * randn(&mut r);
        }
    }
    let mask: Vec<Vec<bool>> = (0..m).map(|_| (0..n).map(|_| r.random::<f64>() > 0.1).collect()).collect();
    ObservationSet::new(values, &mask).unwrap()
}

/// Runs the fit schedule step by step, evaluating the bound after every
/// update and accepted rotation; returns the worst relative change.
fn monotone_run(data: &ObservationSet, cfg: &ModelConfig) -> Result<f64, String> {
    let e = |e: lssm_tvd::Error| e.to_string();
    let mut post = init_posteriors(cfg, data).map_err(e)?;
    let mut last = compute_elbo(&post, data, cfg).map_err(e)?;
    let mut worst = f64::INFINITY;
    let mut check = |post: &FactorPosteriors, what: &str| -> Result<(), String> {
        let now = compute_elbo(post, data, cfg).map_err(e)?;
        if !now.is_finite() {
            return Err(format!("non-finite bound after {what}"));
        }
        worst = worst.min((now - last) / last.abs());
        last = now;
        Ok(())
    };
    for sweep in 0..MONOTONE_SWEEPS {
        let full = sweep >= cfg.schedule.warmup_sweeps;
        update_x(&mut post, data, cfg).map_err(e)?;
        check(&post, "x")?;
        if full {
            match post.mixing {
                MixingPosterior::Continuous { .. } => update_s(&mut post, cfg).map_err(e)?,
                MixingPosterior::Switching(_) => update_z(&mut post),
                MixingPosterior::Constant => {}
            }
            check(&post, "mixing")?;
        }
        update_c(&mut post, data).map_err(e)?;
        check(&post, "c")?;
        update_b(&mut post).map_err(e)?;
        check(&post, "b")?;
        if full {
            match &mut post.mixing {
                MixingPosterior::Continuous { .. } => update_a(&mut post).map_err(e)?,
                MixingPosterior::Switching(h) => update_transition(h),
                MixingPosterior::Constant => {}
            }
            check(&post, "a")?;
        }
        update_tau(&mut post, data, cfg);
        check(&post, "tau")?;
        if full {
            update_gamma(&mut post, cfg);
            check(&post, "gamma")?;
            update_beta(&mut post, cfg);
            check(&post, "beta")?;
            update_alpha(&mut post, cfg);
            check(&post, "alpha")?;
            if rotate_x(&mut post, data, cfg).map_err(e)?.accepted {
                check(&post, "x rotation")?;
            }
            if rotate_s(&mut post, data, cfg).map_err(e)?.accepted {
                check(&post, "s rotation")?;
            }
        }
    }
    Ok(worst)
}

fn monotonicity() -> Outcome {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    for seed in 0..MONOTONE_DATASETS as u64 {
        let data = drifting_rotation_data(100 + seed);
        for (variant, k) in [
            (ModelVariant::TimeVarying, 2),
            (ModelVariant::Lssm, 1),
            (ModelVariant::Switching, 2),
        ] {
            let cfg = ModelConfig::new(variant, 3, k).with_seed(seed);
            let w = monotone_run(&data, &cfg).map_err(|e| format!("{variant} seed {seed}: {e}"))?;
            worst = worst.min(w);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst >= -MONOTONE_REL_TOL && secs < MONOTONE_MAX_SECS,
        format!(
            "{MONOTONE_DATASETS} data sets x 3 models x {MONOTONE_SWEEPS} sweeps, most negative relative step {worst:.2e}, {secs:.1} s"
        ),
    ))
}

// 3 -----------------------------------------------------------------------

fn degeneration() -> Outcome {
    let spec = load_spec("changing_frequency.toml")?;
    let rep = Replicate::new(&spec, 0).map_err(|e| e.to_string())?;
    let mut base = spec.model.clone();
    base.num_dynamics = 1;
    base.schedule.max_sweeps = 100;
    let mut tvd = base.config(ModelVariant::TimeVarying, rep.seeds.fit);
    tvd.clamp_mixing_weights = true;
    let lssm = base.config(ModelVariant::Lssm, rep.seeds.fit);
    let a = fit(&rep.train, &tvd).map_err(|e| e.to_string())?;
    let b = fit(&rep.train, &lssm).map_err(|e| e.to_string())?;
    let (ma, _) = reconstruct(&a.posteriors, false);
    let (mb, _) = reconstruct(&b.posteriors, false);
    let rmse = ((&ma - &mb).norm_squared() / ma.len() as f64).sqrt();
    Ok((
        rmse < DEGENERATION_RMSE,
        format!("K=1 time-varying vs classical reconstructions differ by RMSE {rmse:.2e} after {} sweeps", a.sweeps),
    ))
}

// 4 -----------------------------------------------------------------------

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn enumeration_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=6usize {
        for k in 1..=3usize {
            for _ in 0..3 {
                cases += 1;
                let init: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..0.0)).collect();
                let trans = Mat::from_fn(k, k, |_, _| rng.random_range(-3.0..0.0));
                let em: Vec<Vector> = (0..n).map(|_| Vector::from_fn(k, |_, _| rng.random_range(-4.0..2.0))).collect();
                let fb = forward_backward(&init, &trans, &em);

                let mut paths = Vec::new();
                let mut weights = Vec::new();
                for code in 0..k.pow(n as u32) {
                    let path: Vec<usize> = (0..n).map(|t| (code / k.pow(t as u32)) % k).collect();
                    let mut w = init[path[0]] + em[0][path[0]];
                    for t in 1..n {
                        w += trans[(path[t - 1], path[t])] + em[t][path[t]];
                    }
                    paths.push(path);
                    weights.push(w);
                }
                let lz = log_sum_exp(&weights);
                let mut probs = vec![Vector::zeros(k); n];
                let mut pair = vec![Mat::zeros(k, k); n.saturating_sub(1)];
                for (path, w) in paths.iter().zip(&weights) {
                    let p = (w - lz).exp();
                    for t in 0..n {
                        probs[t][path[t]] += p;
                        if t + 1 < n {
                            pair[t][(path[t], path[t + 1])] += p;
                        }
                    }
                }
                worst = worst.max((fb.log_normalizer - lz).abs());
                for t in 0..n {
                    worst = worst.max((&fb.state_probs[t] - &probs[t]).amax());
                }
                for t in 0..n.saturating_sub(1) {
                    worst = worst.max((&fb.pairwise[t] - &pair[t]).amax());
                }
            }
        }
    }
    Ok((
        worst < ENUMERATION_TOL,
        format!("{cases} chains with N<=6, K<=3, worst deviation {worst:.2e}"),
    ))
}

// 5, 8 --------------------------------------------------------------------

fn max_abs_weights(post: &FactorPosteriors) -> Vec<f64> {
    match &post.mixing {
        MixingPosterior::Continuous { s, .. } => (0..post.num_dynamics())
            .map(|k| s.means.iter().map(|m| m[k].abs()).fold(0.0, f64::max))
            .collect(),
        _ => vec![],
    }
}

fn gap(run: &ExperimentRun, m: ModelVariant, rep: usize) -> Result<f64, String> {
    let row = run.table.row(m, rep).ok_or(format!("no row for {m}"))?;
    row.gap_rmse.ok_or_else(|| format!("{m} replicate {rep} failed: {:?}", row.error))
}

fn random(run: &ExperimentRun, m: ModelVariant, rep: usize) -> Result<f64, String> {
    let row = run.table.row(m, rep).ok_or(format!("no row for {m}"))?;
    row.random_rmse.ok_or_else(|| format!("{m} replicate {rep} failed: {:?}", row.error))
}

fn changing_frequency(out: &Path) -> Outcome {
    let spec = load_spec("changing_frequency.toml")?;
    let start = Instant::now();
    let run = run_and_write(&spec, out).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let (l, sd, tvd) = (
        gap(&run, ModelVariant::Lssm, 0)?,
        gap(&run, ModelVariant::Switching, 0)?,
        gap(&run, ModelVariant::TimeVarying, 0)?,
    );
    let post = run.posteriors(ModelVariant::TimeVarying, 0).ok_or("no time-varying posterior")?;
    let peaks = max_abs_weights(post);
    let pruned = peaks.iter().filter(|&&p| p < PRUNED_MAX_ABS).count();
    let ok = tvd < l && tvd < sd && pruned >= 1 && secs < FREQUENCY_MAX_SECS;
    Ok((
        ok,
        format!(
            "gap RMSE lssm {l:.4}, lssm-sd {sd:.4}, lssm-tvd {tvd:.4}; {pruned} of {} weights pruned (peaks {}); {secs:.1} s",
            peaks.len(),
            peaks.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn rotation_speedup() -> Outcome {
    let spec = load_spec("changing_frequency.toml")?;
    let rep = Replicate::new(&spec, 0).map_err(|e| e.to_string())?;
    let mut results = Vec::new();
    for rotate in [true, false] {
        let mut settings = spec.model.clone();
        settings.schedule.rotate = rotate;
        settings.schedule.max_sweeps = ROTATION_MAX_SWEEPS;
        let cfg = settings.config(ModelVariant::TimeVarying, rep.seeds.fit);
        let res = fit(&rep.train, &cfg).map_err(|e| e.to_string())?;
        results.push((res.sweeps, res.converged, res.elbo));
    }
    let (with, without) = (results[0], results[1]);
    let ratio = with.0 as f64 / without.0 as f64;
    Ok((
        with.1 && ratio <= ROTATION_SWEEP_RATIO,
        format!(
            "sweeps to tolerance {} with rotations (bound {:.1}), {}{} without (bound {:.1}), ratio {ratio:.2}",
            with.0,
            with.2,
            without.0,
            if without.1 { "" } else { "+ (not converged)" },
            without.2
        ),
    ))
}

// 6, 7 --------------------------------------------------------------------

fn advection_ordering(run: &ExperimentRun, secs: f64) -> Outcome {
    let reps = run.replicates.len();
    let mut wins = 0;
    let mut spread_ok = true;
    let mut lines = Vec::new();
    for r in 0..reps {
        let g: Vec<f64> = [ModelVariant::Lssm, ModelVariant::Switching, ModelVariant::TimeVarying]
            .iter()
            .map(|&m| gap(run, m, r))
            .collect::<Result<_, _>>()?;
        let rr: Vec<f64> = [ModelVariant::Lssm, ModelVariant::Switching, ModelVariant::TimeVarying]
            .iter()
            .map(|&m| random(run, m, r))
            .collect::<Result<_, _>>()?;
        if g[2] < g[0] && g[2] < g[1] {
            wins += 1;
        }
        let lo = rr.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = rr.iter().cloned().fold(0.0, f64::max);
        let spread = hi / lo - 1.0;
        spread_ok &= spread <= ADVECTION_RANDOM_SPREAD;
        lines.push(format!("r{r} gap {:.4}/{:.4}/{:.4} random spread {:.1}%", g[0], g[1], g[2], 100.0 * spread));
    }
    Ok((
        wins >= ADVECTION_MIN_WINS && spread_ok && secs < ADVECTION_MAX_SECS,
        format!(
            "lssm-tvd lowest gap RMSE in {wins}/{reps} replicates (lssm/lssm-sd/lssm-tvd: {}); {secs:.0} s",
            lines.join("; ")
        ),
    ))
}

/// Temporal coefficient of variation of each unpruned mixing weight.
fn weight_cov(post: &FactorPosteriors) -> Vec<Option<f64>> {
    let MixingPosterior::Continuous { s, .. } = &post.mixing else { return vec![] };
    let n = s.means.len() as f64;
    (0..post.num_dynamics())
        .map(|k| {
            let v: Vec<f64> = s.means.iter().map(|m| m[k]).collect();
            if v.iter().all(|x| x.abs() < PRUNED_MAX_ABS) {
                return None;
            }
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            Some(var.sqrt() / mean.abs())
        })
        .collect()
}

fn mixing_structure(run: &ExperimentRun) -> Outcome {
    let mut ok = 0;
    let mut lines = Vec::new();
    for r in 0..run.replicates.len() {
        let post = run
            .posteriors(ModelVariant::TimeVarying, r)
            .ok_or(format!("no time-varying posterior for replicate {r}"))?;
        let cov = weight_cov(post);
        let constant = cov.iter().flatten().any(|&c| c < CONSTANT_COV);
        let varying = cov.iter().flatten().filter(|&&c| c > VARYING_COV).count();
        let has_pair = constant && cov.iter().flatten().any(|&c| c > VARYING_COV);
        ok += has_pair as usize;
        lines.push(format!(
            "r{r} [{}] {varying} varying",
            cov.iter().map(|c| c.map_or("pruned".into(), |c| format!("{c:.2}"))).collect::<Vec<_>>().join(", ")
        ));
    }
    let reps = run.replicates.len();
    Ok((
        ok == reps,
        format!(
            "constant (CoV<{CONSTANT_COV}) plus varying (CoV>{VARYING_COV}) weights in {ok}/{reps} replicates: {}",
            lines.join("; ")
        ),
    ))
}

// 9 -----------------------------------------------------------------------

fn determinism(first_frequency: &Path, scratch: &Path) -> Outcome {
    let spec = load_spec("changing_frequency.toml")?;
    let again = scratch.join("frequency-again");
    run_and_write(&spec, &again).map_err(|e| e.to_string())?;
    let mut small = load_spec("advection_diffusion.toml")?;
    small.replicates = 2;
    small.model.latent_dim = 4;
    small.model.schedule.max_sweeps = 15;
    if let DataSource::AdvectionDiffusion(a) = &mut small.data {
        a.n_kept = 120;
        a.grid = 16;
        a.sensors = 20;
    }
    small.mask.gap_count = 2;
    let (a, b) = (scratch.join("adv-a"), scratch.join("adv-b"));
    run_and_write(&small, &a).map_err(|e| e.to_string())?;
    run_and_write(&small, &b).map_err(|e| e.to_string())?;
    let mut same = true;
    for f in ["results.csv", "results.json"] {
        let read = |d: &Path| std::fs::read(d.join(f)).map_err(|e| e.to_string());
        same &= read(first_frequency)? == read(&again)?;
        same &= read(&a)? == read(&b)?;
    }
    Ok((same, "changing-frequency and reduced advection-diffusion tables byte-identical on rerun".into()))
}

// 10 ----------------------------------------------------------------------

fn station_ingestion(dir: &Path) -> Outcome {
    let n = 50;
    // missing counts: 10 of 50 is exactly the 20% limit and is kept
    let missing = [0usize, 3, 10, 11, 25, 9, 40];
    let expect_kept = [0usize, 1, 2, 5];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let rows: Vec<Vec<Option<f64>>> = missing
        .iter()
        .map(|&miss| {
            let mut row: Vec<Option<f64>> = (0..n).map(|t| Some(50.0 + 10.0 * (t as f64 / 8.0).sin() + randn(&mut rng))).collect();
            let mut idx: Vec<usize> = (0..n).collect();
            for i in 0..miss {
                let j = rng.random_range(i..n);
                idx.swap(i, j);
                row[idx[i]] = None;
            }
            row
        })
        .collect();
    let obs = ObservationSet::from_rows(&rows).map_err(|e| e.to_string())?;
    let stations: Vec<String> = (0..missing.len()).map(|i| format!("{:06}-99999", 722000 + i)).collect();
    let days: Vec<String> = (0..n).map(|d| format!("1990{:04}", 101 + d)).collect();
    let path = dir.join("gsod.csv");
    write_station_csv(&path, &stations, &days, &obs).map_err(|e| e.to_string())?;
    // daily summaries mark missing temperatures as 9999.9
    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let marked: String = text
        .lines()
        .map(|l| l.split(',').map(|c| if c.is_empty() { "9999.9" } else { c }).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&path, marked + "\n").map_err(|e| e.to_string())?;

    let table = read_station_csv(&path, STATION_MAX_MISSING).map_err(|e| e.to_string())?;
    let kept_ok = table.stations == expect_kept.iter().map(|&i| stations[i].clone()).collect::<Vec<_>>();
    let mut values_ok = table.days == days;
    for (row, &orig) in expect_kept.iter().enumerate() {
        for t in 0..n {
            values_ok &= table.observations.get(row, t) == obs.get(orig, t);
        }
    }
    let again = dir.join("gsod-again.csv");
    write_station_csv(&again, &table.stations, &table.days, &table.observations).map_err(|e| e.to_string())?;
    let round = read_station_csv(&again, STATION_MAX_MISSING).map_err(|e| e.to_string())?;
    let round_ok = round.stations == table.stations
        && round.dropped.is_empty()
        && round.observations.mask() == table.observations.mask()
        && (0..expect_kept.len()).all(|m| (0..n).all(|t| round.observations.get(m, t) == table.observations.get(m, t)));
    Ok((
        kept_ok && values_ok && round_ok,
        format!(
            "kept {} of {} stations (dropped {}), values and round trip {}",
            table.stations.len(),
            stations.len(),
            table.dropped.join(" "),
            if values_ok && round_ok { "exact" } else { "differ" }
        ),
    ))
}

fn main() {
    let scratch = tempfile::tempdir().expect("temporary directory");
    let mut report = Report { passed: 0, failed: 0, errors: 0 };
    report.record(1, "chain solver vs dense inverse", solver_oracle());
    report.record(2, "bound monotone under every update", monotonicity());
    report.record(3, "K=1 degenerates to classical model", degeneration());
    report.record(4, "forward-backward vs path enumeration", enumeration_oracle());
    let freq_dir = scratch.path().join("frequency");
    report.record(5, "changing-frequency experiment", changing_frequency(&freq_dir));

    let advection = load_spec("advection_diffusion.toml").and_then(|spec| {
        let start = Instant::now();
        let run = run_and_write(&spec, &scratch.path().join("advection")).map_err(|e| e.to_string())?;
        Ok((run, start.elapsed().as_secs_f64()))
    });
    match &advection {
        Ok((run, secs)) => {
            report.record(6, "advection-diffusion ordering", advection_ordering(run, *secs));
            report.record(7, "mixing-weight structure", mixing_structure(run));
        }
        Err(e) => {
            report.record(6, "advection-diffusion ordering", Err(e.clone()));
            report.record(7, "mixing-weight structure", Err(e.clone()));
        }
    }
    report.record(8, "rotation speed-up", rotation_speedup());
    report.record(9, "determinism", determinism(&freq_dir, scratch.path()));
    report.record(10, "station ingestion", station_ingestion(scratch.path()));

    println!(
        "acceptance: {} passed, {} failed, {} errors",
        report.passed, report.failed, report.errors
    );
    let strict = std::env::var_os("ACCEPTANCE_STRICT").is_some();
    if report.errors > 0 || (strict && report.failed > 0) {
        std::process::exit(1);
    }
}
