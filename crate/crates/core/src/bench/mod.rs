//! Method-versus-method gap reconstruction experiments.

mod dataset;
mod plot;
mod table;

pub use dataset::{generate_dataset, load_dataset, write_dataset, DataSource, Dataset};
pub use plot::{export_plotdata, mixing_weight_series, state_probability_rows, PlotSeries, SeriesPoint};
pub use table::{AggregateRow, ReplicateRow, ResultsTable};

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{split_observed, MaskPlan, MaskSplit};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::{FactorPosteriors, Hyperparameters, InitScales, ModelConfig, ModelVariant, ObservationSet, Schedule};
use crate::vb::{fit, reconstruct};

/// Root-mean-square difference of two equal-length sequences.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    if pred.len() != truth.len() {
        return Err(Error::Dimension(format!("{} predictions for {} targets", pred.len(), truth.len())));
    }
    let sum: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sum / pred.len() as f64).sqrt())
}

/// RMSE of `mean` against `target` over the given cells.
pub fn rmse_cells(mean: &Mat, target: &Mat, cells: &[(usize, usize)]) -> Result<f64> {
    let pred: Vec<f64> = cells.iter().map(|&c| mean[c]).collect();
    let truth: Vec<f64> = cells.iter().map(|&c| target[c]).collect();
    rmse(&pred, &truth)
}

/// Model settings shared by every method of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSettings {
    pub latent_dim: usize,
    /// Basis matrices for LSSM-TVD and regimes for LSSM-SD; the classical
    /// LSSM always uses one.
    pub num_dynamics: usize,
    pub isotropic_noise: bool,
    pub transition_concentration: f64,
    pub hyper: Hyperparameters,
    pub schedule: Schedule,
    pub init: InitScales,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            latent_dim: 5,
            num_dynamics: 4,
            isotropic_noise: true,
            transition_concentration: 1.0,
            hyper: Hyperparameters::default(),
            schedule: Schedule::default(),
            init: InitScales::default(),
        }
    }
}

impl ModelSettings {
    pub fn config(&self, variant: ModelVariant, seed: u64) -> ModelConfig {
        let mut cfg = ModelConfig::new(variant, self.latent_dim, self.num_dynamics).with_seed(seed);
        cfg.isotropic_noise = self.isotropic_noise;
        cfg.transition_concentration = self.transition_concentration;
        cfg.hyper = self.hyper;
        cfg.schedule = self.schedule;
        cfg.init = self.init;
        cfg
    }
}

/// A complete experiment description, usually read from a TOML file.
///
/// ```toml
/// name = "frequency"
/// seed = 0
/// replicates = 1
/// methods = ["lssm", "lssm-sd", "lssm-tvd"]
///
/// [data]
/// kind = "frequency"     # or "advection-diffusion", "csv", "stations"
/// n = 1000
///
/// [mask]
/// gap_count = 7
/// gap_length = 15
/// random_missing_fraction = 0.2
///
/// [model]
/// latent_dim = 5
/// num_dynamics = 4
/// [model.schedule]
/// max_sweeps = 200
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_name")]
    pub name: String,
    /// Base seed; every replicate derives its data, mask and fit seeds from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<ModelVariant>,
    pub data: DataSource,
    #[serde(default)]
    pub mask: MaskPlan,
    #[serde(default)]
    pub model: ModelSettings,
    /// Directory for result tables, relative to the spec file.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_replicates() -> usize {
    1
}

fn default_methods() -> Vec<ModelVariant> {
    vec![ModelVariant::Lssm, ModelVariant::Switching, ModelVariant::TimeVarying]
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Read a spec file; relative paths inside it are resolved against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut spec = Self::from_toml(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        spec.data.resolve_paths(base);
        if let Some(out) = &spec.output_dir {
            if out.is_relative() {
                spec.output_dir = Some(base.join(out));
            }
        }
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("at least one replicate is required".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        for &m in &self.methods {
            self.model.config(m, 0).validate()?;
        }
        Ok(())
    }

    pub fn seeds(&self, replicate: usize) -> ReplicateSeeds {
        ReplicateSeeds::derive(self.seed, replicate)
    }
}

/// Seeds used by one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicateSeeds {
    pub data: u64,
    pub mask: u64,
    pub fit: u64,
}

impl ReplicateSeeds {
    pub fn derive(base: u64, replicate: usize) -> Self {
        let r = replicate as u64;
        Self {
            data: splitmix(base ^ splitmix(3 * r + 1)),
            mask: splitmix(base ^ splitmix(3 * r + 2)),
            fit: splitmix(base ^ splitmix(3 * r + 3)),
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One generated replicate: the data, its split and the training set.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub index: usize,
    pub seeds: ReplicateSeeds,
    pub dataset: Dataset,
    pub split: MaskSplit,
    pub train: ObservationSet,
}

impl Replicate {
    pub fn new(spec: &ExperimentSpec, index: usize) -> Result<Self> {
        let seeds = spec.seeds(index);
        let dataset = generate_dataset(&spec.data, Some(seeds.data))?;
        let plan = MaskPlan { seed: seeds.mask, ..spec.mask };
        let split = split_observed(&plan, &dataset.observations.mask())?;
        let train = train_set(&dataset.observations, &split)?;
        Ok(Self { index, seeds, dataset, split, train })
    }

    /// Values the reconstructions are scored against: the noiseless truth
    /// when known, the held-out measurements otherwise.
    pub fn target(&self) -> &Mat {
        self.dataset.truth.as_ref().unwrap_or(self.dataset.observations.values())
    }

    /// Score a posterior on the gap and random test sets.
    pub fn score(&self, post: &FactorPosteriors) -> Result<(f64, f64)> {
        let (mean, _) = reconstruct(post, false);
        let target = self.target();
        Ok((
            rmse_cells(&mean, target, &self.split.gap_test)?,
            rmse_cells(&mean, target, &self.split.random_test)?,
        ))
    }
}

/// Training set for a split, audited so that no test cell stays visible.
pub fn train_set(observations: &ObservationSet, split: &MaskSplit) -> Result<ObservationSet> {
    let mut hidden = split.gap_test.clone();
    hidden.extend_from_slice(&split.random_test);
    let train = observations.hide(&hidden);
    let leaked = hidden.iter().any(|&(m, n)| train.is_observed(m, n));
    let mismatch = (0..train.rows()).any(|m| (0..train.cols()).any(|n| train.is_observed(m, n) != split.train[m][n]));
    if leaked || mismatch {
        return Err(Error::InfeasibleMask("training set disagrees with the test sets".into()));
    }
    Ok(train)
}

/// Result of one (method, replicate) cell, with the fitted factors kept for
/// further inspection.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub row: ReplicateRow,
    pub posteriors: Option<FactorPosteriors>,
}

/// Output of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub table: ResultsTable,
    pub replicates: Vec<Replicate>,
    /// Cells in method-major order, matching `table.replicates`.
    pub cells: Vec<CellOutcome>,
}

impl ExperimentRun {
    pub fn posteriors(&self, method: ModelVariant, replicate: usize) -> Option<&FactorPosteriors> {
        self.cells
            .iter()
            .find(|c| c.row.method == method && c.row.replicate == replicate)
            .and_then(|c| c.posteriors.as_ref())
    }
}

/// Fit every method on every replicate and score the reconstructions.
/// Cells run in parallel; a failing fit is recorded in its row.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentRun> {
    spec.validate()?;
    let replicates = (0..spec.replicates)
        .into_par_iter()
        .map(|r| Replicate::new(spec, r))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(ModelVariant, &Replicate)> = spec
        .methods
        .iter()
        .flat_map(|&m| replicates.iter().map(move |r| (m, r)))
        .collect();
    let cells: Vec<CellOutcome> = jobs.par_iter().map(|&(method, rep)| run_cell(spec, method, rep)).collect();

    let rows: Vec<ReplicateRow> = cells.iter().map(|c| c.row.clone()).collect();
    let table = ResultsTable::new(spec.name.clone(), rows);
    Ok(ExperimentRun { table, replicates, cells })
}

fn run_cell(spec: &ExperimentSpec, method: ModelVariant, rep: &Replicate) -> CellOutcome {
    let cfg = spec.model.config(method, rep.seeds.fit);
    let mut row = ReplicateRow {
        method,
        replicate: rep.index,
        data_seed: rep.seeds.data,
        mask_seed: rep.seeds.mask,
        fit_seed: rep.seeds.fit,
        gap_rmse: None,
        random_rmse: None,
        sweeps: None,
        converged: None,
        elbo: None,
        error: None,
    };
    let outcome = fit(&rep.train, &cfg).map(|res| {
        let scores = rep.score(&res.posteriors);
        (res, scores)
    });
    match outcome {
        Ok((res, scores)) => {
            row.sweeps = Some(res.sweeps);
            row.converged = Some(res.converged);
            row.elbo = Some(res.elbo);
            match scores {
                Ok((gap, random)) => {
                    row.gap_rmse = Some(gap);
                    row.random_rmse = Some(random);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            CellOutcome { row, posteriors: Some(res.posteriors) }
        }
        Err(e) => {
            log::warn!("{method} replicate {}: {e}", rep.index);
            row.error = Some(e.to_string());
            CellOutcome { row, posteriors: None }
        }
    }
}

/// Run an experiment and write `results.csv` and `results.json` to `dir`.
pub fn run_and_write(spec: &ExperimentSpec, dir: &Path) -> Result<ExperimentRun> {
    let run = run_experiment(spec)?;
    std::fs::create_dir_all(dir)?;
    run.table.write_csv(&dir.join("results.csv"))?;
    run.table.write_json(&dir.join("results.json"))?;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_arithmetic() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[1.0, 1.0], &[0.0, 2.0]).unwrap(), 1.0);
        assert!(matches!(rmse(&[], &[]), Err(Error::EmptyTestSet)));
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn seeds_differ_between_replicates_and_streams() {
        let a = ReplicateSeeds::derive(0, 0);
        let b = ReplicateSeeds::derive(0, 1);
        assert_ne!(a, b);
        assert_ne!(a.data, a.mask);
        assert_eq!(a, ReplicateSeeds::derive(0, 0));
    }

    #[test]
    fn spec_parses_with_defaults() {
        let spec = ExperimentSpec::from_toml(
            r#"
            methods = ["lssm", "tvd"]
            [data]
            kind = "frequency"
            n = 50
            [model]
            latent_dim = 2
            num_dynamics = 2
            "#,
        )
        .unwrap();
        assert_eq!(spec.methods, [ModelVariant::Lssm, ModelVariant::TimeVarying]);
        assert_eq!(spec.mask, MaskPlan::default());
        assert_eq!(spec.model.schedule, Schedule::default());
        let back = ExperimentSpec::from_toml(&spec.to_toml().unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = "replicate = 2\n[data]\nkind = \"frequency\"\n";
        assert!(ExperimentSpec::from_toml(text).is_err());
    }
}
