use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::io::{
    read_matrix_csv, read_metadata, read_observations_csv, read_station_csv, write_matrix_csv, write_metadata,
    write_observations_csv,
};
use crate::datagen::{
    gen_frequency_signal, simulate_advection_diffusion, AdvectionDiffusionSpec, DatasetMetadata, FrequencySignalSpec,
    MaskSplit,
};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::ObservationSet;

/// Where the data of an experiment comes from. The `seed` field of a
/// generator is replaced by the replicate's data seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataSource {
    Frequency(FrequencySignalSpec),
    AdvectionDiffusion(AdvectionDiffusionSpec),
    /// Sensor-by-time tables: noisy observations (empty cells missing) and
    /// an optional noiseless truth of the same shape.
    Csv { observations: PathBuf, truth: Option<PathBuf> },
    /// A station table with a header row of days; see
    /// [`crate::datagen::io::read_station_csv`].
    Stations {
        path: PathBuf,
        #[serde(default = "default_max_missing")]
        max_missing_fraction: f64,
    },
}

fn default_max_missing() -> f64 {
    0.2
}

impl DataSource {
    pub(crate) fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            DataSource::Csv { observations, truth } => {
                fix(observations);
                if let Some(t) = truth {
                    fix(t);
                }
            }
            DataSource::Stations { path, .. } => fix(path),
            _ => {}
        }
    }
}

/// Observations plus, for synthetic data, the noiseless signal.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub observations: ObservationSet,
    pub truth: Option<Mat>,
    pub metadata: DatasetMetadata,
}

/// Build the data set of a source; `seed` overrides generator seeds.
pub fn generate_dataset(source: &DataSource, seed: Option<u64>) -> Result<Dataset> {
    match source {
        DataSource::Frequency(spec) => {
            let spec = FrequencySignalSpec { seed: seed.unwrap_or(spec.seed), ..*spec };
            let (truth, noisy) = gen_frequency_signal(&spec)?;
            let n = truth.len();
            Ok(Dataset {
                observations: ObservationSet::from_values(Mat::from_row_slice(1, n, &noisy)),
                truth: Some(Mat::from_row_slice(1, n, &truth)),
                metadata: metadata("frequency", serde_json::to_value(spec)?, spec.seed, vec![], 1, n),
            })
        }
        DataSource::AdvectionDiffusion(spec) => {
            let spec = AdvectionDiffusionSpec { seed: seed.unwrap_or(spec.seed), ..*spec };
            let out = simulate_advection_diffusion(&spec)?;
            let (m, n) = out.truth.shape();
            Ok(Dataset {
                observations: out.observations,
                truth: Some(out.truth),
                metadata: metadata("advection-diffusion", serde_json::to_value(spec)?, spec.seed, out.sensor_coords, m, n),
            })
        }
        DataSource::Csv { observations, truth } => {
            let obs = read_observations_csv(observations)?;
            let truth = truth.as_deref().map(read_matrix_csv).transpose()?;
            if let Some(t) = &truth {
                if t.shape() != obs.values().shape() {
                    return Err(Error::Dimension("truth and observation tables differ in shape".into()));
                }
            }
            let (m, n) = obs.values().shape();
            Ok(Dataset {
                metadata: metadata("csv", serde_json::to_value(source)?, 0, vec![], m, n),
                observations: obs,
                truth,
            })
        }
        DataSource::Stations { path, max_missing_fraction } => {
            let table = read_station_csv(path, *max_missing_fraction)?;
            let (m, n) = table.observations.values().shape();
            let info = serde_json::json!({
                "source": source,
                "stations": table.stations,
                "dropped": table.dropped,
                "days": table.days,
            });
            Ok(Dataset {
                observations: table.observations,
                truth: None,
                metadata: metadata("stations", info, 0, vec![], m, n),
            })
        }
    }
}

fn metadata(
    generator: &str,
    spec: serde_json::Value,
    seed: u64,
    sensor_coords: Vec<(usize, usize)>,
    rows: usize,
    cols: usize,
) -> DatasetMetadata {
    DatasetMetadata {
        generator: generator.into(),
        spec,
        seed,
        mask_seed: None,
        sensor_coords,
        rows,
        cols,
    }
}

/// Write a data set directory: `observations.csv`, `truth.csv` (when
/// known), `metadata.json`, and with a split also `train.csv` and
/// `split.json`.
pub fn write_dataset(dir: &Path, data: &Dataset, split: Option<(&MaskSplit, u64)>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_observations_csv(&dir.join("observations.csv"), &data.observations)?;
    if let Some(t) = &data.truth {
        write_matrix_csv(&dir.join("truth.csv"), t)?;
    }
    let mut meta = data.metadata.clone();
    if let Some((split, mask_seed)) = split {
        meta.mask_seed = Some(mask_seed);
        let train = super::train_set(&data.observations, split)?;
        write_observations_csv(&dir.join("train.csv"), &train)?;
        std::fs::write(dir.join("split.json"), serde_json::to_string(split)?)?;
    }
    write_metadata(&dir.join("metadata.json"), &meta)
}

/// Read a directory written by [`write_dataset`].
pub fn load_dataset(dir: &Path) -> Result<(Dataset, Option<MaskSplit>)> {
    let observations = read_observations_csv(&dir.join("observations.csv"))?;
    let truth_path = dir.join("truth.csv");
    let truth = truth_path.exists().then(|| read_matrix_csv(&truth_path)).transpose()?;
    let metadata = read_metadata(&dir.join("metadata.json"))?;
    let split_path = dir.join("split.json");
    let split = split_path
        .exists()
        .then(|| -> Result<MaskSplit> { Ok(serde_json::from_str(&std::fs::read_to_string(&split_path)?)?) })
        .transpose()?;
    Ok((Dataset { observations, truth, metadata }, split))
}
