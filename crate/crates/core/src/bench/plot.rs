use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::model::{FactorPosteriors, MixingPosterior, ObservationSet};
use crate::vb::reconstruct;

/// Series that [`export_plotdata`] can write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotSeries {
    /// `reconstruction.csv`: row, time, observed value, mean, mean ± 2σ.
    Reconstruction,
    /// `mixing_weights.csv`: time, component, mean, mean ± 2σ.
    MixingWeights,
    /// `state_probabilities.csv`: time followed by one column per regime.
    StateProbabilities,
}

impl PlotSeries {
    /// The series that apply to a fitted model.
    pub fn defaults_for(post: &FactorPosteriors) -> Vec<PlotSeries> {
        let mut out = vec![PlotSeries::Reconstruction];
        match post.mixing {
            MixingPosterior::Continuous { .. } => out.push(PlotSeries::MixingWeights),
            MixingPosterior::Switching(_) => out.push(PlotSeries::StateProbabilities),
            MixingPosterior::Constant => {}
        }
        out
    }
}

/// Posterior mean and standard deviation at one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub mean: f64,
    pub std: f64,
}

/// One series per mixing-weight component, each of length `N + 1`.
pub fn mixing_weight_series(post: &FactorPosteriors) -> Result<Vec<Vec<SeriesPoint>>> {
    let MixingPosterior::Continuous { s, .. } = &post.mixing else {
        return Err(Error::Unsupported("mixing-weight trajectories exist only for the time-varying model".into()));
    };
    let k = s.dim();
    Ok((0..k)
        .map(|kk| {
            s.means
                .iter()
                .zip(&s.covs)
                .map(|(m, c)| SeriesPoint { mean: m[kk], std: c[(kk, kk)].max(0.0).sqrt() })
                .collect()
        })
        .collect())
}

/// Regime probabilities `q(z_n = k)` for `n = 1..N`.
pub fn state_probability_rows(post: &FactorPosteriors) -> Result<&[Vector]> {
    match &post.mixing {
        MixingPosterior::Switching(h) => Ok(&h.state_probs),
        _ => Err(Error::Unsupported("state probabilities exist only for the switching model".into())),
    }
}

/// Write the requested series as CSV files into `dir` and return their
/// paths. `observations` adds the measured values to the reconstruction.
pub fn export_plotdata(
    post: &FactorPosteriors,
    observations: Option<&ObservationSet>,
    dir: &Path,
    series: &[PlotSeries],
) -> Result<Vec<PathBuf>> {
    // validate every request before writing anything
    for s in series {
        match s {
            PlotSeries::MixingWeights => {
                mixing_weight_series(post)?;
            }
            PlotSeries::StateProbabilities => {
                state_probability_rows(post)?;
            }
            PlotSeries::Reconstruction => {}
        }
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for s in series {
        let path = match s {
            PlotSeries::Reconstruction => {
                let path = dir.join("reconstruction.csv");
                let (mean, var) = reconstruct(post, false);
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(["row", "time", "observed", "mean", "lower", "upper"])?;
                for m in 0..mean.nrows() {
                    for n in 0..mean.ncols() {
                        let mu = mean[(m, n)];
                        let sd = var[(m, n)].sqrt();
                        let obs = observations.and_then(|o| o.get(m, n)).map(fmt).unwrap_or_default();
                        w.write_record([
                            m.to_string(),
                            n.to_string(),
                            obs,
                            fmt(mu),
                            fmt(mu - 2.0 * sd),
                            fmt(mu + 2.0 * sd),
                        ])?;
                    }
                }
                w.flush()?;
                path
            }
            PlotSeries::MixingWeights => {
                let path = dir.join("mixing_weights.csv");
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(["time", "component", "mean", "lower", "upper"])?;
                for (k, comp) in mixing_weight_series(post)?.iter().enumerate() {
                    for (t, p) in comp.iter().enumerate() {
                        w.write_record([
                            t.to_string(),
                            k.to_string(),
                            fmt(p.mean),
                            fmt(p.mean - 2.0 * p.std),
                            fmt(p.mean + 2.0 * p.std),
                        ])?;
                    }
                }
                w.flush()?;
                path
            }
            PlotSeries::StateProbabilities => {
                let path = dir.join("state_probabilities.csv");
                let rows = state_probability_rows(post)?;
                let k = rows.first().map_or(0, |r| r.len());
                let mut w = csv::Writer::from_path(&path)?;
                let mut header = vec!["time".to_string()];
                header.extend((0..k).map(|j| format!("p{j}")));
                w.write_record(&header)?;
                for (n, p) in rows.iter().enumerate() {
                    let mut rec = vec![(n + 1).to_string()];
                    rec.extend(p.iter().map(|v| fmt(*v)));
                    w.write_record(&rec)?;
                }
                w.flush()?;
                path
            }
        };
        written.push(path);
    }
    Ok(written)
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}
