use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lssm_tvd::bench::{
    export_plotdata, load_dataset, rmse_cells, run_and_write, train_set, write_dataset, ExperimentSpec, ModelSettings,
    PlotSeries, Replicate,
};
use lssm_tvd::datagen::io::read_observations_csv;
use lssm_tvd::model::{Checkpoint, ModelVariant, ObservationSet};
use lssm_tvd::vb::{fit, reconstruct, write_sweep_log};

/// Variational state-space models with time-varying dynamics.
#[derive(Parser)]
#[command(name = "tvdlssm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the data set and split described by an experiment spec.
    Generate(GenerateArgs),
    /// Fit one model to a data set and write a checkpoint.
    Fit(FitArgs),
    /// Score a checkpoint on the test sets of a data set.
    Score(ScoreArgs),
    /// Run every method on every replicate of an experiment spec.
    Experiment(ExperimentArgs),
    /// Write CSV series for plotting from a checkpoint.
    ExportPlotdata(ExportArgs),
}

#[derive(Args)]
struct ModelOverrides {
    /// Latent dimension D.
    #[arg(short = 'D', long)]
    latent_dim: Option<usize>,
    /// Number of dynamics matrices K.
    #[arg(short = 'K', long)]
    num_dynamics: Option<usize>,
}

impl ModelOverrides {
    fn apply(&self, m: &mut ModelSettings) {
        if let Some(d) = self.latent_dim {
            m.latent_dim = d;
        }
        if let Some(k) = self.num_dynamics {
            m.num_dynamics = k;
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Experiment spec (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Override the base seed of the spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Which replicate of the spec to generate.
    #[arg(long, default_value_t = 0)]
    replicate: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Data set directory written by `generate` (trains on `train.csv`).
    #[arg(long, conflicts_with = "observations", required_unless_present = "observations")]
    data: Option<PathBuf>,
    /// Or a plain observation table (rows = sensors, empty = missing).
    #[arg(long)]
    observations: Option<PathBuf>,
    /// Experiment spec supplying the model settings.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// lssm, lssm-sd or lssm-tvd.
    #[arg(long, default_value = "lssm-tvd")]
    method: String,
    /// Seed of the random initialisation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    model: ModelOverrides,
    /// Maximum number of sweeps.
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// Data set directory with `split.json`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Also write `score.json` here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment spec (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Override the base seed of the spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to these methods (comma separated or repeated).
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    #[arg(long)]
    replicates: Option<usize>,
    #[command(flatten)]
    model: ModelOverrides,
    /// Output directory; defaults to the spec's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Data set directory; adds the training values to the reconstruction.
    #[arg(long)]
    data: Option<PathBuf>,
    /// reconstruction, mixing-weights, state-probabilities; defaults to
    /// the ones that apply to the fitted model.
    #[arg(long, value_delimiter = ',')]
    series: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Score(a) => score(a),
        Command::Experiment(a) => experiment(a),
        Command::ExportPlotdata(a) => export(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    ExperimentSpec::from_file(path).with_context(|| format!("reading spec {}", path.display()))
}

fn generate(a: GenerateArgs) -> Result<()> {
    let mut spec = load_spec(&a.spec)?;
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let rep = Replicate::new(&spec, a.replicate)?;
    write_dataset(&a.out, &rep.dataset, Some((&rep.split, rep.seeds.mask)))?;
    println!(
        "wrote {}: {}×{} cells, {} gap and {} random test cells",
        a.out.display(),
        rep.dataset.observations.rows(),
        rep.dataset.observations.cols(),
        rep.split.gap_test.len(),
        rep.split.random_test.len()
    );
    Ok(())
}

fn training_data(a: &FitArgs) -> Result<ObservationSet> {
    if let Some(dir) = &a.data {
        let (data, split) = load_dataset(dir).with_context(|| format!("loading {}", dir.display()))?;
        Ok(match split {
            Some(split) => train_set(&data.observations, &split)?,
            None => data.observations,
        })
    } else if let Some(path) = &a.observations {
        Ok(read_observations_csv(path).with_context(|| format!("reading {}", path.display()))?)
    } else {
        bail!("either --data or --observations is required")
    }
}

fn fit_cmd(a: FitArgs) -> Result<()> {
    let data = training_data(&a)?;
    let mut settings = match &a.spec {
        Some(p) => load_spec(p)?.model,
        None => ModelSettings::default(),
    };
    a.model.apply(&mut settings);
    if let Some(m) = a.max_sweeps {
        settings.schedule.max_sweeps = m;
    }
    let variant = ModelVariant::parse(&a.method)?;
    let cfg = settings.config(variant, a.seed);
    let res = fit(&data, &cfg)?;
    std::fs::create_dir_all(&a.out)?;
    Checkpoint::new(cfg, res.sweeps, res.posteriors).save(&a.out.join("checkpoint.json"))?;
    write_sweep_log(&a.out.join("sweeps.jsonl"), &res.reports)?;
    let summary = serde_json::json!({
        "method": variant.name(),
        "sweeps": res.sweeps,
        "converged": res.converged,
        "elbo": res.elbo,
    });
    std::fs::write(a.out.join("fit.json"), serde_json::to_string_pretty(&summary)?)?;
    println!("{summary}");
    Ok(())
}

fn score(a: ScoreArgs) -> Result<()> {
    let (data, split) = load_dataset(&a.data)?;
    let split = split.context("data set has no split.json")?;
    let ck = Checkpoint::load(&a.checkpoint).with_context(|| format!("loading {}", a.checkpoint.display()))?;
    let (mean, _) = reconstruct(&ck.posteriors, false);
    if mean.shape() != data.observations.values().shape() {
        bail!("checkpoint and data set differ in shape");
    }
    let target = data.truth.as_ref().unwrap_or(data.observations.values());
    let gap = rmse_cells(&mean, target, &split.gap_test).ok();
    let random = rmse_cells(&mean, target, &split.random_test).ok();
    let out = serde_json::json!({
        "method": ck.config.variant.name(),
        "gap_rmse": gap,
        "random_rmse": random,
        "against": if data.truth.is_some() { "truth" } else { "observations" },
    });
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("score.json"), serde_json::to_string_pretty(&out)?)?;
    }
    println!("{out}");
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut spec = load_spec(&a.spec)?;
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(r) = a.replicates {
        spec.replicates = r;
    }
    if !a.method.is_empty() {
        spec.methods = a.method.iter().map(|m| ModelVariant::parse(m)).collect::<lssm_tvd::Result<_>>()?;
    }
    a.model.apply(&mut spec.model);
    let out = a
        .out
        .or_else(|| spec.output_dir.clone())
        .context("no output directory: pass --out or set output_dir in the spec")?;
    let run = run_and_write(&spec, &out)?;
    for row in &run.table.aggregates {
        println!(
            "{:<8} gap {:>10} random {:>10} ({} ok, {} failed)",
            row.method.name(),
            row.gap_rmse.map_or("-".into(), |v| format!("{v:.4}")),
            row.random_rmse.map_or("-".into(), |v| format!("{v:.4}")),
            row.succeeded,
            row.failed
        );
    }
    println!("results in {}", out.display());
    Ok(())
}

fn export(a: ExportArgs) -> Result<()> {
    let ck = Checkpoint::load(&a.checkpoint).with_context(|| format!("loading {}", a.checkpoint.display()))?;
    let obs = match &a.data {
        Some(dir) => {
            let (data, split) = load_dataset(dir)?;
            Some(match split {
                Some(split) => train_set(&data.observations, &split)?,
                None => data.observations,
            })
        }
        None => None,
    };
    let series = if a.series.is_empty() {
        PlotSeries::defaults_for(&ck.posteriors)
    } else {
        a.series
            .iter()
            .map(|s| match s.as_str() {
                "reconstruction" => Ok(PlotSeries::Reconstruction),
                "mixing-weights" => Ok(PlotSeries::MixingWeights),
                "state-probabilities" => Ok(PlotSeries::StateProbabilities),
                other => bail!("unknown series `{other}`"),
            })
            .collect::<Result<_>>()?
    };
    for p in export_plotdata(&ck.posteriors, obs.as_ref(), &a.out, &series)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
