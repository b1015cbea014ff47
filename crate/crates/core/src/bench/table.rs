use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::ModelVariant;

/// Scores and diagnostics of one (method, replicate) fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub method: ModelVariant,
    pub replicate: usize,
    pub data_seed: u64,
    pub mask_seed: u64,
    pub fit_seed: u64,
    pub gap_rmse: Option<f64>,
    pub random_rmse: Option<f64>,
    pub sweeps: Option<usize>,
    pub converged: Option<bool>,
    pub elbo: Option<f64>,
    /// Set when the fit or its scoring failed.
    pub error: Option<String>,
}

impl ReplicateRow {
    pub fn ok(&self) -> bool {
        self.error.is_none() && self.gap_rmse.is_some()
    }
}

/// Means over the successful replicates of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: ModelVariant,
    pub succeeded: usize,
    pub failed: usize,
    pub gap_rmse: Option<f64>,
    pub random_rmse: Option<f64>,
    pub sweeps: Option<f64>,
    pub elbo: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub name: String,
    pub replicates: Vec<ReplicateRow>,
    pub aggregates: Vec<AggregateRow>,
}

const HEADER: [&str; 13] = [
    "row", "method", "replicate", "data_seed", "mask_seed", "fit_seed", "gap_rmse", "random_rmse", "sweeps",
    "converged", "elbo", "succeeded", "error",
];

impl ResultsTable {
    /// Build the table, appending one aggregate row per method in order of
    /// first appearance.
    pub fn new(name: String, replicates: Vec<ReplicateRow>) -> Self {
        let mut methods: Vec<ModelVariant> = Vec::new();
        for r in &replicates {
            if !methods.contains(&r.method) {
                methods.push(r.method);
            }
        }
        let aggregates = methods.iter().map(|&m| aggregate(m, &replicates)).collect();
        Self { name, replicates, aggregates }
    }

    pub fn aggregate(&self, method: ModelVariant) -> Option<&AggregateRow> {
        self.aggregates.iter().find(|a| a.method == method)
    }

    pub fn row(&self, method: ModelVariant, replicate: usize) -> Option<&ReplicateRow> {
        self.replicates.iter().find(|r| r.method == method && r.replicate == replicate)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    /// Replicate rows (`row = replicate`) followed by aggregate rows
    /// (`row = mean`); empty cells for values that do not apply.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(HEADER)?;
        for r in &self.replicates {
            w.write_record([
                "replicate".to_string(),
                r.method.to_string(),
                r.replicate.to_string(),
                r.data_seed.to_string(),
                r.mask_seed.to_string(),
                r.fit_seed.to_string(),
                opt(r.gap_rmse),
                opt(r.random_rmse),
                r.sweeps.map(|v| v.to_string()).unwrap_or_default(),
                r.converged.map(|v| v.to_string()).unwrap_or_default(),
                opt(r.elbo),
                String::new(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        for a in &self.aggregates {
            w.write_record([
                "mean".to_string(),
                a.method.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                opt(a.gap_rmse),
                opt(a.random_rmse),
                opt(a.sweeps),
                String::new(),
                opt(a.elbo),
                a.succeeded.to_string(),
                if a.failed > 0 { format!("{} failed", a.failed) } else { String::new() },
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn aggregate(method: ModelVariant, rows: &[ReplicateRow]) -> AggregateRow {
    let ok: Vec<&ReplicateRow> = rows.iter().filter(|r| r.method == method && r.ok()).collect();
    let total = rows.iter().filter(|r| r.method == method).count();
    AggregateRow {
        method,
        succeeded: ok.len(),
        failed: total - ok.len(),
        gap_rmse: mean(ok.iter().filter_map(|r| r.gap_rmse)),
        random_rmse: mean(ok.iter().filter_map(|r| r.random_rmse)),
        sweeps: mean(ok.iter().filter_map(|r| r.sweeps.map(|s| s as f64))),
        elbo: mean(ok.iter().filter_map(|r| r.elbo)),
    }
}
