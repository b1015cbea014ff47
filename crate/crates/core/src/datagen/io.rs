//! Dataset files: sensor-by-time CSV tables, JSON metadata and GSOD-style
//! station tables.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::ObservationSet;

/// Cell values treated as missing when reading station tables.
pub const MISSING_MARKERS: [&str; 4] = ["", "NA", "NaN", "9999.9"];

/// Side information stored next to a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    /// Generator name, e.g. `frequency` or `advection-diffusion`.
    pub generator: String,
    /// Generator parameters as written by the generator.
    pub spec: serde_json::Value,
    pub seed: u64,
    pub mask_seed: Option<u64>,
    #[serde(default)]
    pub sensor_coords: Vec<(usize, usize)>,
    pub rows: usize,
    pub cols: usize,
}

/// Write an `M × N` table with one row per sensor; hidden cells are empty.
pub fn write_observations_csv(path: &Path, obs: &ObservationSet) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for m in 0..obs.rows() {
        let row: Vec<String> = (0..obs.cols())
            .map(|n| obs.get(m, n).map(fmt_value).unwrap_or_default())
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Write a fully observed matrix.
pub fn write_matrix_csv(path: &Path, values: &Mat) -> Result<()> {
    write_observations_csv(path, &ObservationSet::from_values(values.clone()))
}

/// Read a table written by [`write_observations_csv`].
pub fn read_observations_csv(path: &Path) -> Result<ObservationSet> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|cell| parse_cell(cell.trim(), &[""]))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    ObservationSet::from_rows(&rows)
}

/// Read a fully observed matrix.
pub fn read_matrix_csv(path: &Path) -> Result<Mat> {
    let obs = read_observations_csv(path)?;
    if obs.observed_count() != obs.rows() * obs.cols() {
        return Err(Error::Parse(format!("{} has empty cells", path.display())));
    }
    Ok(obs.values().clone())
}

pub fn write_metadata(path: &Path, meta: &DatasetMetadata) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

pub fn read_metadata(path: &Path) -> Result<DatasetMetadata> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// A station table after the missing-data filter.
#[derive(Debug, Clone)]
pub struct StationTable {
    pub stations: Vec<String>,
    /// Column labels (dates) from the header.
    pub days: Vec<String>,
    pub observations: ObservationSet,
    /// Stations removed for having too many missing values.
    pub dropped: Vec<String>,
}

/// Read a GSOD-style CSV: a header `station,<day>,<day>,...` followed by one
/// row per station. Stations missing more than `max_missing_fraction` of
/// their values are dropped.
pub fn read_station_csv(path: &Path, max_missing_fraction: f64) -> Result<StationTable> {
    let mut r = csv::ReaderBuilder::new().flexible(false).from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::Parse("station table needs a station column and at least one day".into()));
    }
    let days: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut stations = Vec::new();
    let mut dropped = Vec::new();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let id = rec.get(0).unwrap_or_default().trim().to_string();
        let row = rec
            .iter()
            .skip(1)
            .map(|cell| parse_cell(cell.trim(), &MISSING_MARKERS))
            .collect::<Result<Vec<_>>>()?;
        let missing = row.iter().filter(|v| v.is_none()).count();
        if missing as f64 > max_missing_fraction * row.len() as f64 {
            dropped.push(id);
        } else {
            stations.push(id);
            rows.push(row);
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse("no station passed the missing-data filter".into()));
    }
    Ok(StationTable {
        stations,
        days,
        observations: ObservationSet::from_rows(&rows)?,
        dropped,
    })
}

/// Write a GSOD-style CSV; hidden cells are written as empty.
pub fn write_station_csv(path: &Path, stations: &[String], days: &[String], obs: &ObservationSet) -> Result<()> {
    if stations.len() != obs.rows() || days.len() != obs.cols() {
        return Err(Error::Dimension(format!(
            "{} stations × {} days for a {}×{} table",
            stations.len(),
            days.len(),
            obs.rows(),
            obs.cols()
        )));
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["station".to_string()];
    header.extend(days.iter().cloned());
    w.write_record(&header)?;
    for (m, id) in stations.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend((0..obs.cols()).map(|n| obs.get(m, n).map(fmt_value).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_cell(cell: &str, missing: &[&str]) -> Result<Option<f64>> {
    if missing.contains(&cell) {
        return Ok(None);
    }
    let v: f64 = cell.parse().map_err(|_| Error::Parse(format!("bad numeric cell {cell:?}")))?;
    if v.is_finite() {
        Ok(Some(v))
    } else {
        Ok(None)
    }
}

// shortest representation that round-trips
fn fmt_value(v: f64) -> String {
    format!("{v:?}")
}
