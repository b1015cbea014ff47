use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FactorPosteriors, ModelConfig};

pub const CHECKPOINT_SCHEMA: &str = "lssm-tvd/checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// On-disk snapshot of a fit.
///
/// JSON object with fields `schema` (always `"lssm-tvd/checkpoint"`),
/// `version` (currently 1), `config` (the [`ModelConfig`]), `sweeps` (number
/// of completed sweeps) and `posteriors`. Posteriors carry a `mixing` object
/// tagged by `kind`: `constant`, `continuous` or `switching`. Matrices are
/// nalgebra's serde form `[column-major data, rows, cols]`. Floats are written
/// in shortest round-trip form so a load reproduces every bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema: String,
    pub version: u32,
    pub config: ModelConfig,
    pub sweeps: usize,
    pub posteriors: FactorPosteriors,
}

impl Checkpoint {
    pub fn new(config: ModelConfig, sweeps: usize, posteriors: FactorPosteriors) -> Self {
        Self {
            schema: CHECKPOINT_SCHEMA.to_string(),
            version: CHECKPOINT_VERSION,
            config,
            sweeps,
            posteriors,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.schema != CHECKPOINT_SCHEMA {
            return Err(Error::Parse(format!("unexpected schema `{}`", ck.schema)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::SchemaVersion {
                found: ck.version,
                expected: CHECKPOINT_VERSION,
            });
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        // re-validate through the same path as in-memory text
        if ck.schema != CHECKPOINT_SCHEMA {
            return Err(Error::Parse(format!("unexpected schema `{}`", ck.schema)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::SchemaVersion {
                found: ck.version,
                expected: CHECKPOINT_VERSION,
            });
        }
        Ok(ck)
    }
}
