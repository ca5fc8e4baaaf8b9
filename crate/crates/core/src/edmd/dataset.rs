//! Snapshot datasets and their CSV + sidecar-JSON file format.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One snapshot triple: the state `x`, the input `u` held over the sampling
/// interval, and the state `y` observed `tau` time units later.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
}

/// A set of snapshot triples with a common sampling interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotDataset {
    state_dim: usize,
    input_dim: usize,
    tau: f64,
    snapshots: Vec<Snapshot>,
}

/// Sidecar metadata stored next to the CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub state_dim: usize,
    pub input_dim: usize,
    pub tau: f64,
}

impl SnapshotDataset {
    pub fn new(
        state_dim: usize,
        input_dim: usize,
        tau: f64,
        snapshots: Vec<Snapshot>,
    ) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidInput("tau must be positive".into()));
        }
        if snapshots.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for s in &snapshots {
            if s.x.len() != state_dim || s.y.len() != state_dim {
                return Err(Error::DimensionMismatch {
                    expected: state_dim,
                    got: s.x.len().max(s.y.len()),
                });
            }
            if s.u.len() != input_dim {
                return Err(Error::DimensionMismatch {
                    expected: input_dim,
                    got: s.u.len(),
                });
            }
        }
        Ok(Self {
            state_dim,
            input_dim,
            tau,
            snapshots,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    /// Write the CSV (header `x_1..x_d, u_1..u_m, y_1..y_d`) and its sidecar
    /// JSON. Output is byte-deterministic for identical data.
    pub fn write_csv(&self, csv_path: impl AsRef<Path>, meta_path: impl AsRef<Path>) -> Result<()> {
        let mut header = Vec::new();
        for i in 1..=self.state_dim {
            header.push(format!("x_{i}"));
        }
        for i in 1..=self.input_dim {
            header.push(format!("u_{i}"));
        }
        for i in 1..=self.state_dim {
            header.push(format!("y_{i}"));
        }
        let mut writer = csv::Writer::from_path(csv_path.as_ref())?;
        writer.write_record(&header)?;
        for s in &self.snapshots {
            let row: Vec<String> = s
                .x
                .iter()
                .chain(&s.u)
                .chain(&s.y)
                .map(|v| format!("{v}"))
                .collect();
            writer.write_record(&row)?;
        }
        writer.flush()?;

        let meta = DatasetMeta {
            state_dim: self.state_dim,
            input_dim: self.input_dim,
            tau: self.tau,
        };
        std::fs::write(meta_path, serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn read_csv(csv_path: impl AsRef<Path>, meta_path: impl AsRef<Path>) -> Result<Self> {
        let meta: DatasetMeta = serde_json::from_str(&std::fs::read_to_string(meta_path)?)?;
        let d = meta.state_dim;
        let m = meta.input_dim;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(csv_path.as_ref())?;
        let mut snapshots = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != 2 * d + m {
                return Err(Error::Parse {
                    line: idx + 2,
                    message: format!(
                        "expected {} columns, found {}",
                        2 * d + m,
                        record.len()
                    ),
                });
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim().parse().map_err(|_| Error::Parse {
                    line: idx + 2,
                    message: format!("invalid number `{s}`"),
                })
            };
            let values: Vec<f64> = record.iter().map(parse).collect::<Result<_>>()?;
            snapshots.push(Snapshot {
                x: values[0..d].to_vec(),
                u: values[d..d + m].to_vec(),
                y: values[d + m..].to_vec(),
            });
        }
        Self::new(d, m, meta.tau, snapshots)
    }
}
