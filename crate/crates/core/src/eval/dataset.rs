//! JSONL benchmark records.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ChartKind, Point, Region};

/// One benchmark row: a chart, a question/answer pair and its ground-truth
/// attribution (regions for bar and pie charts, points for line charts).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub id: String,
    /// Relative paths resolve against the dataset file's directory.
    pub chart_path: PathBuf,
    pub kind: ChartKind,
    pub question: String,
    pub answer: String,
    /// Optional provenance tag used to group report rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gt_regions: Vec<Region>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gt_points: Vec<Point>,
}

impl DatasetRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        match self.kind {
            ChartKind::Bar | ChartKind::Pie => {
                if !self.gt_points.is_empty() {
                    return Err(format!("kind {:?} carries gt_points; {} records need gt_regions", self.kind.as_str(), self.kind));
                }
                if self.gt_regions.is_empty() {
                    return Err(format!("{} record needs at least one gt_region", self.kind));
                }
                if let Some(r) = self.gt_regions.iter().find(|r| r.kind != self.kind) {
                    return Err(format!("gt region of kind {} in a {} record", r.kind, self.kind));
                }
            }
            ChartKind::Line => {
                if !self.gt_regions.is_empty() {
                    return Err("kind \"line\" carries gt_regions; line records need gt_points".into());
                }
                if self.gt_points.is_empty() {
                    return Err("line record needs at least one gt_point".into());
                }
            }
        }
        Ok(())
    }

    pub fn resolve_chart(&self, base_dir: &Path) -> PathBuf {
        if self.chart_path.is_absolute() {
            self.chart_path.clone()
        } else {
            base_dir.join(&self.chart_path)
        }
    }

    pub fn source_or_default(&self) -> &str {
        self.source.as_deref().unwrap_or("all")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("dataset has {} invalid line(s): {}", .0.len(), .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Schema(Vec<LineError>),
}

#[derive(Debug, Clone, Default)]
pub struct LoadedDataset {
    pub records: Vec<DatasetRecord>,
    pub warnings: Vec<String>,
    pub base_dir: PathBuf,
}

/// Parses JSONL text; blank lines are skipped and every bad line is
/// reported with its 1-based number.
pub fn parse_dataset(text: &str) -> Result<(Vec<DatasetRecord>, Vec<String>), DatasetError> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let n = i + 1;
        match serde_json::from_str::<DatasetRecord>(line) {
            Ok(rec) => match rec.validate() {
                Ok(()) if !seen.insert(rec.id.clone()) => errors.push(LineError { line: n, message: format!("duplicate id {:?}", rec.id) }),
                Ok(()) => records.push(rec),
                Err(message) => errors.push(LineError { line: n, message }),
            },
            Err(e) => errors.push(LineError { line: n, message: e.to_string() }),
        }
    }
    if !errors.is_empty() {
        return Err(DatasetError::Schema(errors));
    }
    let warnings = if records.is_empty() { vec!["dataset is empty".to_string()] } else { Vec::new() };
    Ok((records, warnings))
}

/// Loads and schema-checks a JSONL dataset. Chart files are not opened here.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<LoadedDataset, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    let (records, warnings) = parse_dataset(&text)?;
    for w in &warnings {
        log::warn!("{}: {w}", path.display());
    }
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedDataset { records, warnings, base_dir })
}
