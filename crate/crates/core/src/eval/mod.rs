//! Benchmark IO and attribution metrics: IoU matching with P/R/F1 for bar
//! and pie charts, detection rate and covered chart area for line charts.

mod dataset;
mod metrics;
mod report;

pub use dataset::{load_dataset, parse_dataset, DatasetError, DatasetRecord, LineError, LoadedDataset};
pub use metrics::{line_metrics, match_regions, point_covered, prf1, EvalConfig, LineScore, MetricError, Prf, RegionMatch};
pub use report::{evaluate_dataset, summarize, AttributionSystem, EvalReport, GroupSummary, OracleSystem, RecordResult};
