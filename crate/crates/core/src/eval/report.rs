use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::DatasetRecord;
use super::metrics::{line_metrics, match_regions, EvalConfig, LineScore, Prf};
use crate::geometry::{AttributionSet, ChartImage, ChartKind, Rect, Region};
use crate::Error;

/// Anything that maps a benchmark record to an attribution.
pub trait AttributionSystem: Sync {
    fn name(&self) -> &str;
    fn attribute(&self, record: &DatasetRecord, chart: &ChartImage) -> Result<AttributionSet, Error>;
}

/// Returns the ground truth verbatim; line points become 1×1 boxes.
pub struct OracleSystem;

impl AttributionSystem for OracleSystem {
    fn name(&self) -> &str {
        "oracle"
    }

    fn attribute(&self, record: &DatasetRecord, chart: &ChartImage) -> Result<AttributionSet, Error> {
        let selected = match record.kind {
            ChartKind::Line => {
                record.gt_points.iter().map(|p| Region::boxed(ChartKind::Line, Rect::new(p.x, p.y, p.x + 1, p.y + 1))).collect()
            }
            _ => record.gt_regions.clone(),
        };
        Ok(AttributionSet { chart_id: chart.id().to_string(), response: record.answer.clone(), selected })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordResult {
    pub id: String,
    pub kind: ChartKind,
    pub source: String,
    pub detected: usize,
    pub gt: usize,
    /// Matched pairs (bar/pie) or covered points (line).
    pub matched: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prf: Option<Prf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<LineScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Aggregates for one (kind, source) group; all values are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub kind: ChartKind,
    pub source: String,
    pub records: usize,
    pub failures: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub micro: Option<Prf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub macro_avg: Option<Prf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_pct: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub macro_detection_pct: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub system: String,
    pub iou_threshold: f64,
    pub aggregation: String,
    pub total: usize,
    pub failures: usize,
    pub groups: Vec<GroupSummary>,
    pub records: Vec<RecordResult>,
}

fn score_record(record: &DatasetRecord, base_dir: &Path, system: &dyn AttributionSystem, cfg: &EvalConfig) -> RecordResult {
    let mut result = RecordResult {
        id: record.id.clone(),
        kind: record.kind,
        source: record.source_or_default().to_string(),
        detected: 0,
        gt: if record.kind == ChartKind::Line { record.gt_points.len() } else { record.gt_regions.len() },
        matched: 0,
        prf: None,
        line: None,
        error: None,
    };
    let chart = match ChartImage::load(record.resolve_chart(base_dir)) {
        Ok(c) => Some(c.with_id(record.id.clone())),
        Err(e) => {
            result.error = Some(format!("chart: {e}"));
            None
        }
    };
    let selected = match &chart {
        Some(c) => match system.attribute(record, c) {
            Ok(a) => a.selected,
            Err(e) => {
                result.error = Some(e.to_string());
                Vec::new()
            }
        },
        None => Vec::new(),
    };
    result.detected = selected.len();
    let dims = chart.as_ref().map(ChartImage::dims);
    match record.kind {
        ChartKind::Line => {
            let score = dims.and_then(|d| match line_metrics(&selected, &record.gt_points, d) {
                Ok(s) => Some(s),
                Err(e) => {
                    result.error.get_or_insert(format!("metrics: {e}"));
                    None
                }
            });
            let score = score.unwrap_or(LineScore { total_points: record.gt_points.len(), ..Default::default() });
            result.matched = score.covered_points;
            result.line = Some(score);
        }
        _ => {
            let matched = dims.map(|d| match_regions(&selected, &record.gt_regions, d, cfg));
            result.matched = match matched {
                Some(Ok(m)) => m.len(),
                Some(Err(e)) => {
                    result.error.get_or_insert(format!("metrics: {e}"));
                    0
                }
                None => 0,
            };
            result.prf = Some(Prf::from_counts(result.matched, result.detected, result.gt));
        }
    }
    result
}

/// Runs `system` on every record (in parallel when `jobs > 1`) and folds the
/// per-record scores in record-id order. Failures never abort the run; they
/// score as empty attributions.
pub fn evaluate_dataset(records: &[DatasetRecord], base_dir: &Path, system: &dyn AttributionSystem, cfg: &EvalConfig, jobs: usize) -> EvalReport {
    let run = || records.par_iter().map(|r| score_record(r, base_dir, system, cfg)).collect::<Vec<_>>();
    let mut results = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => records.iter().map(|r| score_record(r, base_dir, system, cfg)).collect(),
    };
    results.sort_by(|a, b| a.id.cmp(&b.id));
    summarize(system.name(), cfg, results)
}

pub fn summarize(system: &str, cfg: &EvalConfig, records: Vec<RecordResult>) -> EvalReport {
    let mut groups: BTreeMap<(ChartKind, String), Vec<&RecordResult>> = BTreeMap::new();
    for r in &records {
        groups.entry((r.kind, r.source.clone())).or_default().push(r);
        if r.source != "all" {
            groups.entry((r.kind, "all".to_string())).or_default().push(r);
        }
    }
    let mut summaries: Vec<GroupSummary> = groups.into_iter().map(|((kind, source), rs)| group_summary(kind, source, &rs)).collect();
    // per kind: named sources alphabetically, then the "all" row
    summaries.sort_by(|a, b| (a.kind, a.source == "all", &a.source).cmp(&(b.kind, b.source == "all", &b.source)));
    EvalReport {
        system: system.to_string(),
        iou_threshold: cfg.iou_threshold,
        aggregation: "micro".into(),
        total: records.len(),
        failures: records.iter().filter(|r| r.error.is_some()).count(),
        groups: summaries,
        records,
    }
}

fn group_summary(kind: ChartKind, source: String, rs: &[&RecordResult]) -> GroupSummary {
    let n = rs.len();
    let failures = rs.iter().filter(|r| r.error.is_some()).count();
    let mut s = GroupSummary { kind, source, records: n, failures, micro: None, macro_avg: None, detection_pct: None, macro_detection_pct: None, area_pct: None };
    match kind {
        ChartKind::Line => {
            let covered: usize = rs.iter().map(|r| r.matched).sum();
            let total: usize = rs.iter().map(|r| r.gt).sum();
            let scores: Vec<LineScore> = rs.iter().map(|r| r.line.unwrap_or_default()).collect();
            s.detection_pct = Some(if total == 0 { 0.0 } else { 100.0 * covered as f64 / total as f64 });
            s.macro_detection_pct = Some(100.0 * scores.iter().map(|l| l.detection_rate).sum::<f64>() / n.max(1) as f64);
            s.area_pct = Some(100.0 * scores.iter().map(|l| l.area_fraction).sum::<f64>() / n.max(1) as f64);
        }
        _ => {
            let matched = rs.iter().map(|r| r.matched).sum();
            let detected = rs.iter().map(|r| r.detected).sum();
            let gt = rs.iter().map(|r| r.gt).sum();
            s.micro = Some(Prf::from_counts(matched, detected, gt).percent());
            let per: Vec<Prf> = rs.iter().map(|r| r.prf.unwrap_or_default()).collect();
            let mean = |f: fn(&Prf) -> f64| 100.0 * per.iter().map(f).sum::<f64>() / n.max(1) as f64;
            s.macro_avg = Some(Prf { precision: mean(|p| p.precision), recall: mean(|p| p.recall), f1: mean(|p| p.f1) });
        }
    }
    s
}

impl EvalReport {
    /// Aligned text tables: P/R/F1 for bar and pie charts, detection and
    /// chart-area percentages for line charts.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "Attribution evaluation").unwrap();
        writeln!(
            out,
            "system: {}   iou threshold: {:.2}   records: {}   failures: {}",
            self.system, self.iou_threshold, self.total, self.failures
        )
        .unwrap();
        for kind in [ChartKind::Bar, ChartKind::Pie, ChartKind::Line] {
            let rows: Vec<&GroupSummary> = self.groups.iter().filter(|g| g.kind == kind).collect();
            if rows.is_empty() {
                continue;
            }
            out.push('\n');
            match kind {
                ChartKind::Line => {
                    writeln!(out, "Line charts").unwrap();
                    writeln!(out, "{:<14} {:>5} {:>11} {:>12}", "Source", "n", "Detection%", "Chart-Area%").unwrap();
                    for g in rows {
                        writeln!(
                            out,
                            "{:<14} {:>5} {:>11.2} {:>12.2}",
                            g.source,
                            g.records,
                            g.detection_pct.unwrap_or(0.0),
                            g.area_pct.unwrap_or(0.0)
                        )
                        .unwrap();
                    }
                }
                _ => {
                    let title = if kind == ChartKind::Bar { "Bar charts" } else { "Pie charts" };
                    writeln!(out, "{title} (micro-averaged)").unwrap();
                    writeln!(out, "{:<14} {:>5} {:>8} {:>8} {:>8}", "Source", "n", "P", "R", "F1").unwrap();
                    for g in rows {
                        let p = g.micro.unwrap_or_default();
                        writeln!(out, "{:<14} {:>5} {:>8.2} {:>8.2} {:>8.2}", g.source, g.records, p.precision, p.recall, p.f1).unwrap();
                    }
                }
            }
        }
        let macros: Vec<&GroupSummary> = self.groups.iter().filter(|g| g.source == "all").collect();
        if !macros.is_empty() {
            out.push('\n');
            writeln!(out, "Macro averages").unwrap();
            for g in macros {
                match (g.macro_avg, g.macro_detection_pct) {
                    (Some(p), _) => writeln!(out, "{:<5} P {:.2} R {:.2} F1 {:.2}", g.kind.as_str(), p.precision, p.recall, p.f1).unwrap(),
                    (None, Some(d)) => writeln!(out, "{:<5} Detection {:.2}", g.kind.as_str(), d).unwrap(),
                    _ => {}
                }
            }
        }
        out
    }
}
