use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{generate, ChartSpec, GeneratedChart, SampleOptions, SynthError, Theme};
use crate::eval::DatasetRecord;
use crate::geometry::{ChartKind, Point};

/// Options for a generated benchmark split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateOptions {
    /// `None` cycles bar, pie, line.
    pub kind: Option<ChartKind>,
    pub count: usize,
    pub seed: u64,
    pub theme: Option<Theme>,
    pub sectors: Option<usize>,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self { kind: None, count: 10, seed: 0, theme: None, sectors: None }
    }
}

/// Per-chart seed, independent of generation order.
fn chart_seed(seed: u64, index: usize) -> u64 {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)).random()
}

/// Renders `opts.count` charts and one QA record per chart.
pub fn generate_dataset(opts: &GenerateOptions) -> Result<Vec<(GeneratedChart, DatasetRecord)>, SynthError> {
    let sample = SampleOptions { theme: opts.theme, sectors: opts.sectors, ..Default::default() };
    (0..opts.count)
        .into_par_iter()
        .map(|i| {
            let kind = opts.kind.unwrap_or(ChartKind::ALL[i % 3]);
            let seed = chart_seed(opts.seed, i);
            let spec = ChartSpec::sample(kind, seed, sample)?;
            let id = format!("{}-{:04}", kind.as_str(), i);
            let chart = generate(&spec, &id)?;
            let record = qa_record(&chart, kind, &id, seed);
            Ok((chart, record))
        })
        .collect()
}

fn qa_record(chart: &GeneratedChart, kind: ChartKind, id: &str, seed: u64) -> DatasetRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(17));
    let marks = chart.truth.marks();
    let mut rec = DatasetRecord {
        id: id.to_string(),
        chart_path: PathBuf::from(format!("charts/{id}.png")),
        kind,
        question: String::new(),
        answer: String::new(),
        source: Some("synthetic".into()),
        gt_regions: Vec::new(),
        gt_points: Vec::new(),
    };
    match kind {
        ChartKind::Bar => {
            let a = rng.random_range(0..marks.len());
            let e = &chart.elements[a];
            let two = marks.len() > 1 && rng.random_bool(0.4);
            if two {
                let mut b = rng.random_range(0..marks.len() - 1);
                if b >= a {
                    b += 1;
                }
                let f = &chart.elements[b];
                let (hi, lo) = if e.value >= f.value { (e, f) } else { (f, e) };
                rec.question = format!("Is {} {} higher than {} {}?", e.series, e.category, f.series, f.category);
                rec.answer = format!("{} {} ({}) is higher than {} {} ({}).", hi.series, hi.category, hi.value, lo.series, lo.category, lo.value);
                rec.gt_regions = vec![marks[a].region.clone(), marks[b].region.clone()];
            } else {
                rec.question = format!("What is the value of {} for {}?", e.series, e.category);
                rec.answer = format!("The value of {} for {} is {}.", e.series, e.category, e.value);
                rec.gt_regions = vec![marks[a].region.clone()];
            }
        }
        ChartKind::Pie => {
            let a = rng.random_range(0..marks.len());
            let e = &chart.elements[a];
            let total: f64 = chart.elements.iter().map(|e| e.value).sum();
            rec.question = format!("What share of the total does {} represent?", e.category);
            rec.answer = format!("{} represents {:.1}% of the total.", e.category, 100.0 * e.value / total);
            rec.gt_regions = vec![marks[a].region.clone()];
        }
        ChartKind::Line => {
            let s = rng.random_range(0..chart.lines.len());
            let line = &chart.lines[s];
            let elems: Vec<_> = chart.elements.iter().filter(|e| e.series == line.series).collect();
            let n = line.vertices.len();
            let k0 = rng.random_range(0..n - 1);
            let k1 = rng.random_range(k0 + 1..n.min(k0 + 4));
            let (a, b) = (elems[k0], elems[k1]);
            let trend = if b.value > a.value { "rose" } else if b.value < a.value { "fell" } else { "stayed flat" };
            rec.question = format!("How did {} change between {} and {}?", line.series, a.category, b.category);
            rec.answer = format!("{} {} from {} in {} to {} in {}.", line.series, trend, a.value, a.category, b.value, b.category);
            rec.gt_points = line.vertices[k0..=k1].iter().map(|p| Point::new(p.x, p.y)).collect();
        }
    }
    rec
}

/// Writes `charts/<id>.png` and `dataset.jsonl` under `out_dir`. Every file
/// is written to a temporary sibling and renamed into place.
pub fn write_dataset(out_dir: &Path, items: &[(GeneratedChart, DatasetRecord)]) -> Result<PathBuf, SynthError> {
    fs::create_dir_all(out_dir.join("charts"))?;
    let mut jsonl = String::new();
    for (chart, rec) in items {
        let png = chart.image.encode_png()?;
        crate::io::write_atomic(&out_dir.join(&rec.chart_path), &png)?;
        jsonl.push_str(&serde_json::to_string(rec)?);
        jsonl.push('\n');
    }
    let path = out_dir.join("dataset.jsonl");
    crate::io::write_atomic(&path, jsonl.as_bytes())?;
    Ok(path)
}
