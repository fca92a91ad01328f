use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::client::{ChatModel, MllmError};
use super::parse::{parse_attribution_response, AttributionResult};
use super::prompt::{build_prompt, build_zero_shot_prompt, FewShot};
use super::render::render_marks;
use crate::bars::{detect_bars, BarSegConfig};
use crate::eval::{AttributionSystem, DatasetRecord};
use crate::geometry::{AttributionSet, ChartImage, ChartKind, MarkSet, Rect, Region};
use crate::lines::{detect_lines, ColorTrace, LineExtractor, LineMarkConfig};
use crate::pie::{detect_pie, PieSegConfig};
use crate::refine::{IdentityRefiner, RefineConfig, RefinementBackend};
use crate::Error;

/// Segmentation settings for all chart kinds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentConfig {
    pub bars: BarSegConfig,
    pub pie: PieSegConfig,
    pub lines: LineMarkConfig,
    pub color_trace: ColorTrace,
    pub refine: RefineConfig,
}

impl SegmentConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.bars.validate()?;
        self.pie.validate()?;
        self.lines.validate()?;
        self.color_trace.validate()?;
        self.refine.validate()
    }
}

/// Pluggable external components.
#[derive(Clone)]
pub struct Backends {
    pub refiner: Arc<dyn RefinementBackend>,
    pub line_extractor: Arc<dyn LineExtractor>,
}

impl Default for Backends {
    fn default() -> Self {
        Self { refiner: Arc::new(IdentityRefiner), line_extractor: Arc::new(ColorTrace::default()) }
    }
}

/// Runs the segmenter for `kind`. Bar and line charts without elements
/// give an empty set with a warning.
pub fn segment(img: &ChartImage, kind: ChartKind, cfg: &SegmentConfig, backends: &Backends) -> Result<MarkSet, Error> {
    Ok(match kind {
        ChartKind::Bar => detect_bars(img, &cfg.bars, &cfg.refine, backends.refiner.as_ref()),
        ChartKind::Pie => detect_pie(img, &cfg.pie, &cfg.refine, backends.refiner.as_ref())?,
        ChartKind::Line => detect_lines(img, &cfg.lines, backends.line_extractor.as_ref())?,
    })
}

/// Everything produced by one attribution run.
#[derive(Debug, Clone)]
pub struct Attribution {
    pub marks: MarkSet,
    pub marked_image: ChartImage,
    pub result: AttributionResult,
}

pub struct Attributor<'a> {
    pub cfg: &'a SegmentConfig,
    pub backends: &'a Backends,
    pub model: &'a dyn ChatModel,
    pub few_shot: &'a FewShot,
}

impl Attributor<'_> {
    /// Segment, render marks, prompt, query and parse. `key` is passed to
    /// the model (record or chart id).
    pub fn attribute(&self, img: &ChartImage, question: &str, answer: &str, kind: ChartKind, key: &str) -> Result<Attribution, Error> {
        let marks = segment(img, kind, self.cfg, self.backends)?;
        if marks.is_empty() {
            return Err(Error::NoMarks(kind));
        }
        let marked_image = render_marks(img, &marks)?;
        let prompt = build_prompt(marked_image.clone(), &marks, question, answer, kind, self.few_shot);
        let text = self.model.complete(&prompt, key)?;
        let result = parse_attribution_response(&text, &marks, kind);
        Ok(Attribution { marks, marked_image, result })
    }
}

/// Parses the baseline's JSON list of normalized `[x0, y0, x1, y1]` boxes,
/// scaling to pixels with rounding. Malformed or out-of-range entries are
/// dropped with a warning.
pub fn parse_normalized_boxes(text: &str, width: u32, height: u32, kind: ChartKind) -> (Vec<Region>, Vec<String>) {
    let mut warnings = Vec::new();
    let json = match (text.find('['), text.rfind(']')) {
        (Some(a), Some(b)) if a < b => &text[a..=b],
        _ => {
            warnings.push("reply contains no JSON list".to_string());
            return (Vec::new(), warnings);
        }
    };
    let entries: Vec<serde_json::Value> = match serde_json::from_str(json) {
        Ok(v) => v,
        Err(e) => {
            warnings.push(format!("reply is not a JSON list: {e}"));
            return (Vec::new(), warnings);
        }
    };
    let mut out = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        let coords: Option<Vec<f64>> = e.as_array().filter(|a| a.len() == 4).and_then(|a| a.iter().map(serde_json::Value::as_f64).collect());
        let Some(c) = coords else {
            warnings.push(format!("entry {i} is not four numbers"));
            continue;
        };
        let in_unit = c.iter().all(|v| (0.0..=1.0).contains(v));
        if !in_unit || c[0] >= c[2] || c[1] >= c[3] {
            warnings.push(format!("entry {i} is not a box inside [0, 1]"));
            continue;
        }
        let sx = |v: f64| (v * width as f64).round() as u32;
        let sy = |v: f64| (v * height as f64).round() as u32;
        let rect = Rect::new(sx(c[0]), sy(c[1]), sx(c[2]), sy(c[3]));
        if rect.is_empty() {
            warnings.push(format!("entry {i} is smaller than a pixel"));
            continue;
        }
        out.push(Region::boxed(kind, rect));
    }
    (out, warnings)
}

/// Zero-shot baseline: the unmarked chart, asked directly for boxes.
pub fn zero_shot_bbox_baseline(
    img: &ChartImage,
    question: &str,
    answer: &str,
    kind: ChartKind,
    model: &dyn ChatModel,
    key: &str,
) -> Result<(AttributionSet, Vec<String>), MllmError> {
    let prompt = build_zero_shot_prompt(img.clone(), question, answer, kind);
    let text = model.complete(&prompt, key)?;
    let (selected, warnings) = parse_normalized_boxes(&text, img.width(), img.height(), kind);
    Ok((AttributionSet { chart_id: img.id().to_string(), response: answer.to_string(), selected }, warnings))
}

/// The full pipeline as an evaluation system.
pub struct ChartLensSystem {
    pub cfg: SegmentConfig,
    pub backends: Backends,
    pub model: Arc<dyn ChatModel>,
    pub few_shot: FewShot,
}

impl AttributionSystem for ChartLensSystem {
    fn name(&self) -> &str {
        "chartlens"
    }

    fn attribute(&self, record: &DatasetRecord, chart: &ChartImage) -> Result<AttributionSet, Error> {
        let a = Attributor { cfg: &self.cfg, backends: &self.backends, model: self.model.as_ref(), few_shot: &self.few_shot };
        let out = a.attribute(chart, &record.question, &record.answer, record.kind, &record.id)?;
        Ok(AttributionSet { chart_id: chart.id().to_string(), response: record.answer.clone(), selected: out.result.selected })
    }
}

pub struct ZeroShotSystem {
    pub model: Arc<dyn ChatModel>,
}

impl AttributionSystem for ZeroShotSystem {
    fn name(&self) -> &str {
        "zeroshot"
    }

    fn attribute(&self, record: &DatasetRecord, chart: &ChartImage) -> Result<AttributionSet, Error> {
        Ok(zero_shot_bbox_baseline(chart, &record.question, &record.answer, record.kind, self.model.as_ref(), &record.id)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::som::client::ScriptedModel;
    use crate::som::parse::{LabelRef, Validation};
    use crate::synth::{generate, BarMode, ChartData, ChartSpec, Orientation, Series, Style, Theme};

    #[test]
    fn normalized_boxes_scale() {
        let (r, w) = parse_normalized_boxes("[[0.1,0.1,0.2,0.3]]", 1000, 500, ChartKind::Bar);
        assert!(w.is_empty());
        assert_eq!(r, vec![Region::boxed(ChartKind::Bar, Rect::new(100, 50, 200, 150))]);
        let (r, w) = parse_normalized_boxes("not json [", 1000, 500, ChartKind::Bar);
        assert!(r.is_empty() && w.len() == 1);
        let (r, w) = parse_normalized_boxes("Here: [[0.5,0.1,0.2,0.3], [0,0,1,1], [0.1, \"x\", 0.2, 0.3]]", 100, 100, ChartKind::Bar);
        assert_eq!(r, vec![Region::boxed(ChartKind::Bar, Rect::new(0, 0, 100, 100))]);
        assert_eq!(w.len(), 2);
    }

    fn three_bars() -> ChartImage {
        let spec = ChartSpec {
            data: ChartData::Bars {
                categories: vec!["A".into(), "B".into(), "C".into()],
                series: vec![Series { name: "S".into(), values: vec![40.0, 70.0, 55.0] }],
                orientation: Orientation::Vertical,
                mode: BarMode::Simple,
            },
            theme: Theme::Light,
            palette: vec![[31, 119, 180]],
            style: Style::default(),
            seed: 1,
            canvas: (640, 480),
            title: "Three".into(),
            start_angle_deg: 0.0,
        };
        generate(&spec, "three").unwrap().image
    }

    #[test]
    fn scripted_reply_selects_b2() {
        let img = three_bars();
        let cfg = SegmentConfig::default();
        let backends = Backends::default();
        let model = ScriptedModel::always("B2 is the tallest.\nVALIDATION: CONSISTENT\nATTRIBUTION: [B2]");
        let fs = FewShot::builtin();
        let a = Attributor { cfg: &cfg, backends: &backends, model: &model, few_shot: &fs };
        let out = a.attribute(&img, "Which is tallest?", "B", ChartKind::Bar, "three").unwrap();
        assert_eq!(out.marks.len(), 3);
        assert_eq!(out.result.validated, Validation::Consistent);
        assert_eq!(out.result.labels, vec![LabelRef::Mark("B2".into())]);
        assert_eq!(out.result.selected, vec![out.marks.get("B2").unwrap().region.clone()]);
    }

    #[test]
    fn blank_chart_has_no_marks() {
        let img = ChartImage::filled("w", 100, 100, [255, 255, 255]).unwrap();
        let cfg = SegmentConfig::default();
        let backends = Backends::default();
        let fs = FewShot::builtin();
        let model = ScriptedModel::always("ATTRIBUTION: []");
        let a = Attributor { cfg: &cfg, backends: &backends, model: &model, few_shot: &fs };
        assert!(matches!(a.attribute(&img, "q", "a", ChartKind::Bar, "w"), Err(Error::NoMarks(ChartKind::Bar))));
    }
}
