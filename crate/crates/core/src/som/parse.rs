use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::geometry::{ChartKind, MarkSet, Rect, Region};
use crate::lines::parse_line_label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Validation {
    Consistent,
    Inconsistent,
    Unverifiable,
}

impl Validation {
    pub fn as_str(self) -> &'static str {
        match self {
            Validation::Consistent => "CONSISTENT",
            Validation::Inconsistent => "INCONSISTENT",
            Validation::Unverifiable => "UNVERIFIABLE",
        }
    }
}

/// A cited mark, or for line charts the span between two marks of one series.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelRef {
    Mark(String),
    Pair(String, String),
}

impl fmt::Display for LabelRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelRef::Mark(l) => f.write_str(l),
            LabelRef::Pair(a, b) => write!(f, "({a},{b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionResult {
    pub validated: Validation,
    pub labels: Vec<LabelRef>,
    pub selected: Vec<Region>,
    pub raw_response: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// The two sentinel lines for a verdict and label list.
pub fn render_grammar(validation: Validation, labels: &[LabelRef]) -> String {
    let items: Vec<String> = labels.iter().map(ToString::to_string).collect();
    format!("VALIDATION: {}\nATTRIBUTION: [{}]", validation.as_str(), items.join(", "))
}

static VALIDATION_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)validation\W{0,4}:\W{0,4}(consistent|inconsistent|unverifiable)").unwrap());
static ATTRIBUTION_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)attribution\W{0,4}:([^\n]*)").unwrap());
static PAIR_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\(\s*([A-Za-z]+\d+(?:-\d+)?)\s*,\s*([A-Za-z]+\d+(?:-\d+)?)\s*\)").unwrap());
static LABEL_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b[A-Za-z]+\d+(?:-\d+)?\b").unwrap());

fn bracket_body(rest: &str) -> &str {
    match (rest.find('['), rest.rfind(']')) {
        (Some(a), Some(b)) if a < b => &rest[a + 1..b],
        (Some(a), _) => &rest[a + 1..],
        _ => rest,
    }
}

/// Puts a same-series pair in segment order.
fn order_pair(marks: &MarkSet, a: &str, b: &str) -> Result<(String, String), String> {
    let (ma, mb) = match (marks.get(a), marks.get(b)) {
        (Some(x), Some(y)) => (x.label().to_string(), y.label().to_string()),
        _ => return Err(format!("unknown label in pair ({a},{b})")),
    };
    let (Some(pa), Some(pb)) = (parse_line_label(&ma), parse_line_label(&mb)) else {
        return Err(format!("pair ({a},{b}) does not name line marks"));
    };
    if pa.0 != pb.0 {
        return Err(format!("pair ({ma},{mb}) spans two series"));
    }
    Ok(if pa.1 <= pb.1 { (ma, mb) } else { (mb, ma) })
}

/// Reads the last VALIDATION and ATTRIBUTION sentinels. Labels match
/// case-insensitively, duplicates collapse, and unknown labels are dropped
/// with a warning. A missing ATTRIBUTION line yields no labels and
/// `Unverifiable`.
pub fn parse_attribution_response(text: &str, marks: &MarkSet, kind: ChartKind) -> AttributionResult {
    let mut warnings = Vec::new();
    let mut validated = VALIDATION_RE
        .captures_iter(text)
        .last()
        .map(|c| match c[1].to_ascii_lowercase().as_str() {
            "consistent" => Validation::Consistent,
            "inconsistent" => Validation::Inconsistent,
            _ => Validation::Unverifiable,
        })
        .unwrap_or(Validation::Unverifiable);
    let mut labels: Vec<LabelRef> = Vec::new();
    match ATTRIBUTION_RE.captures_iter(text).last() {
        None => {
            validated = Validation::Unverifiable;
            warnings.push("response has no ATTRIBUTION line".to_string());
        }
        Some(c) => {
            let body = bracket_body(&c[1]).to_string();
            let mut rest = body.clone();
            if kind == ChartKind::Line {
                for p in PAIR_RE.captures_iter(&body) {
                    match order_pair(marks, &p[1], &p[2]) {
                        Ok((a, b)) => labels.push(LabelRef::Pair(a, b)),
                        Err(w) => warnings.push(w),
                    }
                }
                rest = PAIR_RE.replace_all(&body, " ").into_owned();
            }
            for m in LABEL_RE.find_iter(&rest) {
                match marks.get(m.as_str()) {
                    Some(mark) if kind == ChartKind::Line => {
                        let l = mark.label().to_string();
                        labels.push(LabelRef::Pair(l.clone(), l));
                    }
                    Some(mark) => labels.push(LabelRef::Mark(mark.label().to_string())),
                    None => warnings.push(format!("unknown label {}", m.as_str())),
                }
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    labels.retain(|l| seen.insert(l.clone()));
    for w in &warnings {
        log::warn!("{}: {w}", marks.chart_id());
    }
    let selected = labels.iter().filter_map(|l| resolve_label(marks, l)).collect();
    AttributionResult { validated, labels, selected, raw_response: text.to_string(), warnings }
}

/// Padding around a line pair's anchor box.
pub const PAIR_PAD: u32 = 3;

/// A single label resolves to its mark's region; a line pair resolves to the
/// box whose corners are the two anchors, padded by [`PAIR_PAD`].
pub fn resolve_label(marks: &MarkSet, l: &LabelRef) -> Option<Region> {
    match l {
        LabelRef::Mark(a) => marks.get(a).map(|m| m.region.clone()),
        LabelRef::Pair(a, b) => {
            let (ma, mb) = (marks.get(a)?, marks.get(b)?);
            let d = marks.dims();
            let (pa, pb) = (ma.anchor, mb.anchor);
            let rect = Rect::new(
                pa.x.min(pb.x).saturating_sub(PAIR_PAD),
                pa.y.min(pb.y).saturating_sub(PAIR_PAD),
                (pa.x.max(pb.x) + 1 + PAIR_PAD).min(d.width),
                (pa.y.max(pb.y) + 1 + PAIR_PAD).min(d.height),
            );
            Some(Region::boxed(ma.region.kind, rect).with_label(format!("{a}..{b}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Dims, Mark, Point};

    fn bars(n: u32) -> MarkSet {
        let marks = (0..n)
            .map(|i| Mark {
                region: Region::boxed(ChartKind::Bar, Rect::new(10 * i, 0, 10 * i + 8, 50)).with_label(format!("B{}", i + 1)),
                anchor: Point::new(10 * i + 4, 25),
                refined: false,
            })
            .collect();
        MarkSet::new("c", Dims::new(200, 100), marks).unwrap()
    }

    fn lines() -> MarkSet {
        let mut marks = Vec::new();
        for s in 1..=2 {
            for k in 1..=5 {
                marks.push(Mark {
                    region: Region::boxed(ChartKind::Line, Rect::new(20 * k, 10 * s, 20 * k + 20, 10 * s + 8)).with_label(format!("L{s}-{k}")),
                    anchor: Point::new(20 * k + 10, 10 * s + 4),
                    refined: false,
                });
            }
        }
        MarkSet::new("l", Dims::new(200, 100), marks).unwrap()
    }

    #[test]
    fn sentinel_lines_parse() {
        let r = parse_attribution_response("Step 1: read.\nVALIDATION: CONSISTENT\nATTRIBUTION: [B2, B5]", &bars(6), ChartKind::Bar);
        assert_eq!(r.validated, Validation::Consistent);
        assert_eq!(r.labels, vec![LabelRef::Mark("B2".into()), LabelRef::Mark("B5".into())]);
        assert_eq!(r.selected.len(), 2);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn unknown_labels_are_dropped() {
        let r = parse_attribution_response("VALIDATION: consistent\nATTRIBUTION: [B2, B9]", &bars(3), ChartKind::Bar);
        assert_eq!(r.labels, vec![LabelRef::Mark("B2".into())]);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn free_text_is_unverifiable() {
        let r = parse_attribution_response("The chart shows that B2 is tallest.", &bars(3), ChartKind::Bar);
        assert_eq!(r.validated, Validation::Unverifiable);
        assert!(r.labels.is_empty() && r.selected.is_empty());
    }

    #[test]
    fn last_occurrence_wins_and_case_folds() {
        let text = "Example: ATTRIBUTION: [B1]\nVALIDATION: INCONSISTENT\n...\n**Validation:** consistent\nattribution: [b3, B3, b1]";
        let r = parse_attribution_response(text, &bars(3), ChartKind::Bar);
        assert_eq!(r.validated, Validation::Consistent);
        assert_eq!(r.labels, vec![LabelRef::Mark("B3".into()), LabelRef::Mark("B1".into())]);
    }

    #[test]
    fn line_pairs_are_ordered_and_checked() {
        let r = parse_attribution_response("VALIDATION: CONSISTENT\nATTRIBUTION: [(L1-4, l1-2), (L1-1,L2-3), (L2-5,L2-5)]", &lines(), ChartKind::Line);
        assert_eq!(r.labels, vec![LabelRef::Pair("L1-2".into(), "L1-4".into()), LabelRef::Pair("L2-5".into(), "L2-5".into())]);
        assert_eq!(r.warnings.len(), 1);
        // anchors (50,14) and (90,14), padded 3
        assert_eq!(r.selected[0].bbox().unwrap(), Rect::new(47, 11, 94, 18));
    }

    #[test]
    fn grammar_round_trip_examples() {
        let m = lines();
        let s = vec![LabelRef::Pair("L1-1".into(), "L1-5".into()), LabelRef::Pair("L2-2".into(), "L2-3".into())];
        let r = parse_attribution_response(&render_grammar(Validation::Inconsistent, &s), &m, ChartKind::Line);
        assert_eq!((r.validated, r.labels), (Validation::Inconsistent, s));
        let r = parse_attribution_response(&render_grammar(Validation::Consistent, &[]), &m, ChartKind::Line);
        assert!(r.labels.is_empty());
        assert_eq!(r.validated, Validation::Consistent);
    }
}
