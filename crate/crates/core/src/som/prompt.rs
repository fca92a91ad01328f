use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::parse::{render_grammar, LabelRef, Validation};
use crate::geometry::{ChartImage, ChartKind, MarkSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub question: String,
    pub response: String,
    pub reasoning: String,
    pub validation: Validation,
    pub attribution: Vec<LabelRef>,
}

/// Textual worked examples per chart kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShot {
    pub bar: Vec<FewShotExample>,
    pub pie: Vec<FewShotExample>,
    pub line: Vec<FewShotExample>,
}

const BUILTIN_FEW_SHOT: &str = include_str!("../../fixtures/few_shot.json");

impl FewShot {
    pub fn builtin() -> FewShot {
        FewShot::from_json(BUILTIN_FEW_SHOT).expect("bundled few-shot fixture is valid")
    }

    /// Parses a few-shot file; every kind needs at least two examples.
    pub fn from_json(text: &str) -> Result<FewShot, String> {
        let fs: FewShot = serde_json::from_str(text).map_err(|e| e.to_string())?;
        for kind in ChartKind::ALL {
            if fs.examples(kind).len() < 2 {
                return Err(format!("few-shot set needs at least 2 {kind} examples"));
            }
        }
        Ok(fs)
    }

    pub fn examples(&self, kind: ChartKind) -> &[FewShotExample] {
        match kind {
            ChartKind::Bar => &self.bar,
            ChartKind::Pie => &self.pie,
            ChartKind::Line => &self.line,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
    pub marked_image: ChartImage,
    pub question: String,
    pub answer: String,
}

pub const SYSTEM_TEXT: &str = "You are a careful chart analyst. You verify statements about charts and cite the chart elements that support them.";

fn element_noun(kind: ChartKind) -> &'static str {
    match kind {
        ChartKind::Bar => "bar",
        ChartKind::Pie => "pie sector",
        ChartKind::Line => "line segment",
    }
}

/// Deterministic prompt: task explanation, label grammar, worked examples,
/// the QA pair and step-by-step instructions ending in two sentinel lines.
pub fn build_prompt(marked: ChartImage, marks: &MarkSet, question: &str, answer: &str, kind: ChartKind, few_shot: &FewShot) -> PromptBundle {
    let mut u = String::new();
    let noun = element_noun(kind);
    writeln!(u, "Task: chart attribution.").unwrap();
    writeln!(
        u,
        "The image is a {kind} chart. Every {noun} has been outlined and tagged with a label. \
         You are given a question about the chart and a response to it. Attribution means finding \
         the labeled chart elements that the response relies on, so a reader can check it."
    )
    .unwrap();
    writeln!(u).unwrap();
    let labels: Vec<&str> = marks.labels().collect();
    writeln!(u, "Labels in this chart: {}", labels.join(", ")).unwrap();
    match kind {
        ChartKind::Line => {
            writeln!(
                u,
                "Each line is split into equal segments along the x axis. Label Ls-k marks segment k of line s, \
                 drawn as a dot on the line. Cite evidence as pairs of marks on the same line: (L1-2,L1-5) means \
                 the part of line 1 between marks L1-2 and L1-5. Use (L1-3,L1-3) for a single point."
            )
            .unwrap();
        }
        _ => {
            writeln!(u, "Cite evidence as a list of labels, for example [{}].", labels.iter().take(2).copied().collect::<Vec<_>>().join(", ")).unwrap();
        }
    }
    writeln!(u).unwrap();
    writeln!(u, "Examples:").unwrap();
    for ex in few_shot.examples(kind) {
        writeln!(u).unwrap();
        writeln!(u, "Question: {}", ex.question).unwrap();
        writeln!(u, "Response: {}", ex.response).unwrap();
        writeln!(u, "Reasoning: {}", ex.reasoning).unwrap();
        writeln!(u, "{}", render_grammar(ex.validation, &ex.attribution)).unwrap();
    }
    writeln!(u).unwrap();
    writeln!(u, "Now the chart in the image.").unwrap();
    writeln!(u, "Question: {question}").unwrap();
    writeln!(u, "Response: {answer}").unwrap();
    writeln!(u).unwrap();
    writeln!(u, "Think step by step. First read the values of the relevant elements from the chart.").unwrap();
    writeln!(u, "Then decide whether the response is consistent with the chart.").unwrap();
    writeln!(u, "Finally name the labeled elements that support or refute the response.").unwrap();
    writeln!(u, "End with exactly these two lines:").unwrap();
    writeln!(u, "VALIDATION: CONSISTENT or INCONSISTENT or UNVERIFIABLE").unwrap();
    match kind {
        ChartKind::Line => writeln!(u, "ATTRIBUTION: [(Ls-a,Ls-b), ...]").unwrap(),
        _ => writeln!(u, "ATTRIBUTION: [label, ...]").unwrap(),
    }
    PromptBundle { system_text: SYSTEM_TEXT.to_string(), user_text: u, marked_image: marked, question: question.to_string(), answer: answer.to_string() }
}

/// Prompt for the zero-shot baseline: the raw chart, asked for normalized
/// boxes.
pub fn build_zero_shot_prompt(chart: ChartImage, question: &str, answer: &str, kind: ChartKind) -> PromptBundle {
    let mut u = String::new();
    writeln!(u, "The image is a {kind} chart. Below are a question about it and a response.").unwrap();
    writeln!(u, "Question: {question}").unwrap();
    writeln!(u, "Response: {answer}").unwrap();
    writeln!(u).unwrap();
    writeln!(u, "Identify the chart regions that support the response.").unwrap();
    writeln!(
        u,
        "Answer with only a JSON list of bounding boxes [[x0, y0, x1, y1], ...] in coordinates normalized \
         to [0, 1], where (0, 0) is the top-left corner and (1, 1) the bottom-right corner of the image."
    )
    .unwrap();
    PromptBundle { system_text: SYSTEM_TEXT.to_string(), user_text: u, marked_image: chart, question: question.to_string(), answer: answer.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Dims, Mark, Point, Rect, Region};

    fn marks(kind: ChartKind, labels: &[&str]) -> MarkSet {
        let marks = labels
            .iter()
            .enumerate()
            .map(|(i, l)| Mark {
                region: Region::boxed(kind, Rect::new(10 * i as u32, 0, 10 * i as u32 + 5, 5)).with_label(*l),
                anchor: Point::new(10 * i as u32, 0),
                refined: false,
            })
            .collect();
        MarkSet::new("c", Dims::new(100, 100), marks).unwrap()
    }

    fn img() -> ChartImage {
        ChartImage::filled("c", 100, 100, [255, 255, 255]).unwrap()
    }

    #[test]
    fn builtin_few_shot_loads() {
        let fs = FewShot::builtin();
        for k in ChartKind::ALL {
            assert!(fs.examples(k).len() >= 2);
        }
        assert!(matches!(fs.line[0].attribution[0], LabelRef::Pair(_, _)));
    }

    #[test]
    fn bar_prompt_lists_labels_and_sentinels() {
        let m = marks(ChartKind::Bar, &["B1", "B2", "B3", "B4"]);
        let p = build_prompt(img(), &m, "q?", "a.", ChartKind::Bar, &FewShot::builtin());
        assert!(p.user_text.contains("B1, B2, B3, B4"));
        assert!(p.user_text.contains("VALIDATION: CONSISTENT or INCONSISTENT or UNVERIFIABLE"));
        assert!(p.user_text.contains("ATTRIBUTION: [label, ...]"));
        let again = build_prompt(img(), &m, "q?", "a.", ChartKind::Bar, &FewShot::builtin());
        assert_eq!(p.user_text, again.user_text);
    }

    #[test]
    fn line_prompt_describes_pairs() {
        let m = marks(ChartKind::Line, &["L1-1", "L1-2"]);
        let p = build_prompt(img(), &m, "q?", "a.", ChartKind::Line, &FewShot::builtin());
        assert!(p.user_text.contains("(L1-2,L1-5)"));
        assert!(p.user_text.contains("ATTRIBUTION: [(L1-3,L1-6)]"));
    }
}
