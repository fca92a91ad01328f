//! Set-of-marks prompting: render labeled marks, ask a chat model, parse
//! the cited labels back into regions.

pub mod client;
pub mod parse;
pub mod pipeline;
pub mod prompt;
pub mod render;

pub use client::{ChatModel, HttpChatModel, MllmConfig, MllmError, ScriptedModel};
pub use parse::{parse_attribution_response, render_grammar, resolve_label, AttributionResult, LabelRef, Validation, PAIR_PAD};
pub use pipeline::{
    parse_normalized_boxes, segment, zero_shot_bbox_baseline, Attribution, Attributor, Backends, ChartLensSystem, SegmentConfig, ZeroShotSystem,
};
pub use prompt::{build_prompt, build_zero_shot_prompt, FewShot, FewShotExample, PromptBundle};
pub use render::{layout_tags, render_marks, MARK_PALETTE};
