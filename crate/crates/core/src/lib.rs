//! Post-hoc visual attribution for charts.

pub mod bars;
pub mod eval;
pub mod font;
pub mod geometry;
pub mod http;
pub mod io;
pub mod limit;
pub mod lines;
pub mod pie;
pub mod raster;
pub mod refine;
pub mod rle;
pub mod sidecar;
pub mod som;
pub mod synth;
pub mod vision;

pub use geometry::{AttributionSet, ChartImage, ChartKind, Dims, Geometry, GeometryError, Mark, MarkSet, Point, Rect, Region, SpanSet};
pub use rle::RleMask;

/// Pipeline error tagged with the stage that failed.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("chart: {0}")]
    Geometry(#[from] GeometryError),
    #[error("segment: {0}")]
    Pie(#[from] pie::PieError),
    #[error("segment: {0}")]
    Lines(#[from] lines::LineError),
    #[error("segment: no {0} elements found")]
    NoMarks(ChartKind),
    #[error("query: {0}")]
    Mllm(#[from] som::MllmError),
}
