use std::path::PathBuf;

use chartlens::lines::ExtractorKind;
use chartlens::synth::Theme;
use chartlens::ChartKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "chartlens", version, about = "Post-hoc visual attribution for chart question answering")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by all subcommands. Flags override environment
/// variables, which override defaults. The API key is read from
/// CHARTLENS_API_KEY only.
#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// OpenAI-compatible chat-completions base URL
    #[arg(long, global = true, env = "CHARTLENS_MLLM_URL")]
    pub mllm_url: Option<String>,
    /// Model name sent with each request
    #[arg(long, global = true, env = "CHARTLENS_MODEL", default_value = "gpt-4o")]
    pub model: String,
    /// Replay replies from a JSON object mapping record or chart ids to reply text ("*" matches any)
    #[arg(long, global = true, value_name = "FIXTURE")]
    pub mock_mllm: Option<PathBuf>,
    /// Sidecar base URL for mask refinement; identity refinement when unset
    #[arg(long, global = true, env = "CHARTLENS_REFINER_URL")]
    pub refiner_url: Option<String>,
    /// Sidecar base URL for neural line extraction
    #[arg(long, global = true, env = "CHARTLENS_LINE_EXTRACTOR_URL")]
    pub line_extractor_url: Option<String>,
    /// JSON file with segmentation settings; missing fields take defaults
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Line extractor, overriding the config file
    #[arg(long, global = true, value_enum)]
    pub extractor: Option<ExtractorArg>,
    /// Marks per line series, overriding the config file
    #[arg(long, global = true)]
    pub segments_per_line: Option<usize>,
    /// Few-shot examples JSON replacing the built-in set
    #[arg(long, global = true, value_name = "FILE")]
    pub few_shot: Option<PathBuf>,
    /// Per-request timeout for external services, in seconds
    #[arg(long, global = true, default_value_t = 120)]
    pub timeout_secs: u64,
    /// Maximum concurrent requests per external service
    #[arg(long, global = true, default_value_t = 4)]
    pub max_in_flight: usize,
    /// MLLM requests per second
    #[arg(long, global = true)]
    pub rate_limit: Option<f64>,
    /// Print the effective configuration as JSON and exit
    #[arg(long, global = true)]
    pub print_config: bool,
    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Detect chart elements and write labeled marks
    Segment {
        /// Chart image (PNG)
        #[arg(long)]
        chart: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Output directory for marks.json and marked.png
        #[arg(long)]
        out: PathBuf,
    },
    /// Attribute a response to chart elements through the chat model
    Attribute {
        /// Chart image (PNG)
        #[arg(long)]
        chart: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        question: String,
        /// Response to attribute
        #[arg(long)]
        answer: String,
        /// Output directory for attribution.json, marked.png and highlight.png
        #[arg(long)]
        out: PathBuf,
        /// Chart id used in outputs and for mock replies; defaults to the file stem
        #[arg(long)]
        id: Option<String>,
    },
    /// Score an attribution system on a JSONL dataset
    Evaluate {
        /// JSONL file, one record per line
        #[arg(long)]
        dataset: PathBuf,
        /// Output directory for report.json and report.txt
        #[arg(long)]
        out: PathBuf,
        /// System under test; oracle returns the ground truth
        #[arg(long, value_enum, default_value_t = SystemArg::Chartlens)]
        system: SystemArg,
        /// Format printed to stdout
        #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
        report_format: ReportFormat,
        /// Parallel records; defaults to logical cores, capped by --max-in-flight for model-backed systems
        #[arg(long)]
        jobs: Option<usize>,
        /// Minimum IoU for a detected region to match a ground-truth region
        #[arg(long, default_value_t = 0.9)]
        iou_threshold: f64,
    },
    /// Render synthetic charts with ground truth and template QA
    Generate {
        /// Output directory for charts/ and dataset.jsonl
        #[arg(long)]
        out: PathBuf,
        /// One kind only; cycles bar, pie, line when omitted
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Base seed; output is byte-identical for equal seeds
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fixed theme; sampled per chart when omitted
        #[arg(long, value_enum)]
        theme: Option<ThemeArg>,
        /// Exact pie sector count
        #[arg(long)]
        sectors: Option<usize>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindArg {
    Bar,
    Pie,
    Line,
}

impl From<KindArg> for ChartKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Bar => ChartKind::Bar,
            KindArg::Pie => ChartKind::Pie,
            KindArg::Line => ChartKind::Line,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThemeArg {
    Light,
    Dark,
}

impl From<ThemeArg> for Theme {
    fn from(t: ThemeArg) -> Self {
        match t {
            ThemeArg::Light => Theme::Light,
            ThemeArg::Dark => Theme::Dark,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractorArg {
    ColorTrace,
    RemoteNeural,
}

impl From<ExtractorArg> for ExtractorKind {
    fn from(e: ExtractorArg) -> Self {
        match e {
            ExtractorArg::ColorTrace => ExtractorKind::ColorTrace,
            ExtractorArg::RemoteNeural => ExtractorKind::RemoteNeural,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemArg {
    Oracle,
    Chartlens,
    Zeroshot,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Table,
}
