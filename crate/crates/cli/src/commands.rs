use std::io::Write as _;
use std::path::{Path, PathBuf};

use chartlens::eval::{evaluate_dataset, load_dataset, AttributionSystem, EvalConfig, OracleSystem};
use chartlens::io::write_atomic;
use chartlens::raster::Canvas;
use chartlens::som::{Attributor, ChartLensSystem, LabelRef, Validation, ZeroShotSystem, MARK_PALETTE};
use chartlens::synth::{generate_dataset, write_dataset, GenerateOptions};
use chartlens::{ChartImage, ChartKind, Region};
use serde::Serialize;

use crate::args::{Cli, Command, ReportFormat, SystemArg};
use crate::config::Effective;
use crate::CliError;

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = Effective::resolve(&cli.global)?;
    if cli.global.print_config {
        let text = serde_json::to_string_pretty(&cfg).map_err(CliError::input)?;
        emit(&format!("{text}\n"));
        return Ok(());
    }
    match cli.command {
        Command::Segment { chart, kind, out } => segment(&cfg, &chart, kind.into(), &out),
        Command::Attribute { chart, kind, question, answer, out, id } => attribute(&cfg, &chart, kind.into(), &question, &answer, &out, id),
        Command::Evaluate { dataset, out, system, report_format, jobs, iou_threshold } => {
            evaluate(&cfg, &dataset, &out, system, report_format, jobs, iou_threshold)
        }
        Command::Generate { out, kind, count, seed, theme, sectors } => {
            let opts = GenerateOptions { kind: kind.map(Into::into), count, seed, theme: theme.map(Into::into), sectors };
            generate(&opts, &out)
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn load_chart(path: &Path, id: Option<String>) -> Result<ChartImage, CliError> {
    let img = ChartImage::load(path).map_err(|e| CliError::input(format!("cannot read chart {}: {e}", path.display())))?;
    Ok(match id {
        Some(id) => img.with_id(id),
        None => img,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(CliError::input)?;
    bytes.push(b'\n');
    write(path, &bytes)
}

fn write_png(path: &Path, img: &ChartImage) -> Result<(), CliError> {
    let bytes = img.encode_png().map_err(CliError::input)?;
    write(path, &bytes)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn prepare_out(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::input(format!("cannot create output directory {}: {e}", out.display())))
}

fn segment(cfg: &Effective, chart: &Path, kind: ChartKind, out: &Path) -> Result<(), CliError> {
    let img = load_chart(chart, None)?;
    prepare_out(out)?;
    let backends = cfg.backends()?;
    let marks = chartlens::som::segment(&img, kind, &cfg.segment, &backends)?;
    for w in marks.warnings() {
        log::warn!("{w}");
    }
    if marks.is_empty() {
        return Err(chartlens::Error::NoMarks(kind).into());
    }
    let marked = chartlens::som::render_marks(&img, &marks).map_err(CliError::input)?;
    write_json(&out.join("marks.json"), &marks)?;
    write_png(&out.join("marked.png"), &marked)?;
    emit(&format!("{} {} marks written to {}\n", marks.len(), kind, out.display()));
    Ok(())
}

#[derive(Serialize)]
struct AttributionFile<'a> {
    chart_id: &'a str,
    kind: ChartKind,
    question: &'a str,
    answer: &'a str,
    validated: Validation,
    labels: &'a [LabelRef],
    selected: &'a [Region],
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
    raw_response: &'a str,
}

/// Fills each selected region at 40% opacity.
fn highlight(img: &ChartImage, selected: &[Region]) -> Result<ChartImage, CliError> {
    let mut canvas = Canvas::from_image(img);
    for (i, r) in selected.iter().enumerate() {
        let spans = r.spans(img.dims()).map_err(CliError::input)?;
        canvas.blend_spans(&spans, MARK_PALETTE[i % MARK_PALETTE.len()], 0.4);
    }
    canvas.into_image(img.id()).map_err(CliError::input)
}

fn attribute(cfg: &Effective, chart: &Path, kind: ChartKind, question: &str, answer: &str, out: &Path, id: Option<String>) -> Result<(), CliError> {
    let img = load_chart(chart, id)?;
    prepare_out(out)?;
    let backends = cfg.backends()?;
    let few_shot = cfg.few_shot()?;
    let model = cfg.chat_model()?;
    let a = Attributor { cfg: &cfg.segment, backends: &backends, model: model.as_ref(), few_shot: &few_shot };
    let res = a.attribute(&img, question, answer, kind, img.id())?;
    let mut warnings: Vec<String> = res.marks.warnings().to_vec();
    warnings.extend(res.result.warnings.iter().cloned());
    let file = AttributionFile {
        chart_id: img.id(),
        kind,
        question,
        answer,
        validated: res.result.validated,
        labels: &res.result.labels,
        selected: &res.result.selected,
        warnings,
        raw_response: &res.result.raw_response,
    };
    write_json(&out.join("attribution.json"), &file)?;
    write_png(&out.join("marked.png"), &res.marked_image)?;
    write_png(&out.join("highlight.png"), &highlight(&img, &res.result.selected)?)?;
    let labels: Vec<String> = res.result.labels.iter().map(ToString::to_string).collect();
    emit(&format!("{} [{}]\n", res.result.validated.as_str(), labels.join(", ")));
    Ok(())
}

fn evaluate(
    cfg: &Effective,
    dataset: &Path,
    out: &Path,
    system: SystemArg,
    format: ReportFormat,
    jobs: Option<usize>,
    iou_threshold: f64,
) -> Result<(), CliError> {
    let eval_cfg = EvalConfig { iou_threshold };
    eval_cfg.validate().map_err(CliError::input)?;
    let loaded = load_dataset(dataset).map_err(CliError::input)?;
    for w in &loaded.warnings {
        log::warn!("{w}");
    }
    if loaded.records.is_empty() {
        log::warn!("dataset {} has no records", dataset.display());
    }
    prepare_out(out)?;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let sys: Box<dyn AttributionSystem> = match system {
        SystemArg::Oracle => Box::new(OracleSystem),
        SystemArg::Chartlens => Box::new(ChartLensSystem { cfg: cfg.segment, backends: cfg.backends()?, model: cfg.chat_model()?, few_shot: cfg.few_shot()? }),
        SystemArg::Zeroshot => Box::new(ZeroShotSystem { model: cfg.chat_model()? }),
    };
    let jobs = match (jobs, system) {
        (Some(0), _) => return Err(CliError::input("--jobs must be positive")),
        (Some(j), _) => j,
        (None, SystemArg::Oracle) => cores,
        (None, _) => cores.min(cfg.max_in_flight),
    };
    let report = evaluate_dataset(&loaded.records, &loaded.base_dir, sys.as_ref(), &eval_cfg, jobs);
    for r in report.records.iter().filter(|r| r.error.is_some()) {
        log::warn!("{}: {}", r.id, r.error.as_deref().unwrap_or_default());
    }
    let table = report.to_table();
    write_json(&out.join("report.json"), &report)?;
    write(&out.join("report.txt"), table.as_bytes())?;
    match format {
        ReportFormat::Table => emit(&table),
        ReportFormat::Json => emit(&format!("{}\n", serde_json::to_string_pretty(&report).map_err(CliError::input)?)),
    }
    Ok(())
}

fn generate(opts: &GenerateOptions, out: &Path) -> Result<(), CliError> {
    let items = generate_dataset(opts).map_err(CliError::input)?;
    prepare_out(out)?;
    let path: PathBuf = write_dataset(out, &items).map_err(CliError::input)?;
    emit(&format!("{} charts written to {}\n", items.len(), path.display()));
    Ok(())
}
