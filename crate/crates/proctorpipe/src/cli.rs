//! `proctorpipe` command line. Exit codes: 0 success, 1 usage, 2 data,
//! 3 model or runtime.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use proctorpipe_core::bench::{BenchReport, StageTimings};
use proctorpipe_core::dataset::{split, split_by_image, split_sizes};
use proctorpipe_core::metrics::ablation_labels;
use proctorpipe_core::seats::aggregate;
use serde::Serialize;

use crate::config::{AppConfig, ConfigLayer};
use crate::datakit::{harmonize, SourceDescriptor};
use crate::delivery::{emit_reports, prepare_outbox, DEFAULT_SENDER};
use crate::evaluate::{confusion_csv, evaluate};
use crate::formats::{
    read_jsonl, read_manifest, read_seat_map, resolve_inputs, save_png, write_json, write_jsonl, write_manifest,
    VerdictLine,
};
use crate::pipeline::{run_batch, FrameFailure, MonotonicClock};
use crate::runtime::{load_model, ModelSession};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "proctorpipe", version, about = "Two-stage exam proctoring: detect people, classify behavior, report privately")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// JSON config file; flags override its values [env: PROCTORPIPE_CONFIG]
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest annotation sources into one binary-labeled manifest
    Harmonize(HarmonizeArgs),
    /// Shuffle a manifest with a fixed seed and cut it 80/10/10
    Split(SplitArgs),
    /// Run both stages over images and write verdicts, annotations and timings
    Run(RunArgs),
    /// Score predicted verdicts against a ground-truth manifest
    Eval(EvalArgs),
    /// Derive one full-frame label per image from its box labels
    AblateLabel(AblateArgs),
    /// Measure per-frame latency without writing images
    Bench(BenchArgs),
    /// Aggregate verdicts per seat and write one private message per student
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct HarmonizeArgs {
    /// Source root directories, comma separated
    #[arg(long, required = true, value_delimiter = ',')]
    pub sources: Vec<PathBuf>,
    /// Output manifest (JSON lines)
    #[arg(long)]
    pub out: PathBuf,
    /// Ingest report path [default: ingest_report.json next to --out]
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Shuffle seed [default: 2024]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for train.jsonl, val.jsonl and test.jsonl
    #[arg(long)]
    pub out: PathBuf,
    /// Keep all boxes of one image in the same split
    #[arg(long)]
    pub group_by_image: bool,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Detector graph (.onnx)
    #[arg(long)]
    pub detector: Option<PathBuf>,
    /// Classifier graph (.onnx)
    #[arg(long)]
    pub classifier: Option<PathBuf>,
    /// Detection confidence threshold [default: 0.25]
    #[arg(long)]
    pub conf: Option<f32>,
    /// NMS IoU threshold [default: 0.45]
    #[arg(long)]
    pub iou: Option<f32>,
    /// Detector input side in pixels [default: 640]
    #[arg(long)]
    pub det_size: Option<u32>,
    /// Cheating probability needed for a cheating verdict [default: 0.5]
    #[arg(long)]
    pub cls_threshold: Option<f64>,
    /// Per-channel normalization mean, three comma-separated values
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub norm_mean: Option<Vec<f32>>,
    /// Per-channel normalization std, three comma-separated values
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub norm_std: Option<Vec<f32>>,
    /// Fraction of box size added on each side before cropping [default: 0]
    #[arg(long)]
    pub roi_expand: Option<f32>,
    /// Worker threads [default: 1]
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Image, directory of images, or manifest
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Image, directory of images, or manifest
    #[arg(long)]
    pub input: PathBuf,
    /// Process the input list this many times
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    /// Write the report here as well as printing it
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground-truth manifest
    #[arg(long)]
    pub truth: PathBuf,
    /// verdicts.jsonl from `run`
    #[arg(long)]
    pub pred: PathBuf,
    /// Report JSON
    #[arg(long)]
    pub out: PathBuf,
    /// Confusion matrix CSV
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output JSON lines [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// verdicts.jsonl from `run`
    #[arg(long)]
    pub verdicts: PathBuf,
    /// Seat map JSON
    #[arg(long)]
    pub seats: PathBuf,
    /// Directory receiving one .eml file per student
    #[arg(long)]
    pub outbox: PathBuf,
    /// Cheating verdicts needed to flag a student [default: 1]
    #[arg(long)]
    pub flag_count: Option<u64>,
    /// From header
    #[arg(long, default_value = DEFAULT_SENDER)]
    pub sender: String,
}

impl ModelArgs {
    fn layer(&self) -> Result<ConfigLayer> {
        let triple = |v: &Option<Vec<f32>>, flag: &str| -> Result<Option<[f32; 3]>> {
            v.as_ref()
                .map(|v| <[f32; 3]>::try_from(v.as_slice()).map_err(|_| Error::Usage(format!("{flag} takes 3 values"))))
                .transpose()
        };
        Ok(ConfigLayer {
            detector_path: self.detector.clone(),
            classifier_path: self.classifier.clone(),
            conf_threshold: self.conf,
            iou_threshold: self.iou,
            cls_threshold: self.cls_threshold,
            det_size: self.det_size,
            norm_mean: triple(&self.norm_mean, "--norm-mean")?,
            norm_std: triple(&self.norm_std, "--norm-std")?,
            roi_expand: self.roi_expand,
            jobs: self.jobs,
            ..ConfigLayer::default()
        })
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let name = subcommand_name(&cli.command);
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Usage(_)) {
                let mut cmd = Cli::command();
                if let Some(sub) = cmd.find_subcommand_mut(name) {
                    eprintln!("\n{}", sub.render_usage());
                }
            }
            e.exit_code()
        }
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Harmonize(_) => "harmonize",
        Command::Split(_) => "split",
        Command::Run(_) => "run",
        Command::Eval(_) => "eval",
        Command::AblateLabel(_) => "ablate-label",
        Command::Bench(_) => "bench",
        Command::Report(_) => "report",
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let file = cli.config.as_deref();
    match cli.command {
        Command::Harmonize(a) => cmd_harmonize(a),
        Command::Split(a) => {
            let cfg = AppConfig::resolve(file, &ConfigLayer { seed: a.seed, ..Default::default() })?;
            cmd_split(a, cfg.seed)
        }
        Command::Run(a) => {
            let cfg = AppConfig::resolve(file, &a.model.layer()?)?;
            cmd_run(a, &cfg)
        }
        Command::Bench(a) => {
            let cfg = AppConfig::resolve(file, &a.model.layer()?)?;
            cmd_bench(a, &cfg)
        }
        Command::Eval(a) => cmd_eval(a),
        Command::AblateLabel(a) => cmd_ablate(a),
        Command::Report(a) => {
            let cfg = AppConfig::resolve(file, &ConfigLayer { flag_count: a.flag_count, ..Default::default() })?;
            cmd_report(a, cfg.flag_count)
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn parent_dir(path: &Path) -> &Path {
    path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

fn cmd_harmonize(a: HarmonizeArgs) -> Result<()> {
    let sources: Vec<SourceDescriptor> = a.sources.iter().map(SourceDescriptor::from_root).collect();
    let (records, report) = harmonize(&sources);
    create_dir(parent_dir(&a.out))?;
    write_manifest(&a.out, &records)?;
    let report_path = a.report.unwrap_or_else(|| parent_dir(&a.out).join("ingest_report.json"));
    write_json(&report_path, &report)?;
    for u in &report.unreadable {
        eprintln!("warning: unreadable source {}: {}", u.source, u.reason);
    }
    println!(
        "{} records ({} duplicates removed, {} unreadable sources) -> {}",
        records.len(),
        report.duplicates_removed,
        report.unreadable.len(),
        a.out.display()
    );
    if records.is_empty() && !report.unreadable.is_empty() && report.unreadable.len() == sources.len() {
        return Err(Error::UnreadableSource { path: a.sources[0].clone(), reason: "no source could be read".to_string() });
    }
    Ok(())
}

#[derive(Serialize)]
struct SplitSummary {
    seed: u64,
    group_by_image: bool,
    train: usize,
    val: usize,
    test: usize,
}

fn cmd_split(a: SplitArgs, seed: u64) -> Result<()> {
    let records = read_manifest(&a.manifest)?;
    let s = if a.group_by_image { split_by_image(&records, seed)? } else { split(&records, seed)? };
    create_dir(&a.out)?;
    write_manifest(&a.out.join("train.jsonl"), &s.train)?;
    write_manifest(&a.out.join("val.jsonl"), &s.val)?;
    write_manifest(&a.out.join("test.jsonl"), &s.test)?;
    let summary =
        SplitSummary { seed, group_by_image: a.group_by_image, train: s.train.len(), val: s.val.len(), test: s.test.len() };
    write_json(&a.out.join("split.json"), &summary)?;
    if !a.group_by_image {
        debug_assert_eq!(split_sizes(records.len()), (summary.train, summary.val, summary.test));
    }
    println!("train {} / val {} / test {} (seed {seed})", summary.train, summary.val, summary.test);
    Ok(())
}

fn load_sessions(cfg: &AppConfig) -> Result<(ModelSession, ModelSession)> {
    let det = cfg.detector_path.as_ref().ok_or_else(|| Error::Usage("missing required flag --detector".to_string()))?;
    let cls =
        cfg.classifier_path.as_ref().ok_or_else(|| Error::Usage("missing required flag --classifier".to_string()))?;
    Ok((load_model(det)?, load_model(cls)?))
}

/// Bench report plus the frames left out of it.
#[derive(Serialize)]
struct BenchFile<'a> {
    #[serde(flatten)]
    report: &'a Option<BenchReport>,
    failures: &'a [FrameFailure],
}

#[derive(Serialize)]
struct TimingLine<'a> {
    frame_id: &'a str,
    #[serde(flatten)]
    timings: StageTimings,
}

fn report_failures(failures: &[FrameFailure], n_ok: usize) -> Result<()> {
    for f in failures {
        eprintln!("warning: frame {} failed: {}", f.frame_id, f.error);
    }
    match failures.first() {
        Some(first) if n_ok == 0 => {
            let msg = format!("all {} frames failed; first: {}", failures.len(), first.error);
            Err(match first.exit_code {
                3 => Error::RuntimeFailure(msg),
                _ => Error::UnreadableSource { path: PathBuf::from(&first.frame_id), reason: msg },
            })
        }
        _ => Ok(()),
    }
}

fn print_bench(r: &Option<BenchReport>) {
    if let Some(r) = r {
        let per_roi = r.mean_ms_per_roi.map(|v| format!("{v:.2}")).unwrap_or_else(|| "n/a".to_string());
        println!(
            "{} frames: mean {:.2} ms/frame, p50 {:.2}, p95 {:.2}; {} persons, {per_roi} ms/person",
            r.n_samples, r.mean_ms, r.p50_ms, r.p95_ms, r.n_rois
        );
    }
}

fn cmd_run(a: RunArgs, cfg: &AppConfig) -> Result<()> {
    let pipeline = cfg.pipeline()?;
    let (det, cls) = load_sessions(cfg)?;
    let frames = resolve_inputs(&a.input)?;
    let out = run_batch(&frames, &det, &cls, &pipeline, cfg.jobs, &MonotonicClock::new())?;

    let annotated_dir = a.out.join("annotated");
    create_dir(&annotated_dir)?;
    let index_of: std::collections::HashMap<&str, usize> =
        frames.iter().enumerate().map(|(i, f)| (f.frame_id.as_str(), i)).collect();
    let mut lines = Vec::with_capacity(out.results.len());
    for r in &out.results {
        let i = index_of[r.frame_id.as_str()];
        let stem = frames[i].path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let rel = format!("annotated/{i:05}_{stem}.png");
        save_png(&r.annotated, &a.out.join(&rel))?;
        lines.push(VerdictLine::from_result(r, Some(rel)));
    }
    write_jsonl(&a.out.join("verdicts.jsonl"), &lines)?;
    write_jsonl(
        &a.out.join("timings.jsonl"),
        out.results.iter().map(|r| TimingLine { frame_id: &r.frame_id, timings: r.timings }),
    )?;
    write_json(&a.out.join("bench.json"), &BenchFile { report: &out.report, failures: &out.failures })?;
    let n_persons: usize = out.results.iter().map(|r| r.verdicts.len()).sum();
    println!("{} frames, {n_persons} persons -> {}", out.results.len(), a.out.display());
    print_bench(&out.report);
    report_failures(&out.failures, out.results.len())
}

fn cmd_bench(a: BenchArgs, cfg: &AppConfig) -> Result<()> {
    if a.repeat == 0 {
        return Err(Error::Usage("--repeat must be at least 1".to_string()));
    }
    let pipeline = cfg.pipeline()?;
    let (det, cls) = load_sessions(cfg)?;
    let once = resolve_inputs(&a.input)?;
    let frames: Vec<_> = (0..a.repeat).flat_map(|_| once.iter().cloned()).collect();
    let out = run_batch(&frames, &det, &cls, &pipeline, cfg.jobs, &MonotonicClock::new())?;
    if let Some(path) = &a.out {
        create_dir(parent_dir(path))?;
        write_json(path, &BenchFile { report: &out.report, failures: &out.failures })?;
    }
    print_bench(&out.report);
    report_failures(&out.failures, out.results.len())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let truth = read_manifest(&a.truth)?;
    let preds: Vec<VerdictLine> = read_jsonl(&a.pred)?;
    let result = evaluate(&truth, &preds)?;
    create_dir(parent_dir(&a.out))?;
    write_json(&a.out, &result)?;
    if let Some(csv) = &a.out_csv {
        create_dir(parent_dir(csv))?;
        std::fs::write(csv, confusion_csv(&result.report.confusion)).map_err(|e| Error::io(csv, e))?;
    }
    for w in &result.report.warnings {
        eprintln!("warning: {w}");
    }
    let m = &result.matching;
    println!("{}", result.report.render());
    println!(
        "matched {} boxes; {} truth boxes without a prediction, {} extra predictions, {} frames missing",
        m.matched, m.unmatched_truth, m.unmatched_pred, m.missing_frames
    );
    Ok(())
}

#[derive(Serialize)]
struct AblationLine<'a> {
    image_path: &'a str,
    label_id: u8,
    label_name: &'static str,
}

fn cmd_ablate(a: AblateArgs) -> Result<()> {
    let records = read_manifest(&a.manifest)?;
    let labels = ablation_labels(&records);
    let lines: Vec<_> = labels
        .iter()
        .map(|(img, l)| AblationLine { image_path: img, label_id: l.id(), label_name: l.name() })
        .collect();
    match &a.out {
        Some(path) => {
            create_dir(parent_dir(path))?;
            write_jsonl(path, &lines)
        }
        None => {
            for l in &lines {
                println!("{}", serde_json::to_string(l).expect("plain struct serializes"));
            }
            Ok(())
        }
    }
}

fn cmd_report(a: ReportArgs, flag_count: u64) -> Result<()> {
    let map = read_seat_map(&a.seats)?;
    let lines: Vec<VerdictLine> = read_jsonl(&a.verdicts)?;
    let agg = aggregate(lines.iter().map(|l| l.verdicts.as_slice()), &map, flag_count);
    let sink = prepare_outbox(&a.outbox)?;
    let now = chrono::Local::now().fixed_offset();
    let contacts = map.entries().iter().map(|e| e.contact.as_str());
    let summary = emit_reports(agg.outcomes.iter().zip(contacts), &sink, &a.sender, now);
    let flagged = agg.outcomes.iter().filter(|o| o.decision == proctorpipe_core::seats::Decision::Flagged).count();
    println!(
        "{} messages written to {} ({flagged} flagged); {} verdicts unassigned ({} cheating)",
        summary.written,
        a.outbox.display(),
        agg.unassigned,
        agg.unassigned_cheating
    );
    for f in &summary.failures {
        eprintln!("error: message for seat {} not written: {}", f.student_id, f.error);
    }
    match summary.failures.into_iter().next() {
        Some(f) => Err(f.error),
        None => Ok(()),
    }
}
