//! Per-frame orchestration of both stages, plus the batch runner that
//! produces the latency report.

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use proctorpipe_core::bench::{BenchReport, StageTimings};
use proctorpipe_core::detection::{self, DetectorConfig};
use proctorpipe_core::draw::annotate;
use proctorpipe_core::roi::{self, BehaviorVerdict, NormalizationSpec, RoiTensor};
use proctorpipe_core::{BBox, ImageBuffer};
use serde::{Deserialize, Serialize};

use crate::runtime::ModelSession;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub threshold: f64,
    pub norm: NormalizationSpec,
    /// Fraction of the box size added on every side before cropping.
    pub roi_expand: f32,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig { threshold: 0.5, norm: NormalizationSpec::default(), roi_expand: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub detector: DetectorConfig,
    pub classify: ClassifyConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        let t = self.classify.threshold;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Usage(format!("classification threshold {t} not in [0, 1]")));
        }
        if self.classify.roi_expand.is_nan() || self.classify.roi_expand < 0.0 {
            return Err(Error::Usage("roi expansion must be non-negative".to_string()));
        }
        NormalizationSpec::new(self.classify.norm.mean, self.classify.norm.std)?;
        Ok(())
    }
}

/// Millisecond time source, injectable for tests.
pub trait Clock: Sync {
    fn now_ms(&self) -> f64;
}

pub struct MonotonicClock(Instant);

impl MonotonicClock {
    pub fn new() -> Self {
        MonotonicClock(Instant::now())
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

/// Advances by a fixed step on every reading.
pub struct StepClock {
    ticks: AtomicU64,
    step_ms: f64,
}

impl StepClock {
    pub fn new(step_ms: f64) -> Self {
        StepClock { ticks: AtomicU64::new(0), step_ms }
    }
}

impl Clock for StepClock {
    fn now_ms(&self) -> f64 {
        self.ticks.fetch_add(1, Ordering::SeqCst) as f64 * self.step_ms
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame_id: String,
    /// One per surviving person box, in detection order.
    pub verdicts: Vec<BehaviorVerdict>,
    pub annotated: ImageBuffer,
    pub timings: StageTimings,
}

/// Stage 1 on one frame: letterbox, detect, decode, NMS, keep persons.
pub fn detect_persons(img: &ImageBuffer, detector: &ModelSession, cfg: &DetectorConfig) -> Result<Vec<BBox>> {
    let (canvas, params) = detection::letterbox(img, cfg.input_size)?;
    let raw = detector.run_single(detection::to_input_tensor(&canvas))?;
    let dets = detection::decode_detector_output(&raw, &params, cfg, img.width(), img.height())?;
    let kept = detection::nms(&dets, cfg.iou_threshold);
    Ok(detection::filter_person(&kept, cfg))
}

/// Stage 2 on one prepared crop.
pub fn classify(roi: &RoiTensor, classifier: &ModelSession, threshold: f64, bbox: BBox) -> Result<BehaviorVerdict> {
    let out = classifier.run_single(roi.tensor().clone())?;
    if out.data().len() != 2 {
        return Err(Error::ShapeMismatch {
            name: classifier.output_spec()[0].name.clone(),
            expected: "2 logits".to_string(),
            actual: out.shape().to_vec(),
        });
    }
    Ok(BehaviorVerdict::from_logits(out.data(), bbox, threshold)?)
}

/// Runs both stages on one frame and draws the verdicts.
///
/// The clock brackets model work only; annotation happens after the last
/// reading.
pub fn process_frame(
    img: &ImageBuffer,
    frame_id: &str,
    detector: &ModelSession,
    classifier: &ModelSession,
    cfg: &PipelineConfig,
    clock: &dyn Clock,
) -> Result<FrameResult> {
    let start = clock.now_ms();
    let boxes = detect_persons(img, detector, &cfg.detector)?;
    let detected = clock.now_ms();

    let (mut preprocess_ms, mut classify_ms) = (0.0, 0.0);
    let mut verdicts = Vec::with_capacity(boxes.len());
    for (index, bbox) in boxes.iter().enumerate() {
        let roi_failure = |e: Error| Error::RoiFailure { frame_id: frame_id.to_string(), index, source: Box::new(e) };
        let t0 = clock.now_ms();
        let crop = roi::crop(img, bbox, cfg.classify.roi_expand).map_err(|e| roi_failure(e.into()))?;
        let tensor = roi::preprocess_roi(&crop, &cfg.classify.norm);
        let t1 = clock.now_ms();
        let verdict = classify(&tensor, classifier, cfg.classify.threshold, *bbox).map_err(roi_failure)?;
        let t2 = clock.now_ms();
        preprocess_ms += t1 - t0;
        classify_ms += t2 - t1;
        verdicts.push(verdict);
    }
    let end = clock.now_ms();

    let timings = StageTimings { detect_ms: detected - start, preprocess_ms, classify_ms, total_ms: end - start };
    let annotated = annotate(img, &verdicts);
    Ok(FrameResult { frame_id: frame_id.to_string(), verdicts, annotated, timings })
}

/// One frame to process: an id (as written to outputs) and where to read it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSource {
    pub frame_id: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrameFailure {
    pub frame_id: String,
    pub error: String,
    pub exit_code: i32,
}

#[derive(Debug)]
pub struct BatchOutput {
    /// Successful frames, in input order.
    pub results: Vec<FrameResult>,
    pub failures: Vec<FrameFailure>,
    /// `None` only when every frame failed.
    pub report: Option<BenchReport>,
}

/// Processes every frame with `jobs` workers, each owning forked sessions.
/// Results come back in input order. Failed frames are listed and left out
/// of the statistics.
pub fn run_batch(
    frames: &[FrameSource],
    detector: &ModelSession,
    classifier: &ModelSession,
    cfg: &PipelineConfig,
    jobs: usize,
    clock: &dyn Clock,
) -> Result<BatchOutput> {
    if frames.is_empty() {
        return Err(Error::EmptyManifest);
    }
    let jobs = jobs.clamp(1, frames.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<FrameResult>>>> = Mutex::new((0..frames.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            let (det, cls) = (detector.fork(), classifier.fork());
            let (next, slots) = (&next, &slots);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(frame) = frames.get(i) else { break };
                let outcome = crate::formats::load_image(&frame.path)
                    .and_then(|img| process_frame(&img, &frame.frame_id, &det, &cls, cfg, clock));
                slots.lock().expect("slot lock")[i] = Some(outcome);
            });
        }
    });

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (frame, slot) in frames.iter().zip(slots.into_inner().expect("slot lock")) {
        match slot.expect("every frame visited") {
            Ok(r) => results.push(r),
            Err(e) => failures.push(FrameFailure { frame_id: frame.frame_id.clone(), error: e.to_string(), exit_code: e.exit_code() }),
        }
    }
    let timings: Vec<StageTimings> = results.iter().map(|r| r.timings).collect();
    let n_rois = results.iter().map(|r| r.verdicts.len()).sum();
    let report = BenchReport::from_timings(&timings, n_rois).ok();
    Ok(BatchOutput { results, failures, report })
}
