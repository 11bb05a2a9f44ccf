//! Batch pipeline: ingest detections → match → refine → filter →
//! triangulate → measure → evaluate, with deterministic text outputs.
//!
//! Frame pairs are processed in parallel and merged in frame order, so the
//! results CSV, evaluation JSON, and ablation table are byte-identical
//! across runs and worker counts.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::camera::{FlatPortCamera, Pixel};
use crate::detection::{
    fmt_f64, CameraSide, DetectionFrame, KeypointName, QualityClass,
};
use crate::epipolar::EpipolarCurve;
use crate::error::{Error, Result};
use crate::filter::{filter_aspect, filter_quality, FilterConfig, RejectedBy};
use crate::gray::GrayImage;
use crate::matching::{greedy_assign, CurveProvider, MatchConfig, MatchCost};
use crate::measure::{
    evaluate, measure_pair, EvalSample, EvaluationReport, FishMeasurement, GroundTruthFrame,
    DEFAULT_MAX_CENTER_DIST_PX, DEFAULT_MAX_RAY_GAP_MM,
};
use crate::refine::{refine_keypoint, RefinementConfig};
use crate::synth::Benchmark;

/// The three ablation toggles: quality filter, template refinement, and the
/// direction stage (bbox aspect + swimming direction).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineToggles {
    pub quality: bool,
    pub template: bool,
    pub direction: bool,
}

impl PipelineToggles {
    pub fn all_on() -> Self {
        PipelineToggles {
            quality: true,
            template: true,
            direction: true,
        }
    }

    pub fn all_off() -> Self {
        PipelineToggles {
            quality: false,
            template: false,
            direction: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub gate_px: f64,
    pub segments: usize,
    pub depth_range: (f64, f64),
    pub max_total_cost: f64,
    pub refinement: RefinementConfig,
    pub require_quality: QualityClass,
    pub min_aspect: f64,
    pub min_axis_angle_deg: f64,
    pub max_ray_gap_mm: f64,
    pub max_center_dist_px: f64,
    pub toggles: PipelineToggles,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            gate_px: crate::matching::DEFAULT_GATE_PX,
            segments: crate::epipolar::DEFAULT_SEGMENTS,
            depth_range: (
                crate::epipolar::DEFAULT_MIN_DEPTH_MM,
                crate::epipolar::DEFAULT_MAX_DEPTH_MM,
            ),
            max_total_cost: f64::INFINITY,
            refinement: RefinementConfig::default(),
            require_quality: QualityClass::High,
            min_aspect: 1.5,
            min_axis_angle_deg: 45.0,
            max_ray_gap_mm: DEFAULT_MAX_RAY_GAP_MM,
            max_center_dist_px: DEFAULT_MAX_CENTER_DIST_PX,
            toggles: PipelineToggles::all_on(),
        }
    }
}

impl PipelineOptions {
    fn filter_config(&self) -> FilterConfig {
        FilterConfig {
            require_quality: self.require_quality,
            min_aspect: self.min_aspect,
            min_axis_angle_deg: self.min_axis_angle_deg,
            quality_enabled: self.toggles.quality,
            aspect_enabled: self.toggles.direction,
            direction_enabled: self.toggles.direction,
        }
    }
}

/// One stereo frame ready for processing.
#[derive(Debug, Clone)]
pub struct FramePairInput {
    pub left: DetectionFrame,
    pub right: DetectionFrame,
    pub left_image: Option<GrayImage>,
    pub right_image: Option<GrayImage>,
}

impl FramePairInput {
    pub fn frame_id(&self) -> u64 {
        self.left.frame_id
    }
}

/// Why a matched pair was removed before statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    Filter(RejectedBy),
    /// Triangulation residual exceeded the configured cap.
    RayGap,
    /// Mouth/caudal coincide or rays were unusable.
    Degenerate,
}

impl DropReason {
    pub fn key(self) -> &'static str {
        match self {
            DropReason::Filter(RejectedBy::Quality) => "quality",
            DropReason::Filter(RejectedBy::Aspect) => "aspect",
            DropReason::Filter(RejectedBy::Direction) => "direction",
            DropReason::RayGap => "ray_gap",
            DropReason::Degenerate => "degenerate",
        }
    }
}

/// Outcome for one matched pair, kept or not. Quality and aspect of both
/// detections ride along as an audit trail.
#[derive(Debug, Clone)]
pub struct PairRecord {
    pub frame_id: u64,
    pub pair_id: String,
    pub cost: MatchCost,
    pub left_center: Pixel,
    pub right_center: Pixel,
    pub left_quality: QualityClass,
    pub right_quality: QualityClass,
    pub left_aspect: f64,
    pub right_aspect: f64,
    pub measurement: Option<FishMeasurement>,
    pub dropped: Option<DropReason>,
}

impl PairRecord {
    pub fn kept(&self) -> bool {
        self.dropped.is_none()
    }
}

/// Full pipeline output over all frames, in frame order.
#[derive(Debug, Clone, Default)]
pub struct PipelineOutput {
    pub records: Vec<PairRecord>,
    /// One JSON object per dropped pair, for `--trace`.
    pub trace: Vec<String>,
}

impl PipelineOutput {
    pub fn retained(&self) -> impl Iterator<Item = &PairRecord> {
        self.records.iter().filter(|r| r.kept())
    }

    pub fn n_gap_dropped(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.dropped == Some(DropReason::RayGap))
            .count()
    }

    fn eval_samples(&self) -> Vec<EvalSample> {
        self.retained()
            .map(|r| EvalSample {
                frame_id: r.frame_id,
                left_center: r.left_center,
                right_center: r.right_center,
                length_mm: r.measurement.as_ref().expect("retained pairs are measured").length_mm,
            })
            .collect()
    }
}

/// Group a flat frame list into left/right pairs by `frame_id`.
pub fn pair_frames(frames: Vec<DetectionFrame>) -> Result<Vec<FramePairInput>> {
    let mut by_id: std::collections::BTreeMap<u64, (Option<DetectionFrame>, Option<DetectionFrame>)> =
        std::collections::BTreeMap::new();
    for frame in frames {
        let slot = by_id.entry(frame.frame_id).or_default();
        let side = match frame.camera {
            CameraSide::Left => &mut slot.0,
            CameraSide::Right => &mut slot.1,
        };
        if side.is_some() {
            return Err(Error::validation(
                format!("frame {}", frame.frame_id),
                format!("duplicate {} view", frame.camera.key()),
            ));
        }
        *side = Some(frame);
    }
    by_id
        .into_iter()
        .map(|(id, (left, right))| match (left, right) {
            (Some(left), Some(right)) => Ok(FramePairInput {
                left,
                right,
                left_image: None,
                right_image: None,
            }),
            (l, _) => Err(Error::validation(
                format!("frame {id}"),
                format!("missing {} view", if l.is_none() { "left" } else { "right" }),
            )),
        })
        .collect()
}

/// Load the images referenced by each frame's `image_path`, relative to
/// `base_dir`. Frames without a path keep `None` (refinement then skips).
pub fn load_frame_images(inputs: &mut [FramePairInput], base_dir: &Path) -> Result<()> {
    for input in inputs.iter_mut() {
        if let Some(path) = &input.left.image_path {
            input.left_image = Some(GrayImage::load(base_dir.join(path))?);
        }
        if let Some(path) = &input.right.image_path {
            input.right_image = Some(GrayImage::load(base_dir.join(path))?);
        }
    }
    Ok(())
}

fn refine_pair_keypoints(
    pair: &mut crate::matching::MatchedPair,
    input: &FramePairInput,
    provider: &CurveProvider<'_>,
    cfg: &RefinementConfig,
) -> Result<()> {
    let (Some(left_img), Some(right_img)) = (&input.left_image, &input.right_image) else {
        return Ok(());
    };
    for name in KeypointName::ALL {
        if !cfg.applies_to(name) {
            continue;
        }
        let left_kp = pair.left.keypoint(name).position;
        let right_kp = pair.right.keypoint(name).position;
        let curve: EpipolarCurve = provider.curve_for(left_kp)?;
        match refine_keypoint(left_img, right_img, left_kp, right_kp, &curve, cfg) {
            Ok(refined) => {
                if refined.refined {
                    pair.right.keypoints[name.index()].position = refined.position;
                }
            }
            // A template clipped by the image border just stays unrefined.
            Err(Error::TemplateOutOfBounds { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

fn process_frame(
    left_cam: &FlatPortCamera,
    right_cam: &FlatPortCamera,
    input: &FramePairInput,
    opts: &PipelineOptions,
) -> Result<Vec<PairRecord>> {
    let provider = CurveProvider {
        source: left_cam,
        target: right_cam,
        depth_range: opts.depth_range,
        segments: opts.segments,
    };
    let match_cfg = MatchConfig {
        gate_px: opts.gate_px,
        max_total_cost: opts.max_total_cost,
    };
    let filter_cfg = opts.filter_config();
    let frame_id = input.frame_id();

    let mut records = Vec::new();
    for mut pair in greedy_assign(&input.left, &input.right, &provider, &match_cfg)? {
        if opts.toggles.template {
            refine_pair_keypoints(&mut pair, input, &provider, &opts.refinement)?;
        }

        let mut record = PairRecord {
            frame_id,
            pair_id: format!("{}:{}", pair.left.id, pair.right.id),
            cost: pair.cost,
            left_center: pair.left.bbox.center,
            right_center: pair.right.bbox.center,
            left_quality: pair.left.quality,
            right_quality: pair.right.quality,
            left_aspect: pair.left.bbox.aspect_ratio(),
            right_aspect: pair.right.bbox.aspect_ratio(),
            measurement: None,
            dropped: None,
        };

        let quality = filter_quality(&pair, &filter_cfg);
        if !quality.kept {
            record.dropped = Some(DropReason::Filter(RejectedBy::Quality));
            records.push(record);
            continue;
        }
        let aspect = filter_aspect(&pair, &filter_cfg);
        if !aspect.kept {
            record.dropped = Some(DropReason::Filter(RejectedBy::Aspect));
            records.push(record);
            continue;
        }

        let measurement = match measure_pair(&pair, left_cam, right_cam) {
            Ok(m) => m,
            Err(Error::DegenerateBody { .. }) | Err(Error::NearParallelRays { .. }) => {
                record.dropped = Some(DropReason::Degenerate);
                records.push(record);
                continue;
            }
            Err(e) => return Err(e),
        };

        let direction_verdict =
            crate::filter::filter_direction(&measurement, left_cam, &filter_cfg)?;
        if !direction_verdict.kept {
            record.measurement = Some(measurement);
            record.dropped = Some(DropReason::Filter(RejectedBy::Direction));
            records.push(record);
            continue;
        }

        if measurement.max_ray_gap() > opts.max_ray_gap_mm {
            record.measurement = Some(measurement);
            record.dropped = Some(DropReason::RayGap);
            records.push(record);
            continue;
        }

        record.measurement = Some(measurement);
        records.push(record);
    }
    Ok(records)
}

/// Run the measurement pipeline over all frame pairs.
pub fn run_measure(
    left_cam: &FlatPortCamera,
    right_cam: &FlatPortCamera,
    inputs: &[FramePairInput],
    opts: &PipelineOptions,
) -> Result<PipelineOutput> {
    let per_frame: Vec<Vec<PairRecord>> = inputs
        .par_iter()
        .map(|input| process_frame(left_cam, right_cam, input, opts))
        .collect::<Result<Vec<_>>>()?;

    let mut output = PipelineOutput::default();
    for records in per_frame {
        for record in records {
            if let Some(reason) = record.dropped {
                output.trace.push(format!(
                    "{{\"frame_id\":{},\"pair_id\":{},\"rejected_by\":\"{}\"}}",
                    record.frame_id,
                    serde_json::to_string(&record.pair_id).unwrap(),
                    reason.key(),
                ));
            }
            output.records.push(record);
        }
    }
    Ok(output)
}

/// Run the pipeline and evaluate retained measurements against ground truth.
pub fn run_and_evaluate(
    left_cam: &FlatPortCamera,
    right_cam: &FlatPortCamera,
    inputs: &[FramePairInput],
    ground_truth: &[GroundTruthFrame],
    opts: &PipelineOptions,
) -> Result<(PipelineOutput, EvaluationReport)> {
    let output = run_measure(left_cam, right_cam, inputs, opts)?;
    let mut report = evaluate(&output.eval_samples(), ground_truth, opts.max_center_dist_px)?;
    report.n_gap_dropped = output.n_gap_dropped();
    Ok((output, report))
}

// ---------------------------------------------------------------------------
// Deterministic text outputs
// ---------------------------------------------------------------------------

/// Results CSV: one row per matched pair, measurement fields empty when the
/// pair was dropped before triangulation.
pub fn results_csv(output: &PipelineOutput) -> String {
    let mut out = String::from(
        "frame_id,pair_id,length_mm,axis_angle_deg,gap_mouth_mm,gap_eye_mm,gap_dorsal_fin_mm,gap_ventral_fin_mm,gap_caudal_fin_mm,kept,rejected_by\n",
    );
    for r in &output.records {
        let (length, angle, gaps) = match &r.measurement {
            Some(m) => (
                fmt_f64(m.length_mm),
                fmt_f64(m.axis_angle_deg),
                m.ray_gap_mm.map(fmt_f64).join(","),
            ),
            None => (String::new(), String::new(), ",,,,".to_string()),
        };
        let rejected = r.dropped.map(|d| d.key()).unwrap_or("");
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.frame_id,
            r.pair_id,
            length,
            angle,
            gaps,
            r.kept(),
            rejected,
        ));
    }
    out
}

/// Evaluation JSON mirroring [`EvaluationReport`], canonical key order.
pub fn evaluation_json(report: &EvaluationReport) -> String {
    let residuals: Vec<String> = report.residuals_mm.iter().map(|&r| fmt_f64(r)).collect();
    format!(
        "{{\"bad_match_pct\":{},\"n_gap_dropped\":{},\"n_ground_truth\":{},\"n_measured\":{},\"n_unmatched_predictions\":{},\"residuals_mm\":[{}],\"rmse_mm\":{}}}\n",
        fmt_f64(report.bad_match_pct),
        report.n_gap_dropped,
        report.n_ground_truth,
        report.n_measured,
        report.n_unmatched_predictions,
        residuals.join(","),
        fmt_f64(report.rmse_mm),
    )
}

/// CSV export of an epipolar curve: one vertex per row with its depth.
pub fn epipolar_csv(curve: &EpipolarCurve) -> String {
    let mut out = String::from("u,v,depth_mm\n");
    for (vertex, depth) in curve.vertices.iter().zip(&curve.depths) {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(vertex.u),
            fmt_f64(vertex.v),
            fmt_f64(*depth)
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

/// Toggle combinations in the order the result tables use.
pub const ABLATION_ROWS: [PipelineToggles; 8] = [
    PipelineToggles { quality: false, template: false, direction: false },
    PipelineToggles { quality: true, template: false, direction: false },
    PipelineToggles { quality: false, template: true, direction: false },
    PipelineToggles { quality: true, template: true, direction: false },
    PipelineToggles { quality: false, template: false, direction: true },
    PipelineToggles { quality: true, template: false, direction: true },
    PipelineToggles { quality: false, template: true, direction: true },
    PipelineToggles { quality: true, template: true, direction: true },
];

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub toggles: PipelineToggles,
    /// `None` when every pair was filtered away (empty evaluation).
    pub rmse_mm: Option<f64>,
    pub bad_match_pct: Option<f64>,
    pub n_measured: usize,
    pub n_gap_dropped: usize,
}

/// Run the pipeline once per toggle combination.
pub fn run_ablation(
    left_cam: &FlatPortCamera,
    right_cam: &FlatPortCamera,
    inputs: &[FramePairInput],
    ground_truth: &[GroundTruthFrame],
    base: &PipelineOptions,
) -> Result<Vec<AblationRow>> {
    if inputs.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let mut rows = Vec::with_capacity(ABLATION_ROWS.len());
    for toggles in ABLATION_ROWS {
        let mut opts = base.clone();
        opts.toggles = toggles;
        match run_and_evaluate(left_cam, right_cam, inputs, ground_truth, &opts) {
            Ok((output, report)) => rows.push(AblationRow {
                toggles,
                rmse_mm: Some(report.rmse_mm),
                bad_match_pct: Some(report.bad_match_pct),
                n_measured: report.n_measured,
                n_gap_dropped: output.n_gap_dropped(),
            }),
            Err(Error::EmptyEvaluation) => rows.push(AblationRow {
                toggles,
                rmse_mm: None,
                bad_match_pct: None,
                n_measured: 0,
                n_gap_dropped: 0,
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("qu,te,di,rmse_mm,bad_match_pct,n_measured,n_gap_dropped\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.toggles.quality as u8,
            row.toggles.template as u8,
            row.toggles.direction as u8,
            row.rmse_mm.map(fmt_f64).unwrap_or_default(),
            row.bad_match_pct.map(fmt_f64).unwrap_or_default(),
            row.n_measured,
            row.n_gap_dropped,
        ));
    }
    out
}

/// Human-readable ablation table for stdout.
pub fn ablation_table_text(rows: &[AblationRow]) -> String {
    let mut out = String::from("Qu Te Di     RMSE [mm]   bad [%]   measured   gap-dropped\n");
    for row in rows {
        let mark = |on: bool| if on { "X" } else { " " };
        let rmse = row
            .rmse_mm
            .map(|v| format!("{v:>12.6}"))
            .unwrap_or_else(|| format!("{:>12}", "-"));
        let bad = row
            .bad_match_pct
            .map(|v| format!("{v:>8.3}"))
            .unwrap_or_else(|| format!("{:>8}", "-"));
        out.push_str(&format!(
            "{}  {}  {}  {} {}   {:>8}   {:>11}\n",
            mark(row.toggles.quality),
            mark(row.toggles.template),
            mark(row.toggles.direction),
            rmse,
            bad,
            row.n_measured,
            row.n_gap_dropped,
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Scene export for `simulate`
// ---------------------------------------------------------------------------

/// Write a generated benchmark to disk: `detections.jsonl`,
/// `ground_truth.json`, `rig.json`, and optionally rendered PGM images.
pub fn write_benchmark(benchmark: &Benchmark, out_dir: &Path, images: bool) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;

    let mut frames = Vec::with_capacity(benchmark.frames.len() * 2);
    for scene in &benchmark.frames {
        let mut left = scene.left.clone();
        let mut right = scene.right.clone();
        if images {
            left.image_path = Some(format!("images/{:04}_left.pgm", scene.frame_id()));
            right.image_path = Some(format!("images/{:04}_right.pgm", scene.frame_id()));
        }
        frames.push(left);
        frames.push(right);
    }
    let detections_path = out_dir.join("detections.jsonl");
    crate::detection::write_detection_file(&frames, &detections_path)?;
    crate::synth::write_ground_truth(&benchmark.frames, out_dir.join("ground_truth.json"))?;

    let rig = crate::calib::RigCalibration {
        left: benchmark.left_cam.clone(),
        right: benchmark.right_cam.clone(),
        tank_depth_mm: Some(crate::synth::STANDARD_TANK_DEPTH_MM),
    };
    rig.save(out_dir.join("rig.json"))?;

    if images {
        let image_dir = out_dir.join("images");
        std::fs::create_dir_all(&image_dir)?;
        for scene in &benchmark.frames {
            let seed = benchmark.profile.seed() ^ scene.frame_id();
            let left = crate::synth::rasterize_view(&benchmark.left_cam, &scene.truth, seed)?;
            let right = crate::synth::rasterize_view(&benchmark.right_cam, &scene.truth, seed)?;
            left.save_pgm(image_dir.join(format!("{:04}_left.pgm", scene.frame_id())))?;
            right.save_pgm(image_dir.join(format!("{:04}_right.pgm", scene.frame_id())))?;
        }
    }
    Ok(detections_path)
}

/// Turn generated scenes into pipeline inputs without touching disk.
pub fn benchmark_inputs(benchmark: &Benchmark) -> Vec<FramePairInput> {
    benchmark
        .frames
        .iter()
        .map(|scene| FramePairInput {
            left: scene.left.clone(),
            right: scene.right.clone(),
            left_image: None,
            right_image: None,
        })
        .collect()
}

/// Ground-truth frames of a generated benchmark.
pub fn benchmark_ground_truth(benchmark: &Benchmark) -> Vec<GroundTruthFrame> {
    benchmark.frames.iter().map(|scene| scene.truth_frame()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{standard_benchmark_with_seed, BenchmarkProfile, STANDARD_TANK_DEPTH_MM};

    fn small_benchmark(profile: BenchmarkProfile, seed: u64) -> crate::synth::Benchmark {
        let mut bench = standard_benchmark_with_seed(profile, seed).unwrap();
        bench.frames.truncate(3);
        bench
    }

    fn options() -> PipelineOptions {
        PipelineOptions {
            depth_range: (5.0, STANDARD_TANK_DEPTH_MM),
            ..PipelineOptions::default()
        }
    }

    #[test]
    fn clean_frames_measure_to_ground_truth() {
        let bench = small_benchmark(BenchmarkProfile::Clean, 11);
        let inputs = benchmark_inputs(&bench);
        let gt = benchmark_ground_truth(&bench);
        let (output, report) =
            run_and_evaluate(&bench.left_cam, &bench.right_cam, &inputs, &gt, &options()).unwrap();

        assert_eq!(report.bad_match_pct, 0.0);
        assert!(report.rmse_mm < 1e-6, "rmse {}", report.rmse_mm);
        assert!(output.records.iter().all(|r| r.kept() || r.dropped.is_some()));
    }

    #[test]
    fn pair_frames_groups_by_id() {
        let bench = small_benchmark(BenchmarkProfile::Clean, 12);
        let mut flat = Vec::new();
        for scene in &bench.frames {
            flat.push(scene.right.clone());
            flat.push(scene.left.clone());
        }
        let paired = pair_frames(flat).unwrap();
        assert_eq!(paired.len(), bench.frames.len());
        for (i, pair) in paired.iter().enumerate() {
            assert_eq!(pair.frame_id(), i as u64);
            assert_eq!(pair.left.camera, CameraSide::Left);
            assert_eq!(pair.right.camera, CameraSide::Right);
        }
    }

    #[test]
    fn pair_frames_rejects_missing_view() {
        let bench = small_benchmark(BenchmarkProfile::Clean, 13);
        let flat = vec![bench.frames[0].left.clone()];
        assert!(pair_frames(flat).is_err());
    }

    #[test]
    fn outputs_are_deterministic() {
        let bench = small_benchmark(BenchmarkProfile::Noisy, 14);
        let inputs = benchmark_inputs(&bench);
        let gt = benchmark_ground_truth(&bench);
        let opts = options();

        let run = || {
            let (output, report) =
                run_and_evaluate(&bench.left_cam, &bench.right_cam, &inputs, &gt, &opts).unwrap();
            (results_csv(&output), evaluation_json(&report))
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn disabling_all_filters_keeps_every_measurable_pair() {
        let bench = small_benchmark(BenchmarkProfile::Noisy, 15);
        let inputs = benchmark_inputs(&bench);
        let mut opts = options();
        opts.toggles = PipelineToggles::all_off();
        opts.max_ray_gap_mm = f64::INFINITY;
        let output = run_measure(&bench.left_cam, &bench.right_cam, &inputs, &opts).unwrap();
        assert!(output.records.iter().all(|r| r.kept()));
    }

    #[test]
    fn ablation_rows_cover_all_toggles() {
        let bench = small_benchmark(BenchmarkProfile::Noisy, 16);
        let inputs = benchmark_inputs(&bench);
        let gt = benchmark_ground_truth(&bench);
        let rows = run_ablation(&bench.left_cam, &bench.right_cam, &inputs, &gt, &options()).unwrap();
        assert_eq!(rows.len(), 8);
        let csv = ablation_csv(&rows);
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.starts_with("qu,te,di,"));
    }

    #[test]
    fn empty_input_is_empty_evaluation() {
        let bench = small_benchmark(BenchmarkProfile::Clean, 17);
        let err = run_ablation(&bench.left_cam, &bench.right_cam, &[], &[], &options()).unwrap_err();
        assert!(matches!(err, Error::EmptyEvaluation));
    }
}
