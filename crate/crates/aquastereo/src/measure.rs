//! Refraction-aware triangulation, fish length, and evaluation statistics.
//!
//! Matched keypoints are triangulated as the midpoint of the shortest
//! segment between the two refracted water rays; the segment length is kept
//! as a per-keypoint residual (`ray_gap_mm`). Fish length is the distance
//! from the mouth to the caudal fin. Evaluation associates predictions to
//! ground truth by bounding-box center distance and reports length RMSE and
//! the percentage of bad matches.

use crate::camera::{FlatPortCamera, Pixel, Vec3};
use crate::detection::KeypointName;
use crate::error::{Error, Result};
use crate::matching::MatchedPair;

/// Ground-truth association gate, px.
pub const DEFAULT_MAX_CENTER_DIST_PX: f64 = 30.0;
/// Triangulations with a larger ray gap are excluded from statistics.
pub const DEFAULT_MAX_RAY_GAP_MM: f64 = 5.0;

/// Triangulated keypoints and derived length of one matched fish.
#[derive(Debug, Clone)]
pub struct FishMeasurement {
    pub pair_id: String,
    /// Rig-frame keypoints, indexed by [`KeypointName::index`].
    pub keypoints_3d: [Vec3; 5],
    /// Mouth-to-caudal distance, mm.
    pub length_mm: f64,
    /// Triangulation residual per keypoint, mm.
    pub ray_gap_mm: [f64; 5],
    /// Angle between the body axis and the left optical axis, degrees.
    pub axis_angle_deg: f64,
}

impl FishMeasurement {
    /// Mouth → caudal-fin vector.
    pub fn body_axis(&self) -> Vec3 {
        self.keypoints_3d[KeypointName::CaudalFin.index()]
            - self.keypoints_3d[KeypointName::Mouth.index()]
    }

    pub fn max_ray_gap(&self) -> f64 {
        self.ray_gap_mm.iter().cloned().fold(0.0, f64::max)
    }
}

/// |cos| of the angle between the body axis and the camera's optical axis.
pub(crate) fn body_axis_cosine(
    measurement: &FishMeasurement,
    camera: &FlatPortCamera,
) -> Result<f64> {
    let v = measurement.body_axis();
    let norm = v.norm();
    if norm < 1e-6 {
        return Err(Error::DegenerateBody { separation_mm: norm });
    }
    Ok((v.dot(&camera.optical_axis()).abs() / norm).clamp(0.0, 1.0))
}

/// Angle between the body axis and the optical axis, folded to [0°, 90°].
pub fn axis_angle_deg(measurement: &FishMeasurement, camera: &FlatPortCamera) -> Result<f64> {
    Ok(body_axis_cosine(measurement, camera)?.acos().to_degrees())
}

/// Triangulate a pixel correspondence: trace both water rays and return the
/// midpoint of their shortest connecting segment plus its length (the gap).
pub fn triangulate(
    left_cam: &FlatPortCamera,
    right_cam: &FlatPortCamera,
    left_px: Pixel,
    right_px: Pixel,
) -> Result<(Vec3, f64)> {
    let left = left_cam.trace_pixel_ray(left_px)?;
    let right = right_cam.trace_pixel_ray(right_px)?;
    midpoint_of_rays(left.origin, left.direction, right.origin, right.direction)
}

/// Midpoint between two skew rays given by origin and unit direction.
pub(crate) fn midpoint_of_rays(
    o1: Vec3,
    d1: Vec3,
    o2: Vec3,
    d2: Vec3,
) -> Result<(Vec3, f64)> {
    let cross_norm = d1.cross(&d2).norm();
    if cross_norm < 1e-12 {
        return Err(Error::NearParallelRays { cross_norm });
    }
    let w = o1 - o2;
    let b = d1.dot(&d2);
    let d = d1.dot(&w);
    let e = d2.dot(&w);
    let denom = 1.0 - b * b;
    let s = (b * e - d) / denom;
    let t = (e - b * d) / denom;
    let p1 = o1 + d1 * s;
    let p2 = o2 + d2 * t;
    Ok(((p1 + p2) * 0.5, (p1 - p2).norm()))
}

/// Triangulate all five keypoints of a matched pair and derive length and
/// body-axis angle (against the left camera).
pub fn measure_pair(
    pair: &MatchedPair,
    left_cam: &FlatPortCamera,
    right_cam: &FlatPortCamera,
) -> Result<FishMeasurement> {
    let mut keypoints_3d = [Vec3::zeros(); 5];
    let mut ray_gap_mm = [0.0; 5];
    for name in KeypointName::ALL {
        let (point, gap) = triangulate(
            left_cam,
            right_cam,
            pair.left.keypoint(name).position,
            pair.right.keypoint(name).position,
        )?;
        keypoints_3d[name.index()] = point;
        ray_gap_mm[name.index()] = gap;
    }

    let mut measurement = FishMeasurement {
        pair_id: format!("{}:{}", pair.left.id, pair.right.id),
        keypoints_3d,
        length_mm: 0.0,
        ray_gap_mm,
        axis_angle_deg: 0.0,
    };
    let length = measurement.body_axis().norm();
    if length < 1e-6 {
        return Err(Error::DegenerateBody { separation_mm: length });
    }
    measurement.length_mm = length;
    measurement.axis_angle_deg = axis_angle_deg(&measurement, left_cam)?;
    Ok(measurement)
}

/// Greedy association of predicted to ground-truth items by center distance.
#[derive(Debug, Clone, Default)]
pub struct Association {
    /// `(predicted index, ground-truth index)` pairs in selection order.
    pub pairs: Vec<(usize, usize)>,
    /// Predicted indices that could not be associated within the gate.
    pub unassociated_predictions: Vec<usize>,
}

impl Association {
    pub fn ground_truth_of(&self, predicted: usize) -> Option<usize> {
        self.pairs.iter().find(|&&(p, _)| p == predicted).map(|&(_, g)| g)
    }
}

/// Greedy nearest-center pairing under `max_center_dist_px` (inclusive).
pub fn associate_to_ground_truth(
    predicted: &[Pixel],
    ground_truth: &[Pixel],
    max_center_dist_px: f64,
) -> Association {
    let mut entries = Vec::new();
    for (i, p) in predicted.iter().enumerate() {
        for (j, g) in ground_truth.iter().enumerate() {
            let dist = p.distance(g);
            if dist <= max_center_dist_px {
                entries.push((dist, i, j));
            }
        }
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut used_pred = vec![false; predicted.len()];
    let mut used_gt = vec![false; ground_truth.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in entries {
        if used_pred[i] || used_gt[j] {
            continue;
        }
        used_pred[i] = true;
        used_gt[j] = true;
        pairs.push((i, j));
    }
    let unassociated_predictions = (0..predicted.len()).filter(|&i| !used_pred[i]).collect();
    Association {
        pairs,
        unassociated_predictions,
    }
}

/// One retained measurement prepared for evaluation.
#[derive(Debug, Clone)]
pub struct EvalSample {
    pub frame_id: u64,
    pub left_center: Pixel,
    pub right_center: Pixel,
    pub length_mm: f64,
}

/// Ground truth for one fish in one frame: the noiseless bbox centers in
/// both images and the true length.
#[derive(Debug, Clone)]
pub struct GroundTruthFish {
    pub left_center: Pixel,
    pub right_center: Pixel,
    pub length_mm: f64,
}

/// Ground truth for one stereo frame.
#[derive(Debug, Clone)]
pub struct GroundTruthFrame {
    pub frame_id: u64,
    pub fish: Vec<GroundTruthFish>,
}

/// Evaluation metrics over a run.
#[derive(Debug, Clone)]
pub struct EvaluationReport {
    /// RMSE of the length over correctly associated pairs, mm.
    pub rmse_mm: f64,
    pub n_measured: usize,
    pub n_ground_truth: usize,
    /// Detections of retained pairs that found no ground-truth partner.
    pub n_unmatched_predictions: usize,
    /// Share of retained pairs that do not map to a single ground-truth
    /// fish, percent.
    pub bad_match_pct: f64,
    /// Signed length residuals (measured − truth) of good pairs, mm.
    pub residuals_mm: Vec<f64>,
    /// Measurements excluded from statistics by the ray-gap cap.
    pub n_gap_dropped: usize,
}

/// Evaluate retained measurements against ground truth. Association uses
/// the bbox centers of each side independently; a pair counts as *bad* when
/// its two detections do not land on one and the same ground-truth fish.
pub fn evaluate(
    samples: &[EvalSample],
    ground_truth: &[GroundTruthFrame],
    max_center_dist_px: f64,
) -> Result<EvaluationReport> {
    let n_ground_truth: usize = ground_truth.iter().map(|f| f.fish.len()).sum();
    if samples.is_empty() {
        return Err(Error::EmptyEvaluation);
    }

    let mut residuals = Vec::new();
    let mut bad = 0usize;
    let mut unmatched = 0usize;

    let mut frame_ids: Vec<u64> = samples.iter().map(|s| s.frame_id).collect();
    frame_ids.sort_unstable();
    frame_ids.dedup();

    for frame_id in frame_ids {
        let frame_samples: Vec<&EvalSample> =
            samples.iter().filter(|s| s.frame_id == frame_id).collect();
        let empty = Vec::new();
        let gt_fish = ground_truth
            .iter()
            .find(|f| f.frame_id == frame_id)
            .map(|f| &f.fish)
            .unwrap_or(&empty);

        let left_pred: Vec<Pixel> = frame_samples.iter().map(|s| s.left_center).collect();
        let right_pred: Vec<Pixel> = frame_samples.iter().map(|s| s.right_center).collect();
        let left_gt: Vec<Pixel> = gt_fish.iter().map(|f| f.left_center).collect();
        let right_gt: Vec<Pixel> = gt_fish.iter().map(|f| f.right_center).collect();

        let left_assoc = associate_to_ground_truth(&left_pred, &left_gt, max_center_dist_px);
        let right_assoc = associate_to_ground_truth(&right_pred, &right_gt, max_center_dist_px);
        unmatched += left_assoc.unassociated_predictions.len()
            + right_assoc.unassociated_predictions.len();

        for (k, sample) in frame_samples.iter().enumerate() {
            match (left_assoc.ground_truth_of(k), right_assoc.ground_truth_of(k)) {
                (Some(a), Some(b)) if a == b => {
                    residuals.push(sample.length_mm - gt_fish[a].length_mm);
                }
                _ => bad += 1,
            }
        }
    }

    if residuals.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let rmse_mm =
        (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(EvaluationReport {
        rmse_mm,
        n_measured: samples.len(),
        n_ground_truth,
        n_unmatched_predictions: unmatched,
        bad_match_pct: 100.0 * bad as f64 / samples.len() as f64,
        residuals_mm: residuals,
        n_gap_dropped: 0,
    })
}
