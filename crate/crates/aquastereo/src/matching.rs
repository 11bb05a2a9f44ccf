//! Stereo matching of fish detections across an image pair.
//!
//! A three-term cost compares each left/right detection pair: distance of
//! the right bbox center to the epipolar curve of the left center (gated),
//! relative bounding-box size difference, and the distance between centered
//! keypoint patterns. Pairs are assigned greedily by ascending total cost.

use crate::camera::{FlatPortCamera, Pixel};
use crate::detection::{DetectionFrame, FishDetection};
use crate::epipolar::{closest_point_on_curve, compute_epipolar_curve, EpipolarCurve};
use crate::error::Result;

/// Pixel gate (and normalizer) of the epipolar cost term.
pub const DEFAULT_GATE_PX: f64 = 150.0;

/// Builds epipolar curves of left-image pixels in the right image.
#[derive(Debug, Clone, Copy)]
pub struct CurveProvider<'a> {
    pub source: &'a FlatPortCamera,
    pub target: &'a FlatPortCamera,
    pub depth_range: (f64, f64),
    pub segments: usize,
}

impl<'a> CurveProvider<'a> {
    pub fn curve_for(&self, pixel: Pixel) -> Result<EpipolarCurve> {
        compute_epipolar_curve(self.source, self.target, pixel, self.depth_range, self.segments)
    }
}

/// Matching parameters. `max_total_cost` is an optional cutoff for noisy
/// detectors; the default keeps every finite-cost pair.
#[derive(Debug, Clone, Copy)]
pub struct MatchConfig {
    pub gate_px: f64,
    pub max_total_cost: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            gate_px: DEFAULT_GATE_PX,
            max_total_cost: f64::INFINITY,
        }
    }
}

/// Cost breakdown for one candidate pair. `total` is the mean of the three
/// terms and is infinite exactly when the epipolar term is infinite.
#[derive(Debug, Clone, Copy)]
pub struct MatchCost {
    pub epipolar: f64,
    pub size: f64,
    pub keypoint: f64,
    pub total: f64,
}

/// A matched left/right detection pair with finite total cost.
#[derive(Debug, Clone)]
pub struct MatchedPair {
    pub left: FishDetection,
    pub right: FishDetection,
    pub cost: MatchCost,
}

/// Epipolar cost term given a prebuilt curve of the left bbox center.
pub fn cost_epipolar_with_curve(
    curve: &EpipolarCurve,
    right: &FishDetection,
    gate_px: f64,
) -> f64 {
    let distance = closest_point_on_curve(curve, right.bbox.center).distance;
    if distance < gate_px {
        distance / gate_px
    } else {
        f64::INFINITY
    }
}

/// Epipolar cost term: distance of the right bbox center to the epipolar
/// curve of the left bbox center, normalized by the gate; infinite at or
/// beyond the gate.
pub fn cost_epipolar(
    left: &FishDetection,
    right: &FishDetection,
    provider: &CurveProvider<'_>,
    gate_px: f64,
) -> Result<f64> {
    let curve = provider.curve_for(left.bbox.center)?;
    Ok(cost_epipolar_with_curve(&curve, right, gate_px))
}

/// Size cost term: mean relative width and height difference.
pub fn cost_size(left: &FishDetection, right: &FishDetection) -> f64 {
    let (wi, hi) = (left.bbox.width, left.bbox.height);
    let (wj, hj) = (right.bbox.width, right.bbox.height);
    0.5 * ((wi - wj).abs() / (0.5 * (wi + wj)) + (hi - hj).abs() / (0.5 * (hi + hj)))
}

/// Keypoint-pattern cost term: sum of distances between centroid-centered
/// keypoints, normalized by the mean box semi-perimeter sum.
pub fn cost_keypoints(left: &FishDetection, right: &FishDetection) -> f64 {
    let ci = left.keypoint_centroid();
    let cj = right.keypoint_centroid();
    let mut sum = 0.0;
    for k in 0..5 {
        let pi = left.keypoints[k].position;
        let pj = right.keypoints[k].position;
        let du = (pi.u - ci.u) - (pj.u - cj.u);
        let dv = (pi.v - ci.v) - (pj.v - cj.v);
        sum += du.hypot(dv);
    }
    // Parenthesized so the sum is bitwise symmetric in (left, right).
    sum / (0.5 * ((left.bbox.width + right.bbox.width) + (left.bbox.height + right.bbox.height)))
}

fn combine(epipolar: f64, size: f64, keypoint: f64) -> MatchCost {
    let total = if epipolar.is_infinite() {
        f64::INFINITY
    } else {
        (epipolar + size + keypoint) / 3.0
    };
    MatchCost {
        epipolar,
        size,
        keypoint,
        total,
    }
}

/// Overall matching cost: mean of the three terms.
pub fn total_cost(
    left: &FishDetection,
    right: &FishDetection,
    provider: &CurveProvider<'_>,
    gate_px: f64,
) -> Result<MatchCost> {
    let lp = cost_epipolar(left, right, provider, gate_px)?;
    Ok(combine(lp, cost_size(left, right), cost_keypoints(left, right)))
}

/// Greedy assignment: repeatedly take the globally cheapest unmatched pair.
///
/// Ties are broken by `(left id, right id)` lexicographic order, so the
/// result is deterministic. The output is sorted by ascending cost.
pub fn greedy_assign(
    left_frame: &DetectionFrame,
    right_frame: &DetectionFrame,
    provider: &CurveProvider<'_>,
    config: &MatchConfig,
) -> Result<Vec<MatchedPair>> {
    let mut entries = Vec::new();
    for (i, left) in left_frame.detections.iter().enumerate() {
        let curve = provider.curve_for(left.bbox.center)?;
        for (j, right) in right_frame.detections.iter().enumerate() {
            let lp = cost_epipolar_with_curve(&curve, right, config.gate_px);
            let cost = combine(lp, cost_size(left, right), cost_keypoints(left, right));
            if cost.total.is_finite() && cost.total <= config.max_total_cost {
                entries.push((i, j, cost));
            }
        }
    }

    let order = greedy_order(
        &entries
            .iter()
            .map(|&(i, j, c)| (i, j, c.total))
            .collect::<Vec<_>>(),
        |i| left_frame.detections[i].id.as_str(),
        |j| right_frame.detections[j].id.as_str(),
    );

    Ok(order
        .into_iter()
        .map(|k| {
            let (i, j, cost) = entries[k];
            MatchedPair {
                left: left_frame.detections[i].clone(),
                right: right_frame.detections[j].clone(),
                cost,
            }
        })
        .collect())
}

/// Core greedy selection over `(left, right, cost)` entries. Returns indices
/// into `entries` in selection order.
fn greedy_order<'a>(
    entries: &[(usize, usize, f64)],
    left_id: impl Fn(usize) -> &'a str,
    right_id: impl Fn(usize) -> &'a str,
) -> Vec<usize> {
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| {
        let (ia, ja, ca) = entries[a];
        let (ib, jb, cb) = entries[b];
        ca.total_cmp(&cb)
            .then_with(|| left_id(ia).cmp(left_id(ib)))
            .then_with(|| right_id(ja).cmp(right_id(jb)))
    });

    let mut left_used = std::collections::HashSet::new();
    let mut right_used = std::collections::HashSet::new();
    let mut selected = Vec::new();
    for k in order {
        let (i, j, _) = entries[k];
        if left_used.contains(&i) || right_used.contains(&j) {
            continue;
        }
        left_used.insert(i);
        right_used.insert(j);
        selected.push(k);
    }
    selected
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{BoundingBox, CameraSide, DetectedKeypoint, QualityClass};
    use proptest::prelude::*;

    fn detection(id: &str, cx: f64, cy: f64, w: f64, h: f64, kps: [(f64, f64); 5]) -> FishDetection {
        FishDetection {
            id: id.to_string(),
            bbox: BoundingBox {
                center: Pixel::new(cx, cy),
                width: w,
                height: h,
            },
            keypoints: kps.map(|(u, v)| DetectedKeypoint {
                position: Pixel::new(u, v),
                confidence: 1.0,
            }),
            quality: QualityClass::High,
            quality_scores: [0.0, 0.0, 1.0],
        }
    }

    fn base_keypoints() -> [(f64, f64); 5] {
        [(40.0, 0.0), (30.0, -2.0), (0.0, -10.0), (0.0, 10.0), (-40.0, 0.0)]
    }

    fn shifted(kps: [(f64, f64); 5], du: f64, dv: f64) -> [(f64, f64); 5] {
        kps.map(|(u, v)| (u + du, v + dv))
    }

    /// Straight vertical polyline through u = at, spanning v ∈ [-10⁴, 10⁴].
    fn vertical_curve(at: f64) -> EpipolarCurve {
        EpipolarCurve {
            vertices: vec![Pixel::new(at, -1e4), Pixel::new(at, 1e4)],
            depths: vec![1.0, 2.0],
            depth_range: (1.0, 2.0),
            source_pixel: Pixel::new(at, 0.0),
        }
    }

    #[test]
    fn epipolar_cost_zero_on_curve() {
        let right = detection("r", 200.0, 55.0, 80.0, 30.0, base_keypoints());
        assert_eq!(cost_epipolar_with_curve(&vertical_curve(200.0), &right, 150.0), 0.0);
    }

    #[test]
    fn epipolar_cost_normalizes_by_gate() {
        // Right center 75 px from the curve, gate 150 → 0.5.
        let right = detection("r", 275.0, 55.0, 80.0, 30.0, base_keypoints());
        assert_eq!(cost_epipolar_with_curve(&vertical_curve(200.0), &right, 150.0), 0.5);
    }

    #[test]
    fn epipolar_cost_gate_is_strict() {
        let right = detection("r", 350.0, 55.0, 80.0, 30.0, base_keypoints());
        let cost = cost_epipolar_with_curve(&vertical_curve(200.0), &right, 150.0);
        assert!(cost.is_infinite());
    }

    #[test]
    fn size_cost_examples() {
        let a = detection("a", 0.0, 0.0, 100.0, 50.0, base_keypoints());
        assert_eq!(cost_size(&a, &a), 0.0);

        let b = detection("b", 0.0, 0.0, 150.0, 50.0, base_keypoints());
        assert!((cost_size(&a, &b) - 0.2).abs() < 1e-15);

        // Common ×3 scaling of both sides: per-term |w−3w|/(0.5·4w) = 1.
        let c = detection("c", 0.0, 0.0, 300.0, 150.0, base_keypoints());
        assert!((cost_size(&a, &c) - 1.0).abs() < 1e-15);
        let small = detection("s", 0.0, 0.0, 12.0, 7.0, base_keypoints());
        let big = detection("B", 0.0, 0.0, 36.0, 21.0, base_keypoints());
        assert!((cost_size(&small, &big) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn keypoint_cost_ignores_translation() {
        let a = detection("a", 0.0, 0.0, 80.0, 30.0, base_keypoints());
        let b = detection("b", 500.0, 300.0, 80.0, 30.0, shifted(base_keypoints(), 123.0, -45.0));
        assert!(cost_keypoints(&a, &b).abs() < 1e-12);
    }

    #[test]
    fn keypoint_cost_single_displacement_matches_formula() {
        let (w, h) = (80.0, 30.0);
        let delta = 10.0;
        let a = detection("a", 0.0, 0.0, w, h, base_keypoints());
        let mut moved = base_keypoints();
        moved[0].0 += delta;
        let b = detection("b", 0.0, 0.0, w, h, moved);

        // Displacing one of five keypoints by delta shifts the centroid by
        // delta/5: the moved keypoint contributes 4·delta/5, the others
        // delta/5 each, normalized by 0.5·(2w + 2h).
        let expected = (4.0 * delta / 5.0 + 4.0 * (delta / 5.0)) / (w + h);
        assert!((cost_keypoints(&a, &b) - expected).abs() < 1e-12);
    }

    #[test]
    fn keypoint_cost_mirrored_pattern_is_positive() {
        let a = detection("a", 0.0, 0.0, 80.0, 30.0, base_keypoints());
        let b = detection("b", 0.0, 0.0, 80.0, 30.0, base_keypoints().map(|(u, v)| (-u, v)));
        assert!(cost_keypoints(&a, &b) > 0.0);
    }

    #[test]
    fn total_cost_is_mean_and_propagates_infinity() {
        let cost = combine(0.3, 0.1, 0.2);
        assert!((cost.total - 0.2).abs() < 1e-15);
        assert_eq!(combine(0.0, 0.0, 0.0).total, 0.0);
        assert!(combine(f64::INFINITY, 0.0, 0.0).total.is_infinite());
    }

    #[test]
    fn greedy_matches_exhaustive_oracle() {
        // A 3×3 matrix with a unique global ordering of all nine entries.
        let costs = [
            [0.31, 0.80, 0.55],
            [0.12, 0.44, 0.71],
            [0.62, 0.23, 0.90],
        ];
        let mut entries = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                entries.push((i, j, costs[i][j]));
            }
        }
        let ids = ["a", "b", "c"];
        let picked = greedy_order(&entries, |i| ids[i], |j| ids[j]);
        let picked: Vec<(usize, usize)> = picked.iter().map(|&k| (entries[k].0, entries[k].1)).collect();

        // Oracle: repeatedly scan the whole matrix for the smallest
        // unmatched entry.
        let mut oracle = Vec::new();
        let mut used_l = [false; 3];
        let mut used_r = [false; 3];
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in 0..3 {
                for j in 0..3 {
                    if used_l[i] || used_r[j] {
                        continue;
                    }
                    if best.is_none_or(|(bi, bj)| costs[i][j] < costs[bi][bj]) {
                        best = Some((i, j));
                    }
                }
            }
            match best {
                Some((i, j)) => {
                    used_l[i] = true;
                    used_r[j] = true;
                    oracle.push((i, j));
                }
                None => break,
            }
        }
        assert_eq!(picked, oracle);
        assert_eq!(picked, vec![(1, 0), (2, 1), (0, 2)]);
    }

    #[test]
    fn all_infinite_costs_give_empty_result() {
        let left = DetectionFrame {
            frame_id: 0,
            camera: CameraSide::Left,
            image_path: None,
            detections: vec![detection("l0", 200.0, 50.0, 80.0, 30.0, base_keypoints())],
        };
        let right = DetectionFrame {
            frame_id: 0,
            camera: CameraSide::Right,
            image_path: None,
            detections: vec![detection("r0", 2000.0, 50.0, 80.0, 30.0, base_keypoints())],
        };
        // Mimic greedy_assign with a fixed synthetic curve far from r0.
        let curve = vertical_curve(200.0);
        let lp = cost_epipolar_with_curve(&curve, &right.detections[0], 150.0);
        assert!(lp.is_infinite());
        let cost = combine(
            lp,
            cost_size(&left.detections[0], &right.detections[0]),
            cost_keypoints(&left.detections[0], &right.detections[0]),
        );
        assert!(cost.total.is_infinite());
    }

    #[test]
    fn tie_break_is_lexicographic() {
        let entries = vec![(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)];
        let left_ids = ["b", "a"];
        let right_ids = ["d", "c"];
        let picked = greedy_order(&entries, |i| left_ids[i], |j| right_ids[j]);
        let picked: Vec<(usize, usize)> = picked.iter().map(|&k| (entries[k].0, entries[k].1)).collect();
        // "a" before "b", "c" before "d": (1,1) first, then (0,0).
        assert_eq!(picked, vec![(1, 1), (0, 0)]);
    }

    proptest! {
        #[test]
        fn prop_cost_terms_are_symmetric(
            w1 in 10.0..200.0_f64, h1 in 10.0..200.0_f64,
            w2 in 10.0..200.0_f64, h2 in 10.0..200.0_f64,
            du in -50.0..50.0_f64, dv in -50.0..50.0_f64,
            spread in 0.5..2.0_f64,
        ) {
            let a = detection("a", 0.0, 0.0, w1, h1, base_keypoints());
            let kps = base_keypoints().map(|(u, v)| (u * spread + du, v * spread + dv));
            let b = detection("b", 0.0, 0.0, w2, h2, kps);
            prop_assert_eq!(cost_size(&a, &b), cost_size(&b, &a));
            prop_assert_eq!(cost_keypoints(&a, &b), cost_keypoints(&b, &a));
        }

        #[test]
        fn prop_keypoint_cost_translation_invariant(
            du in -500.0..500.0_f64, dv in -500.0..500.0_f64,
        ) {
            let a = detection("a", 0.0, 0.0, 80.0, 30.0, base_keypoints());
            let b = detection("b", 0.0, 0.0, 80.0, 30.0, shifted(base_keypoints(), 7.0, -3.0));
            let b_moved = detection("b", 0.0, 0.0, 80.0, 30.0, shifted(shifted(base_keypoints(), 7.0, -3.0), du, dv));
            let base = cost_keypoints(&a, &b);
            let moved = cost_keypoints(&a, &b_moved);
            prop_assert!((base - moved).abs() < 1e-12);
        }
    }
}
