//! Match filters: quality class, bounding-box aspect ratio, and 3D swimming
//! direction. Each filter must pass in both views; the direction filter runs
//! after triangulation on the 3D body axis.

use crate::camera::FlatPortCamera;
use crate::detection::QualityClass;
use crate::error::Result;
use crate::matching::MatchedPair;
use crate::measure::{body_axis_cosine, FishMeasurement};

/// Which filter rejected a pair, in the fixed evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectedBy {
    Quality,
    Aspect,
    Direction,
}

impl RejectedBy {
    pub fn key(self) -> &'static str {
        match self {
            RejectedBy::Quality => "quality",
            RejectedBy::Aspect => "aspect",
            RejectedBy::Direction => "direction",
        }
    }
}

/// Outcome of a filter check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterVerdict {
    pub kept: bool,
    pub rejected_by: Option<RejectedBy>,
}

impl FilterVerdict {
    pub fn kept() -> Self {
        FilterVerdict {
            kept: true,
            rejected_by: None,
        }
    }

    pub fn rejected(by: RejectedBy) -> Self {
        FilterVerdict {
            kept: false,
            rejected_by: Some(by),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FilterConfig {
    /// Minimum quality class both detections must reach.
    pub require_quality: QualityClass,
    /// Minimum bounding-box aspect ratio (width / height), both views.
    pub min_aspect: f64,
    /// Minimum angle between the body axis and the optical axis, degrees.
    pub min_axis_angle_deg: f64,
    pub quality_enabled: bool,
    pub aspect_enabled: bool,
    pub direction_enabled: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            require_quality: QualityClass::High,
            min_aspect: 1.5,
            min_axis_angle_deg: 45.0,
            quality_enabled: true,
            aspect_enabled: true,
            direction_enabled: true,
        }
    }
}

/// Keep pairs where both detections reach the required quality class.
pub fn filter_quality(pair: &MatchedPair, cfg: &FilterConfig) -> FilterVerdict {
    if !cfg.quality_enabled {
        return FilterVerdict::kept();
    }
    if pair.left.quality >= cfg.require_quality && pair.right.quality >= cfg.require_quality {
        FilterVerdict::kept()
    } else {
        FilterVerdict::rejected(RejectedBy::Quality)
    }
}

/// Keep pairs whose boxes are elongated enough in both views. An aspect
/// ratio of exactly `min_aspect` is kept: only strictly smaller is rejected.
pub fn filter_aspect(pair: &MatchedPair, cfg: &FilterConfig) -> FilterVerdict {
    if !cfg.aspect_enabled {
        return FilterVerdict::kept();
    }
    if pair.left.bbox.aspect_ratio() >= cfg.min_aspect
        && pair.right.bbox.aspect_ratio() >= cfg.min_aspect
    {
        FilterVerdict::kept()
    } else {
        FilterVerdict::rejected(RejectedBy::Aspect)
    }
}

/// Keep fish whose mouth-to-caudal axis stands at least `min_axis_angle_deg`
/// away from the camera's optical axis. The angle is folded to [0°, 90°], so
/// swimming towards and away from the camera are treated identically; an
/// angle of exactly the threshold is kept.
pub fn filter_direction(
    measurement: &FishMeasurement,
    camera: &FlatPortCamera,
    cfg: &FilterConfig,
) -> Result<FilterVerdict> {
    if !cfg.direction_enabled {
        return Ok(FilterVerdict::kept());
    }
    let cos_to_axis = body_axis_cosine(measurement, camera)?;
    // angle ≥ threshold ⟺ |cos angle| ≤ cos threshold; comparing cosines
    // avoids a degree round-trip at the boundary.
    if cos_to_axis <= cfg.min_axis_angle_deg.to_radians().cos() {
        Ok(FilterVerdict::kept())
    } else {
        Ok(FilterVerdict::rejected(RejectedBy::Direction))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{CameraPose, Pixel, PinholeIntrinsics, RefractivePort, Vec3};
    use crate::detection::{BoundingBox, DetectedKeypoint, FishDetection, KeypointName};
    use crate::error::Error;
    use crate::matching::MatchCost;

    fn detection(quality: QualityClass, w: f64, h: f64) -> FishDetection {
        let scores = match quality {
            QualityClass::Low => [0.8, 0.1, 0.1],
            QualityClass::Medium => [0.1, 0.8, 0.1],
            QualityClass::High => [0.1, 0.1, 0.8],
        };
        FishDetection {
            id: "d".into(),
            bbox: BoundingBox {
                center: Pixel::new(0.0, 0.0),
                width: w,
                height: h,
            },
            keypoints: [DetectedKeypoint {
                position: Pixel::new(0.0, 0.0),
                confidence: 1.0,
            }; 5],
            quality,
            quality_scores: scores,
        }
    }

    fn pair(lq: QualityClass, rq: QualityClass, lw: f64, lh: f64, rw: f64, rh: f64) -> MatchedPair {
        MatchedPair {
            left: detection(lq, lw, lh),
            right: detection(rq, rw, rh),
            cost: MatchCost {
                epipolar: 0.0,
                size: 0.0,
                keypoint: 0.0,
                total: 0.0,
            },
        }
    }

    fn camera() -> FlatPortCamera {
        FlatPortCamera {
            intrinsics: PinholeIntrinsics {
                fx: 2200.0,
                fy: 2200.0,
                cx: 1224.0,
                cy: 1024.0,
                width: 2448,
                height: 2048,
                distortion: None,
            },
            pose: CameraPose::identity(),
            port: RefractivePort {
                n_air: 1.0,
                n_glass: 1.5,
                n_water: 1.33,
                d_glass: 40.0,
                t_glass: 8.0,
                normal: Vec3::new(0.0, 0.0, 1.0),
            },
        }
    }

    fn measurement(mouth: Vec3, caudal: Vec3) -> FishMeasurement {
        let mut keypoints_3d = [Vec3::zeros(); 5];
        keypoints_3d[KeypointName::Mouth.index()] = mouth;
        keypoints_3d[KeypointName::CaudalFin.index()] = caudal;
        FishMeasurement {
            pair_id: "p".into(),
            keypoints_3d,
            length_mm: (caudal - mouth).norm(),
            ray_gap_mm: [0.0; 5],
            axis_angle_deg: 0.0,
        }
    }

    #[test]
    fn quality_requires_both_views() {
        let cfg = FilterConfig::default();
        assert!(filter_quality(&pair(QualityClass::High, QualityClass::High, 9.0, 3.0, 9.0, 3.0), &cfg).kept);
        let v = filter_quality(&pair(QualityClass::High, QualityClass::Medium, 9.0, 3.0, 9.0, 3.0), &cfg);
        assert_eq!(v.rejected_by, Some(RejectedBy::Quality));

        let mut disabled = cfg;
        disabled.quality_enabled = false;
        assert!(filter_quality(&pair(QualityClass::Low, QualityClass::Low, 9.0, 3.0, 9.0, 3.0), &disabled).kept);
    }

    #[test]
    fn aspect_boundary_semantics() {
        let cfg = FilterConfig::default();
        assert!(filter_aspect(&pair(QualityClass::High, QualityClass::High, 90.0, 30.0, 90.0, 30.0), &cfg).kept);
        let square = filter_aspect(&pair(QualityClass::High, QualityClass::High, 30.0, 30.0, 90.0, 30.0), &cfg);
        assert_eq!(square.rejected_by, Some(RejectedBy::Aspect));
        // Exactly 1.5 is kept; strictly less is rejected.
        assert!(filter_aspect(&pair(QualityClass::High, QualityClass::High, 45.0, 30.0, 45.0, 30.0), &cfg).kept);
        let just_under =
            filter_aspect(&pair(QualityClass::High, QualityClass::High, 44.97, 30.0, 45.0, 30.0), &cfg);
        assert_eq!(just_under.rejected_by, Some(RejectedBy::Aspect));
    }

    #[test]
    fn direction_boundary_semantics() {
        let cfg = FilterConfig::default();
        let cam = camera();
        // Perpendicular to the optical axis: 90°, kept.
        let m = measurement(Vec3::new(0.0, 0.0, 300.0), Vec3::new(60.0, 0.0, 300.0));
        assert!(filter_direction(&m, &cam, &cfg).unwrap().kept);
        // Parallel: 0°, rejected.
        let m = measurement(Vec3::new(0.0, 0.0, 300.0), Vec3::new(0.0, 0.0, 360.0));
        assert_eq!(
            filter_direction(&m, &cam, &cfg).unwrap().rejected_by,
            Some(RejectedBy::Direction)
        );
        // Exactly 45° is kept.
        let m = measurement(Vec3::new(0.0, 0.0, 300.0), Vec3::new(60.0, 0.0, 360.0));
        assert!(filter_direction(&m, &cam, &cfg).unwrap().kept);
        // 44.99° is rejected.
        let a = 44.99_f64.to_radians();
        let m = measurement(
            Vec3::new(0.0, 0.0, 300.0),
            Vec3::new(0.0, 0.0, 300.0) + Vec3::new(a.sin(), 0.0, a.cos()) * 60.0,
        );
        assert_eq!(
            filter_direction(&m, &cam, &cfg).unwrap().rejected_by,
            Some(RejectedBy::Direction)
        );
    }

    #[test]
    fn direction_is_symmetric_in_axis_sign_and_endpoint_swap() {
        let cfg = FilterConfig::default();
        let cam = camera();
        let mouth = Vec3::new(10.0, 5.0, 300.0);
        let caudal = Vec3::new(50.0, -5.0, 330.0);
        let forward = filter_direction(&measurement(mouth, caudal), &cam, &cfg).unwrap();
        let swapped = filter_direction(&measurement(caudal, mouth), &cam, &cfg).unwrap();
        assert_eq!(forward, swapped);
    }

    #[test]
    fn degenerate_body_is_an_error() {
        let cfg = FilterConfig::default();
        let cam = camera();
        let p = Vec3::new(1.0, 2.0, 300.0);
        let err = filter_direction(&measurement(p, p), &cam, &cfg).unwrap_err();
        assert!(matches!(err, Error::DegenerateBody { .. }));
    }
}
