//! Synthetic stereo scenes with exact ground truth.
//!
//! Fish are five-keypoint planar bodies posed inside a tank volume and
//! forward-projected through the refractive model of both cameras. The
//! noiseless projections are the ground truth; configurable Gaussian
//! corruption produces the "detector output" the pipeline consumes. Every
//! fish draws from its own seeded stream, so corrupting one fish never
//! changes another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::camera::{FlatPortCamera, Pixel, Vec3};
use crate::detection::{
    fmt_f64, BoundingBox, CameraSide, DetectedKeypoint, DetectionFrame, FishDetection,
    KeypointName, QualityClass,
};
use crate::error::{Error, Result};
use crate::gray::GrayImage;
use crate::measure::{GroundTruthFish, GroundTruthFrame};

pub const GROUND_TRUTH_SCHEMA_VERSION: u32 = 1;

/// Placement attempts per fish before giving up.
const MAX_PLACEMENT_RETRIES: usize = 400;
/// Bounding boxes are the keypoint extents inflated by this margin per side.
const BBOX_MARGIN_PX: f64 = 2.0;
/// Keypoints must land at least this far from the sensor border.
const SENSOR_MARGIN_PX: f64 = 8.0;

/// Axis-aligned tank volume in the rig frame, mm.
#[derive(Debug, Clone, Copy)]
pub struct TankVolume {
    pub min: Vec3,
    pub max: Vec3,
}

/// Gaussian corruption applied to the noiseless projections.
#[derive(Debug, Clone, Copy)]
pub struct CorruptionModel {
    pub keypoint_noise_sigma_px: f64,
    pub bbox_noise_sigma_px: f64,
    /// Probability for a fish to be labeled low quality.
    pub low_quality_fraction: f64,
    /// Noise multiplier applied to low-quality fish.
    pub low_quality_noise_multiplier: f64,
}

impl CorruptionModel {
    pub fn none() -> Self {
        CorruptionModel {
            keypoint_noise_sigma_px: 0.0,
            bbox_noise_sigma_px: 0.0,
            low_quality_fraction: 0.0,
            low_quality_noise_multiplier: 1.0,
        }
    }
}

/// Scene generation parameters.
#[derive(Debug, Clone)]
pub struct SceneConfig {
    pub n_fish: usize,
    pub tank: TankVolume,
    pub corruption: CorruptionModel,
    /// Sampled mouth-to-caudal length range, mm. The species tops out
    /// around 80 mm, which bounds the default.
    pub length_range_mm: (f64, f64),
    /// Place every second fish along the previous fish's left viewing ray
    /// so their epipolar gates overlap.
    pub paired_placement: bool,
    /// Resample fish whose bounding box overlaps an already placed one in
    /// either view. Keeps keypoints unoccluded, like fish spread out in
    /// front of a plain wall; the crowded profile turns this off.
    pub avoid_overlap: bool,
}

/// A posed synthetic fish before projection.
#[derive(Debug, Clone)]
pub struct SyntheticFish {
    pub keypoints_rig: [Vec3; 5],
    pub length_mm: f64,
    pub quality_truth: QualityClass,
}

/// Ground truth of one fish: ids, noiseless boxes, 3D keypoints.
#[derive(Debug, Clone)]
pub struct GroundTruthFishFull {
    pub left_id: String,
    pub right_id: String,
    pub left_box: BoundingBox,
    pub right_box: BoundingBox,
    pub length_mm: f64,
    pub keypoints_3d: [Vec3; 5],
}

impl GroundTruthFishFull {
    pub fn left_center(&self) -> Pixel {
        self.left_box.center
    }

    pub fn right_center(&self) -> Pixel {
        self.right_box.center
    }
}

fn boxes_overlap(a: &BoundingBox, b: &BoundingBox) -> bool {
    // Inflate so neighboring templates stay clear of each other.
    const CLEARANCE_PX: f64 = 12.0;
    (a.center.u - b.center.u).abs() < 0.5 * (a.width + b.width) + CLEARANCE_PX
        && (a.center.v - b.center.v).abs() < 0.5 * (a.height + b.height) + CLEARANCE_PX
}

/// One generated stereo frame: corrupted detections plus exact truth.
#[derive(Debug, Clone)]
pub struct SceneFrame {
    pub left: DetectionFrame,
    pub right: DetectionFrame,
    pub truth: Vec<GroundTruthFishFull>,
}

impl SceneFrame {
    pub fn frame_id(&self) -> u64 {
        self.left.frame_id
    }

    pub fn truth_frame(&self) -> GroundTruthFrame {
        GroundTruthFrame {
            frame_id: self.frame_id(),
            fish: self
                .truth
                .iter()
                .map(|f| GroundTruthFish {
                    left_center: f.left_center(),
                    right_center: f.right_center(),
                    length_mm: f.length_mm,
                })
                .collect(),
        }
    }
}

/// Canonical five-keypoint body in fish coordinates (x mouth→tail axis,
/// y dorsal, z lateral), scaled by body length. Mouth-to-caudal distance is
/// exactly `length`.
fn canonical_body(length: f64) -> [Vec3; 5] {
    [
        Vec3::new(0.5 * length, 0.0, 0.0),            // mouth
        Vec3::new(0.35 * length, 0.08 * length, 0.0), // eye
        Vec3::new(-0.05 * length, 0.18 * length, 0.0), // dorsal fin
        Vec3::new(-0.10 * length, -0.15 * length, 0.0), // ventral fin
        Vec3::new(-0.5 * length, 0.0, 0.0),           // caudal fin
    ]
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

fn fish_seed(seed: u64, frame_id: u64, fish_index: usize) -> u64 {
    splitmix(splitmix(seed ^ splitmix(frame_id)) ^ fish_index as u64)
}

/// Standard normal via Box-Muller; two uniform draws per sample.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn project_keypoints(
    cam: &FlatPortCamera,
    keypoints: &[Vec3; 5],
) -> Result<Option<[Pixel; 5]>> {
    let mut out = [Pixel::new(0.0, 0.0); 5];
    for (i, kp) in keypoints.iter().enumerate() {
        let px = match cam.forward_project(*kp) {
            Ok(px) => px,
            Err(Error::PointBehindPort { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let (w, h) = (cam.intrinsics.width as f64, cam.intrinsics.height as f64);
        if px.u < SENSOR_MARGIN_PX
            || px.v < SENSOR_MARGIN_PX
            || px.u > w - SENSOR_MARGIN_PX
            || px.v > h - SENSOR_MARGIN_PX
        {
            return Ok(None);
        }
        out[i] = px;
    }
    Ok(Some(out))
}

fn tight_bbox(pixels: &[Pixel; 5]) -> BoundingBox {
    let (mut min_u, mut max_u) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_v, mut max_v) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in pixels {
        min_u = min_u.min(p.u);
        max_u = max_u.max(p.u);
        min_v = min_v.min(p.v);
        max_v = max_v.max(p.v);
    }
    BoundingBox {
        center: Pixel::new(0.5 * (min_u + max_u), 0.5 * (min_v + max_v)),
        width: (max_u - min_u) + 2.0 * BBOX_MARGIN_PX,
        height: (max_v - min_v) + 2.0 * BBOX_MARGIN_PX,
    }
}

fn corrupt_detection(
    id: String,
    noiseless: &[Pixel; 5],
    quality: QualityClass,
    corruption: &CorruptionModel,
    rng: &mut ChaCha8Rng,
) -> FishDetection {
    let mult = if quality == QualityClass::Low {
        corruption.low_quality_noise_multiplier
    } else {
        1.0
    };
    let sigma_kp = corruption.keypoint_noise_sigma_px * mult;
    let sigma_box = corruption.bbox_noise_sigma_px * mult;

    let confidence = if quality == QualityClass::Low { 0.4 } else { 0.9 };
    let mut keypoints = [DetectedKeypoint {
        position: Pixel::new(0.0, 0.0),
        confidence,
    }; 5];
    for (i, px) in noiseless.iter().enumerate() {
        keypoints[i].position = Pixel::new(
            px.u + sigma_kp * gaussian(rng),
            px.v + sigma_kp * gaussian(rng),
        );
    }

    let clean_box = tight_bbox(noiseless);
    let bbox = BoundingBox {
        center: Pixel::new(
            clean_box.center.u + sigma_box * gaussian(rng),
            clean_box.center.v + sigma_box * gaussian(rng),
        ),
        width: (clean_box.width + sigma_box * gaussian(rng)).max(4.0),
        height: (clean_box.height + sigma_box * gaussian(rng)).max(4.0),
    };

    let quality_scores = match quality {
        QualityClass::Low => [0.7, 0.2, 0.1],
        QualityClass::Medium => [0.15, 0.7, 0.15],
        QualityClass::High => [0.05, 0.15, 0.8],
    };

    FishDetection {
        id,
        bbox,
        keypoints,
        quality,
        quality_scores,
    }
}

/// Generate one stereo frame. Identical inputs produce a bit-identical
/// scene; fish that cannot be placed inside both sensors are resampled up
/// to [`MAX_PLACEMENT_RETRIES`] times.
pub fn generate_scene(
    left_cam: &FlatPortCamera,
    right_cam: &FlatPortCamera,
    cfg: &SceneConfig,
    frame_id: u64,
    seed: u64,
) -> Result<SceneFrame> {
    let mut left_detections = Vec::with_capacity(cfg.n_fish);
    let mut right_detections = Vec::with_capacity(cfg.n_fish);
    let mut truth = Vec::with_capacity(cfg.n_fish);
    let mut prev_center: Option<Vec3> = None;

    for index in 0..cfg.n_fish {
        let mut rng = ChaCha8Rng::seed_from_u64(fish_seed(seed, frame_id, index));
        let mut placed = None;

        for attempt in 0..MAX_PLACEMENT_RETRIES {
            let length = rng.random_range(cfg.length_range_mm.0..cfg.length_range_mm.1);
            let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let pitch = rng.random_range(-0.35..0.35);
            let roll = rng.random_range(-0.26..0.26);

            let pair_with_prev =
                cfg.paired_placement && index % 2 == 1 && attempt < 50 && prev_center.is_some();
            let position = if pair_with_prev {
                // Slide along the previous fish's left viewing ray so both
                // share an epipolar band in the right image.
                let base = prev_center.unwrap();
                let px = match left_cam.forward_project(base) {
                    Ok(px) => px,
                    Err(_) => continue,
                };
                let ray = left_cam.trace_pixel_ray(px)?;
                let depth = (base - ray.origin).dot(&ray.port_normal);
                ray.point_at_depth(depth + rng.random_range(25.0..70.0))
            } else {
                let half = 0.5 * length;
                Vec3::new(
                    rng.random_range(cfg.tank.min.x + half..cfg.tank.max.x - half),
                    rng.random_range(cfg.tank.min.y + half..cfg.tank.max.y - half),
                    rng.random_range(cfg.tank.min.z + half..cfg.tank.max.z - half),
                )
            };

            // Heading (yaw) turns the fish about the vertical image axis,
            // so bodies point anywhere from parallel to the glass to
            // straight at the camera; pitch and roll stay small.
            let rotation = *nalgebra::Rotation3::from_euler_angles(roll, yaw, pitch).matrix();
            let mut keypoints_rig = [Vec3::zeros(); 5];
            for (k, body) in canonical_body(length).iter().enumerate() {
                keypoints_rig[k] = rotation * body + position;
            }

            let Some(left_px) = project_keypoints(left_cam, &keypoints_rig)? else {
                continue;
            };
            let Some(right_px) = project_keypoints(right_cam, &keypoints_rig)? else {
                continue;
            };

            if cfg.avoid_overlap {
                let overlaps = truth.iter().any(|other: &GroundTruthFishFull| {
                    boxes_overlap(&tight_bbox(&left_px), &other.left_box)
                        || boxes_overlap(&tight_bbox(&right_px), &other.right_box)
                });
                if overlaps {
                    continue;
                }
            }

            placed = Some((length, position, keypoints_rig, left_px, right_px));
            break;
        }

        let Some((length, position, keypoints_rig, left_px, right_px)) = placed else {
            return Err(Error::ProjectionFailure {
                retries: MAX_PLACEMENT_RETRIES,
            });
        };
        prev_center = Some(position);

        let fish = SyntheticFish {
            keypoints_rig,
            length_mm: length,
            quality_truth: if rng.random::<f64>() < cfg.corruption.low_quality_fraction {
                QualityClass::Low
            } else {
                QualityClass::High
            },
        };

        let id = format!("f{index}");
        left_detections.push(corrupt_detection(
            id.clone(),
            &left_px,
            fish.quality_truth,
            &cfg.corruption,
            &mut rng,
        ));
        right_detections.push(corrupt_detection(
            id.clone(),
            &right_px,
            fish.quality_truth,
            &cfg.corruption,
            &mut rng,
        ));
        truth.push(GroundTruthFishFull {
            left_id: id.clone(),
            right_id: id,
            left_box: tight_bbox(&left_px),
            right_box: tight_bbox(&right_px),
            length_mm: fish.length_mm,
            keypoints_3d: fish.keypoints_rig,
        });
    }

    Ok(SceneFrame {
        left: DetectionFrame {
            frame_id,
            camera: CameraSide::Left,
            image_path: None,
            detections: left_detections,
        },
        right: DetectionFrame {
            frame_id,
            camera: CameraSide::Right,
            image_path: None,
            detections: right_detections,
        },
        truth,
    })
}

// ---------------------------------------------------------------------------
// Standard rig and benchmark profiles
// ---------------------------------------------------------------------------

use crate::camera::{CameraPose, PinholeIntrinsics, RefractivePort};
use nalgebra::Matrix3;

/// Baseline of [`standard_rig`], mm.
pub const STANDARD_BASELINE_MM: f64 = 50.0;
/// Water depth (beyond the outer glass) covered by the standard tank, mm.
pub const STANDARD_TANK_DEPTH_MM: f64 = 860.0;

/// The rig every benchmark profile uses: two parallel 2448×2048 cameras
/// behind one flat port (indices 1.0 / 1.5 / 1.33, 40 mm standoff, 8 mm
/// glass), 50 mm baseline.
pub fn standard_rig() -> (FlatPortCamera, FlatPortCamera) {
    let intrinsics = PinholeIntrinsics {
        fx: 2200.0,
        fy: 2200.0,
        cx: 1224.0,
        cy: 1024.0,
        width: 2448,
        height: 2048,
        distortion: None,
    };
    let port = RefractivePort {
        n_air: 1.0,
        n_glass: 1.5,
        n_water: 1.33,
        d_glass: 40.0,
        t_glass: 8.0,
        normal: Vec3::new(0.0, 0.0, 1.0),
    };
    let left = FlatPortCamera {
        intrinsics: intrinsics.clone(),
        pose: CameraPose::identity(),
        port: port.clone(),
    };
    let right = FlatPortCamera {
        intrinsics,
        pose: CameraPose {
            rotation: Matrix3::identity(),
            translation: Vec3::new(-STANDARD_BASELINE_MM, 0.0, 0.0),
        },
        port,
    };
    (left, right)
}

/// Tank volume of the standard benchmarks, rig frame. Deep enough that ten
/// fish fit into the jointly visible volume without overlapping in either
/// view.
pub fn standard_tank() -> TankVolume {
    TankVolume {
        min: Vec3::new(-85.0, -105.0, 420.0),
        max: Vec3::new(135.0, 105.0, 900.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkProfile {
    /// 20 frames × 10 noiseless fish.
    Clean,
    /// 20 frames × 10 fish, σ = 1.5 px, 20% low quality at 4× noise.
    Noisy,
    /// 20 frames × 25 fish with overlapping epipolar gates.
    Crowded,
}

impl BenchmarkProfile {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "clean" => Some(BenchmarkProfile::Clean),
            "noisy" => Some(BenchmarkProfile::Noisy),
            "crowded" => Some(BenchmarkProfile::Crowded),
            _ => None,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            BenchmarkProfile::Clean => "clean",
            BenchmarkProfile::Noisy => "noisy",
            BenchmarkProfile::Crowded => "crowded",
        }
    }

    /// Frozen seed of the profile; changing it changes every benchmark
    /// number downstream.
    pub fn seed(self) -> u64 {
        match self {
            BenchmarkProfile::Clean => 101,
            BenchmarkProfile::Noisy => 202,
            BenchmarkProfile::Crowded => 303,
        }
    }

    pub fn frame_count(self) -> u64 {
        20
    }

    pub fn scene_config(self) -> SceneConfig {
        let base = SceneConfig {
            n_fish: 10,
            tank: standard_tank(),
            corruption: CorruptionModel::none(),
            length_range_mm: (40.0, 80.0),
            paired_placement: false,
            avoid_overlap: true,
        };
        match self {
            BenchmarkProfile::Clean => base,
            BenchmarkProfile::Noisy => SceneConfig {
                corruption: CorruptionModel {
                    keypoint_noise_sigma_px: 1.5,
                    bbox_noise_sigma_px: 1.5,
                    low_quality_fraction: 0.2,
                    low_quality_noise_multiplier: 4.0,
                },
                ..base
            },
            BenchmarkProfile::Crowded => SceneConfig {
                n_fish: 25,
                corruption: CorruptionModel {
                    keypoint_noise_sigma_px: 1.0,
                    bbox_noise_sigma_px: 1.0,
                    low_quality_fraction: 0.1,
                    low_quality_noise_multiplier: 4.0,
                },
                paired_placement: true,
                avoid_overlap: false,
                ..base
            },
        }
    }
}

/// A generated benchmark: fixed rig, fixed seed, reproducible frames.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub profile: BenchmarkProfile,
    pub left_cam: FlatPortCamera,
    pub right_cam: FlatPortCamera,
    pub frames: Vec<SceneFrame>,
}

/// Generate a standard benchmark suite with its frozen seed and parameters.
pub fn standard_benchmark(profile: BenchmarkProfile) -> Result<Benchmark> {
    standard_benchmark_with_seed(profile, profile.seed())
}

/// Benchmark generation with an explicit seed (profiles pin their own).
pub fn standard_benchmark_with_seed(profile: BenchmarkProfile, seed: u64) -> Result<Benchmark> {
    let (left_cam, right_cam) = standard_rig();
    let cfg = profile.scene_config();
    let mut frames = Vec::new();
    for frame_id in 0..profile.frame_count() {
        frames.push(generate_scene(&left_cam, &right_cam, &cfg, frame_id, seed)?);
    }
    Ok(Benchmark {
        profile,
        left_cam,
        right_cam,
        frames,
    })
}

// ---------------------------------------------------------------------------
// Ground-truth file format
// ---------------------------------------------------------------------------

fn fmt_mm(x: f64) -> String {
    let s = format!("{x:.9}");
    if s == "-0.000000000" {
        "0.000000000".to_string()
    } else {
        s
    }
}

fn truth_fish_json(fish: &GroundTruthFishFull) -> String {
    let mut names = KeypointName::ALL;
    names.sort_by_key(|n| n.key());
    let kps: Vec<String> = names
        .iter()
        .map(|name| {
            let p = fish.keypoints_3d[name.index()];
            format!(
                "\"{}\":[{},{},{}]",
                name.key(),
                fmt_mm(p.x),
                fmt_mm(p.y),
                fmt_mm(p.z)
            )
        })
        .collect();
    format!(
        "{{\"keypoints_3d\":{{{}}},\"left_center\":[{},{}],\"left_id\":{},\"length_mm\":{},\"right_center\":[{},{}],\"right_id\":{}}}",
        kps.join(","),
        fmt_f64(fish.left_center().u),
        fmt_f64(fish.left_center().v),
        serde_json::to_string(&fish.left_id).unwrap(),
        fmt_mm(fish.length_mm),
        fmt_f64(fish.right_center().u),
        fmt_f64(fish.right_center().v),
        serde_json::to_string(&fish.right_id).unwrap(),
    )
}

/// Canonical ground-truth JSON for a list of generated frames.
pub fn ground_truth_string(frames: &[SceneFrame]) -> String {
    let frame_objs: Vec<String> = frames
        .iter()
        .map(|frame| {
            let fish: Vec<String> = frame.truth.iter().map(truth_fish_json).collect();
            format!(
                "{{\"fish\":[{}],\"frame_id\":{}}}",
                fish.join(","),
                frame.frame_id()
            )
        })
        .collect();
    format!(
        "{{\"frames\":[{}],\"schema_version\":{}}}\n",
        frame_objs.join(","),
        GROUND_TRUTH_SCHEMA_VERSION
    )
}

pub fn write_ground_truth(frames: &[SceneFrame], path: impl AsRef<std::path::Path>) -> Result<()> {
    std::fs::write(path, ground_truth_string(frames))?;
    Ok(())
}

#[derive(Deserialize)]
struct WireTruthFish {
    left_center: [f64; 2],
    length_mm: f64,
    right_center: [f64; 2],
}

#[derive(Deserialize)]
struct WireTruthFrame {
    fish: Vec<WireTruthFish>,
    frame_id: u64,
}

#[derive(Deserialize)]
struct WireTruthFile {
    frames: Vec<WireTruthFrame>,
    schema_version: u32,
}

/// Read a ground-truth file down to what evaluation needs.
pub fn read_ground_truth(path: impl AsRef<std::path::Path>) -> Result<Vec<GroundTruthFrame>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let wire: WireTruthFile = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    if wire.schema_version != GROUND_TRUTH_SCHEMA_VERSION {
        return Err(Error::parse(
            path.display().to_string(),
            format!("unsupported schema_version {}", wire.schema_version),
        ));
    }
    Ok(wire
        .frames
        .into_iter()
        .map(|f| GroundTruthFrame {
            frame_id: f.frame_id,
            fish: f
                .fish
                .into_iter()
                .map(|fish| GroundTruthFish {
                    left_center: Pixel::new(fish.left_center[0], fish.left_center[1]),
                    right_center: Pixel::new(fish.right_center[0], fish.right_center[1]),
                    length_mm: fish.length_mm,
                })
                .collect(),
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Optional rasterization for template-matching demos
// ---------------------------------------------------------------------------

fn hash2(x: i64, y: i64, seed: u64) -> u64 {
    splitmix(seed ^ splitmix(x as u64).wrapping_add(splitmix(y as u64).rotate_left(17)))
}

/// Smooth value noise in [0, 1]: bilinear interpolation of a hashed lattice.
/// Smoothness matters: the two views see the body plane under slightly
/// different perspective warps, and template matching needs texture that
/// stays correlated under such warps.
fn value_noise(u: f64, v: f64, cell: f64, seed: u64) -> f64 {
    let (gu, gv) = (u / cell, v / cell);
    let (cu, cv) = (gu.floor(), gv.floor());
    let (fu, fv) = (gu - cu, gv - cv);
    let (cu, cv) = (cu as i64, cv as i64);
    let corner = |i: i64, j: i64| (hash2(cu + i, cv + j, seed) & 1023) as f64 / 1023.0;
    let top = corner(0, 0) * (1.0 - fu) + corner(1, 0) * fu;
    let bottom = corner(0, 1) * (1.0 - fu) + corner(1, 1) * fu;
    top * (1.0 - fv) + bottom * fv
}

/// Render one camera view of a scene: procedural noise background plus one
/// textured elliptical plate per fish.
///
/// The texture lives on the fish's 3D body plane (not in image space): each
/// covered pixel's refracted viewing ray is intersected with the plane and
/// the intensity is a hash of the body-plane coordinates. Both views
/// therefore show the same pattern around corresponding physical points,
/// which is what template refinement needs to lock onto.
pub fn rasterize_view(
    cam: &FlatPortCamera,
    truth: &[GroundTruthFishFull],
    seed: u64,
) -> Result<GrayImage> {
    // Uniform backdrop, like an aquarium standing in front of a wall.
    // Image-anchored background texture would differ between the views at
    // fish disparity and mislead templates that straddle the silhouette.
    let (width, height) = (cam.intrinsics.width, cam.intrinsics.height);
    let mut img = GrayImage::filled(width, height, 96);
    let _ = seed;

    // Two texture octaves on the body plane: coarse blotches plus fine
    // detail, in mm. At tank distance one pixel covers about 0.15 mm.
    const COARSE_CELL_MM: f64 = 3.0;
    const FINE_CELL_MM: f64 = 1.1;

    // Painter's algorithm: draw far fish first so the nearer one wins
    // contested pixels, per view.
    let cam_center = cam.center();
    let mut order: Vec<usize> = (0..truth.len()).collect();
    order.sort_by(|&a, &b| {
        let da = ((truth[a].keypoints_3d[0] + truth[a].keypoints_3d[4]) * 0.5 - cam_center).norm();
        let db = ((truth[b].keypoints_3d[0] + truth[b].keypoints_3d[4]) * 0.5 - cam_center).norm();
        db.total_cmp(&da)
    });

    for index in order {
        let fish = &truth[index];
        let mouth = fish.keypoints_3d[KeypointName::Mouth.index()];
        let caudal = fish.keypoints_3d[KeypointName::CaudalFin.index()];
        let dorsal = fish.keypoints_3d[KeypointName::DorsalFin.index()];
        let center = (mouth + caudal) * 0.5;
        let axis = (mouth - caudal).normalize();
        let plane_normal = axis.cross(&(dorsal - caudal)).normalize();
        let up = plane_normal.cross(&axis);
        // The plate extends beyond the measurement landmarks (snout ahead
        // of the mouth, fin tip behind the caudal base), so every keypoint
        // template sees textured interior, not silhouette edge.
        let semi_major = 0.58 * fish.length_mm + 2.0;
        let semi_minor = 0.27 * fish.length_mm + 2.0;
        let fish_tex = splitmix(seed ^ (index as u64 + 1));

        let mut px = [Pixel::new(0.0, 0.0); 5];
        for (k, p) in fish.keypoints_3d.iter().enumerate() {
            px[k] = cam.forward_project(*p)?;
        }
        let bbox = tight_bbox(&px);
        let pad = 8.0;
        let x0 = ((bbox.center.u - 0.5 * bbox.width - pad).floor() as i64).max(0);
        let x1 = ((bbox.center.u + 0.5 * bbox.width + pad).ceil() as i64).min(width as i64 - 1);
        let y0 = ((bbox.center.v - 0.5 * bbox.height - pad).floor() as i64).max(0);
        let y1 = ((bbox.center.v + 0.5 * bbox.height + pad).ceil() as i64).min(height as i64 - 1);

        for y in y0..=y1 {
            for x in x0..=x1 {
                let ray = cam.trace_pixel_ray(Pixel::new(x as f64, y as f64))?;
                let along = ray.direction.dot(&plane_normal);
                if along.abs() < 1e-9 {
                    continue;
                }
                let t = (center - ray.origin).dot(&plane_normal) / along;
                if t <= 0.0 {
                    continue;
                }
                let hit = ray.origin + ray.direction * t;
                let local = hit - center;
                let (u_mm, v_mm) = (local.dot(&axis), local.dot(&up));
                let e = (u_mm / semi_major).powi(2) + (v_mm / semi_minor).powi(2);
                if e <= 1.0 {
                    let coarse = value_noise(u_mm, v_mm, COARSE_CELL_MM, fish_tex);
                    let fine = value_noise(u_mm, v_mm, FINE_CELL_MM, splitmix(fish_tex));
                    let shade = 140.0 + 48.0 * coarse + 16.0 * fine;
                    img.set(x as u32, y as u32, shade as u8);
                }
            }
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::detection_file_string;

    #[test]
    fn empty_scene_has_empty_frames() {
        let (left, right) = standard_rig();
        let cfg = SceneConfig {
            n_fish: 0,
            ..BenchmarkProfile::Clean.scene_config()
        };
        let scene = generate_scene(&left, &right, &cfg, 0, 1).unwrap();
        assert!(scene.left.detections.is_empty());
        assert!(scene.right.detections.is_empty());
        assert!(scene.truth.is_empty());
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let (left, right) = standard_rig();
        let cfg = BenchmarkProfile::Noisy.scene_config();
        let a = generate_scene(&left, &right, &cfg, 3, 77).unwrap();
        let b = generate_scene(&left, &right, &cfg, 3, 77).unwrap();
        assert_eq!(
            detection_file_string(&[a.left.clone(), a.right.clone()]),
            detection_file_string(&[b.left.clone(), b.right.clone()])
        );
        assert_eq!(
            ground_truth_string(std::slice::from_ref(&a)),
            ground_truth_string(std::slice::from_ref(&b))
        );
    }

    #[test]
    fn corruption_leaves_other_fish_untouched() {
        let (left, right) = standard_rig();
        let clean_cfg = BenchmarkProfile::Clean.scene_config();
        let mut noisy_cfg = clean_cfg.clone();
        // Full-strength corruption on a fraction of fish only.
        noisy_cfg.corruption = CorruptionModel {
            keypoint_noise_sigma_px: 0.0,
            bbox_noise_sigma_px: 0.0,
            low_quality_fraction: 0.5,
            low_quality_noise_multiplier: 4.0,
        };
        let clean = generate_scene(&left, &right, &clean_cfg, 0, 9).unwrap();
        let mixed = generate_scene(&left, &right, &noisy_cfg, 0, 9).unwrap();
        // Same placements: keypoint positions identical since sigma is 0;
        // only quality labels differ.
        for (a, b) in clean.left.detections.iter().zip(&mixed.left.detections) {
            for k in 0..5 {
                assert_eq!(a.keypoints[k].position, b.keypoints[k].position);
            }
        }
    }

    #[test]
    fn noiseless_keypoints_lie_on_epipolar_curves() {
        use crate::epipolar::{closest_point_on_curve, compute_epipolar_curve};
        let (left, right) = standard_rig();
        let cfg = BenchmarkProfile::Clean.scene_config();
        let scene = generate_scene(&left, &right, &cfg, 0, 5).unwrap();
        for (det_l, det_r) in scene.left.detections.iter().zip(&scene.right.detections) {
            for k in 0..5 {
                let curve = compute_epipolar_curve(
                    &left,
                    &right,
                    det_l.keypoints[k].position,
                    (5.0, STANDARD_TANK_DEPTH_MM),
                    32,
                )
                .unwrap();
                let d = closest_point_on_curve(&curve, det_r.keypoints[k].position).distance;
                assert!(
                    d < crate::epipolar::CHORD_TOLERANCE_PX,
                    "keypoint {k} off curve by {d} px"
                );
            }
        }
    }

    #[test]
    fn truth_length_matches_keypoints() {
        let (left, right) = standard_rig();
        let cfg = BenchmarkProfile::Clean.scene_config();
        let scene = generate_scene(&left, &right, &cfg, 1, 6).unwrap();
        for fish in &scene.truth {
            let d = (fish.keypoints_3d[KeypointName::Mouth.index()]
                - fish.keypoints_3d[KeypointName::CaudalFin.index()])
            .norm();
            assert!((d - fish.length_mm).abs() < 1e-9);
        }
    }

    #[test]
    fn harness_detections_round_trip_bit_identically() {
        use crate::detection::{read_detection_file, write_detection_file};
        let (left, right) = standard_rig();
        let cfg = BenchmarkProfile::Noisy.scene_config();
        let scene = generate_scene(&left, &right, &cfg, 0, 31).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("detections.jsonl");
        write_detection_file(&[scene.left.clone(), scene.right.clone()], &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        let frames = read_detection_file(&path).unwrap();
        let again = dir.path().join("again.jsonl");
        write_detection_file(&frames, &again).unwrap();
        assert_eq!(bytes, std::fs::read(&again).unwrap());
    }

    #[test]
    fn ground_truth_round_trip() {
        let (left, right) = standard_rig();
        let cfg = BenchmarkProfile::Clean.scene_config();
        let scene = generate_scene(&left, &right, &cfg, 0, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gt.json");
        write_ground_truth(std::slice::from_ref(&scene), &path).unwrap();
        let frames = read_ground_truth(&path).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].fish.len(), scene.truth.len());
        for (a, b) in frames[0].fish.iter().zip(&scene.truth) {
            assert!((a.length_mm - b.length_mm).abs() < 1e-9);
            assert!(a.left_center.distance(&b.left_center()) < 1e-6);
        }
    }
}
