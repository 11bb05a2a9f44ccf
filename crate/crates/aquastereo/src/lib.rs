//! Refraction-aware stereo vision for measuring fish length in aquariums.
//!
//! Cameras film the tank through its flat glass pane, so viewing rays bend
//! twice (air → glass → water) and the usual pinhole stereo constraints
//! break down. This crate models the flat-port geometry exactly and builds a
//! full measurement pipeline on top of it:
//!
//! 1. **[`camera`]** — flat-port camera model: exact pixel → water-ray
//!    tracing and iterative forward projection.
//! 2. **[`epipolar`]** — piecewise-linear epipolar curves, the refractive
//!    replacement for epipolar lines.
//! 3. **[`detection`]** — fish detections (bbox, five keypoints, quality
//!    class) and their JSON-lines file format.
//! 4. **[`matching`]** — three-term matching cost and greedy assignment of
//!    detections across a stereo pair.
//! 5. **[`refine`]** — NCC template matching constrained to the epipolar
//!    curve to improve keypoints.
//! 6. **[`filter`]** — quality, aspect-ratio, and swimming-direction
//!    filters that discard unreliable pairs.
//! 7. **[`measure`]** — ray-midpoint triangulation, mouth-to-caudal length,
//!    and evaluation statistics (length RMSE, bad-match rate).
//! 8. **[`synth`]** — synthetic scene generator with exact ground truth,
//!    used as the test oracle and benchmark source.
//!
//! The [`pipeline`] module wires the stages into deterministic batch runs;
//! the `aquastereo` binary exposes them as `measure`, `simulate`,
//! `epipolar`, and `ablate` subcommands. The runnable programs under
//! `examples/` each demonstrate one capability end to end.

pub mod calib;
pub mod camera;
pub mod detection;
pub mod epipolar;
pub mod error;
pub mod filter;
pub mod gray;
pub mod matching;
pub mod measure;
pub mod pipeline;
pub mod refine;
pub mod synth;

pub use calib::RigCalibration;
pub use camera::{
    refract_direction, CameraPose, FlatPortCamera, Mat3, PinholeIntrinsics, Pixel,
    ProjectionSolver, RefractivePort, Vec3, WaterRay,
};
pub use detection::{
    read_detection_file, write_detection_file, BoundingBox, CameraSide, DetectedKeypoint,
    DetectionFrame, FishDetection, KeypointName, QualityClass,
};
pub use epipolar::{closest_point_on_curve, compute_epipolar_curve, CurveQuery, EpipolarCurve};
pub use error::{Error, Result};
pub use filter::{
    filter_aspect, filter_direction, filter_quality, FilterConfig, FilterVerdict, RejectedBy,
};
pub use gray::GrayImage;
pub use matching::{
    cost_epipolar, cost_keypoints, cost_size, greedy_assign, total_cost, CurveProvider,
    MatchConfig, MatchCost, MatchedPair,
};
pub use measure::{
    associate_to_ground_truth, axis_angle_deg, evaluate, measure_pair, triangulate, Association,
    EvalSample, EvaluationReport, FishMeasurement, GroundTruthFish, GroundTruthFrame,
};
pub use refine::{ncc, refine_keypoint, Refinement, RefinementConfig};
pub use synth::{
    generate_scene, standard_benchmark, standard_rig, Benchmark, BenchmarkProfile,
    CorruptionModel, SceneConfig, SceneFrame, SyntheticFish, TankVolume,
};
