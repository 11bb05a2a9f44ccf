//! Fish detection data model and JSON-lines file format.
//!
//! Detections normally come from an external pose detector; the synthetic
//! harness writes the same format. One frame per line, each carrying a
//! `schema_version` so incompatible files are rejected instead of
//! misread. The writer is canonical (alphabetical keys, fixed 6-decimal
//! floats) so files are diff-stable and byte-reproducible.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Deserialize;

use crate::camera::Pixel;
use crate::error::{Error, Result};

pub const DETECTION_SCHEMA_VERSION: u32 = 1;

/// The five annotated anatomical reference points, in fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeypointName {
    Mouth,
    Eye,
    DorsalFin,
    VentralFin,
    CaudalFin,
}

impl KeypointName {
    pub const ALL: [KeypointName; 5] = [
        KeypointName::Mouth,
        KeypointName::Eye,
        KeypointName::DorsalFin,
        KeypointName::VentralFin,
        KeypointName::CaudalFin,
    ];

    pub fn index(self) -> usize {
        match self {
            KeypointName::Mouth => 0,
            KeypointName::Eye => 1,
            KeypointName::DorsalFin => 2,
            KeypointName::VentralFin => 3,
            KeypointName::CaudalFin => 4,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            KeypointName::Mouth => "mouth",
            KeypointName::Eye => "eye",
            KeypointName::DorsalFin => "dorsal_fin",
            KeypointName::VentralFin => "ventral_fin",
            KeypointName::CaudalFin => "caudal_fin",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.key() == key)
    }
}

impl fmt::Display for KeypointName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Visibility quality of a detection: how clearly the keypoints can be
/// identified. Ordered so `High > Medium > Low`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QualityClass {
    Low,
    Medium,
    High,
}

impl QualityClass {
    pub fn key(self) -> &'static str {
        match self {
            QualityClass::Low => "low",
            QualityClass::Medium => "medium",
            QualityClass::High => "high",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        match key {
            "low" => Some(QualityClass::Low),
            "medium" => Some(QualityClass::Medium),
            "high" => Some(QualityClass::High),
            _ => None,
        }
    }

    /// Index into a `[low, medium, high]` score array.
    pub fn score_index(self) -> usize {
        match self {
            QualityClass::Low => 0,
            QualityClass::Medium => 1,
            QualityClass::High => 2,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DetectedKeypoint {
    pub position: Pixel,
    pub confidence: f64,
}

/// Axis-aligned box stored center + size, matching the cost-term symbols.
#[derive(Debug, Clone, Copy)]
pub struct BoundingBox {
    pub center: Pixel,
    pub width: f64,
    pub height: f64,
}

impl BoundingBox {
    /// Width divided by height.
    pub fn aspect_ratio(&self) -> f64 {
        self.width / self.height
    }
}

/// One detected or annotated fish instance.
#[derive(Debug, Clone)]
pub struct FishDetection {
    pub id: String,
    pub bbox: BoundingBox,
    /// All five keypoints, indexed by [`KeypointName::index`].
    pub keypoints: [DetectedKeypoint; 5],
    pub quality: QualityClass,
    /// Normalized class scores `[low, medium, high]`, summing to 1.
    pub quality_scores: [f64; 3],
}

impl FishDetection {
    pub fn keypoint(&self, name: KeypointName) -> &DetectedKeypoint {
        &self.keypoints[name.index()]
    }

    /// Mean position of the five keypoints.
    pub fn keypoint_centroid(&self) -> Pixel {
        let (mut u, mut v) = (0.0, 0.0);
        for kp in &self.keypoints {
            u += kp.position.u;
            v += kp.position.v;
        }
        Pixel::new(u / 5.0, v / 5.0)
    }

    pub fn validate(&self) -> Result<()> {
        let subject = format!("detection '{}'", self.id);
        if !(self.bbox.width > 0.0 && self.bbox.height > 0.0) {
            return Err(Error::validation(subject, "bounding box sides must be positive"));
        }
        if !self.bbox.center.is_finite() {
            return Err(Error::validation(subject, "bounding box center must be finite"));
        }
        for name in KeypointName::ALL {
            let kp = self.keypoint(name);
            if !kp.position.is_finite() {
                return Err(Error::validation(subject, format!("keypoint '{name}' must be finite")));
            }
            if !(0.0..=1.0).contains(&kp.confidence) {
                return Err(Error::validation(
                    subject,
                    format!("keypoint '{name}' confidence must lie in [0, 1]"),
                ));
            }
        }
        let sum: f64 = self.quality_scores.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::validation(
                subject,
                format!("quality scores must sum to 1 (got {sum})"),
            ));
        }
        let max = self.quality_scores.iter().cloned().fold(f64::MIN, f64::max);
        if self.quality_scores[self.quality.score_index()] < max {
            return Err(Error::validation(
                subject,
                "quality class must be the argmax of quality_scores",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CameraSide {
    Left,
    Right,
}

impl CameraSide {
    pub fn key(self) -> &'static str {
        match self {
            CameraSide::Left => "left",
            CameraSide::Right => "right",
        }
    }
}

/// All detections of one camera image.
#[derive(Debug, Clone)]
pub struct DetectionFrame {
    pub frame_id: u64,
    pub camera: CameraSide,
    pub image_path: Option<String>,
    pub detections: Vec<FishDetection>,
}

impl DetectionFrame {
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for det in &self.detections {
            if !seen.insert(det.id.as_str()) {
                return Err(Error::validation(
                    format!("frame {}", self.frame_id),
                    format!("duplicate detection id '{}'", det.id),
                ));
            }
            det.validate()?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Reading
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct WireKeypoint {
    u: f64,
    v: f64,
    confidence: f64,
}

#[derive(Deserialize)]
struct WireBbox {
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
}

#[derive(Deserialize)]
struct WireDetection {
    id: String,
    bbox: WireBbox,
    keypoints: BTreeMap<String, WireKeypoint>,
    quality: String,
    quality_scores: [f64; 3],
}

#[derive(Deserialize)]
struct WireFrame {
    schema_version: u32,
    frame_id: u64,
    camera: String,
    #[serde(default)]
    image_path: Option<String>,
    detections: Vec<WireDetection>,
}

fn convert_detection(wire: WireDetection, context: &str) -> Result<FishDetection> {
    let quality = QualityClass::from_key(&wire.quality).ok_or_else(|| {
        Error::validation(
            format!("detection '{}' in {context}", wire.id),
            format!("unknown quality class '{}'", wire.quality),
        )
    })?;

    let placeholder = DetectedKeypoint {
        position: Pixel::new(0.0, 0.0),
        confidence: 0.0,
    };
    let mut keypoints = [placeholder; 5];
    let mut present = [false; 5];
    for (key, kp) in &wire.keypoints {
        let name = KeypointName::from_key(key).ok_or_else(|| {
            Error::validation(
                format!("detection '{}' in {context}", wire.id),
                format!("unknown keypoint name '{key}'"),
            )
        })?;
        keypoints[name.index()] = DetectedKeypoint {
            position: Pixel::new(kp.u, kp.v),
            confidence: kp.confidence,
        };
        present[name.index()] = true;
    }
    for name in KeypointName::ALL {
        if !present[name.index()] {
            return Err(Error::validation(
                format!("detection '{}' in {context}", wire.id),
                format!("missing keypoint '{name}'"),
            ));
        }
    }

    let det = FishDetection {
        id: wire.id,
        bbox: BoundingBox {
            center: Pixel::new(wire.bbox.cx, wire.bbox.cy),
            width: wire.bbox.w,
            height: wire.bbox.h,
        },
        keypoints,
        quality,
        quality_scores: wire.quality_scores,
    };
    det.validate()?;
    Ok(det)
}

/// Read and validate a JSON-lines detection file.
pub fn read_detection_file(path: impl AsRef<Path>) -> Result<Vec<DetectionFrame>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| {
        Error::parse(path.display().to_string(), format!("cannot open file: {e}"))
    })?;
    let mut frames = Vec::new();
    for (number, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let context = format!("{}:{}", path.display(), number + 1);
        let wire: WireFrame =
            serde_json::from_str(&line).map_err(|e| Error::parse(&context, e.to_string()))?;
        if wire.schema_version != DETECTION_SCHEMA_VERSION {
            return Err(Error::parse(
                &context,
                format!(
                    "unsupported schema_version {} (expected {DETECTION_SCHEMA_VERSION})",
                    wire.schema_version
                ),
            ));
        }
        let camera = match wire.camera.as_str() {
            "left" => CameraSide::Left,
            "right" => CameraSide::Right,
            other => {
                return Err(Error::parse(&context, format!("unknown camera side '{other}'")));
            }
        };
        let mut detections = Vec::with_capacity(wire.detections.len());
        for det in wire.detections {
            detections.push(convert_detection(det, &context)?);
        }
        let frame = DetectionFrame {
            frame_id: wire.frame_id,
            camera,
            image_path: wire.image_path,
            detections,
        };
        frame.validate()?;
        frames.push(frame);
    }
    Ok(frames)
}

// ---------------------------------------------------------------------------
// Canonical writing
// ---------------------------------------------------------------------------

/// Fixed-precision float used by every canonical writer in the crate.
pub(crate) fn fmt_f64(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization cannot fail")
}

fn detection_json(det: &FishDetection) -> String {
    let mut kp_entries = Vec::with_capacity(5);
    let mut names = KeypointName::ALL;
    names.sort_by_key(|n| n.key());
    for name in names {
        let kp = det.keypoint(name);
        kp_entries.push(format!(
            "{}:{{\"confidence\":{},\"u\":{},\"v\":{}}}",
            json_string(name.key()),
            fmt_f64(kp.confidence),
            fmt_f64(kp.position.u),
            fmt_f64(kp.position.v),
        ));
    }
    format!(
        "{{\"bbox\":{{\"cx\":{},\"cy\":{},\"h\":{},\"w\":{}}},\"id\":{},\"keypoints\":{{{}}},\"quality\":{},\"quality_scores\":[{},{},{}]}}",
        fmt_f64(det.bbox.center.u),
        fmt_f64(det.bbox.center.v),
        fmt_f64(det.bbox.height),
        fmt_f64(det.bbox.width),
        json_string(&det.id),
        kp_entries.join(","),
        json_string(det.quality.key()),
        fmt_f64(det.quality_scores[0]),
        fmt_f64(det.quality_scores[1]),
        fmt_f64(det.quality_scores[2]),
    )
}

fn frame_json(frame: &DetectionFrame) -> String {
    let detections: Vec<String> = frame.detections.iter().map(detection_json).collect();
    let image_path = match &frame.image_path {
        Some(p) => format!("\"image_path\":{},", json_string(p)),
        None => String::new(),
    };
    format!(
        "{{\"camera\":{},\"detections\":[{}],\"frame_id\":{},{}\"schema_version\":{}}}",
        json_string(frame.camera.key()),
        detections.join(","),
        frame.frame_id,
        image_path,
        DETECTION_SCHEMA_VERSION,
    )
}

/// Serialize frames to the canonical JSON-lines form.
pub fn detection_file_string(frames: &[DetectionFrame]) -> String {
    let mut out = String::new();
    for frame in frames {
        out.push_str(&frame_json(frame));
        out.push('\n');
    }
    out
}

/// Write a canonical JSON-lines detection file.
pub fn write_detection_file(frames: &[DetectionFrame], path: impl AsRef<Path>) -> Result<()> {
    for frame in frames {
        frame.validate()?;
    }
    let mut file = fs::File::create(path)?;
    file.write_all(detection_file_string(frames).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    pub(crate) fn sample_detection(id: &str) -> FishDetection {
        let kp = |u: f64, v: f64| DetectedKeypoint {
            position: Pixel::new(u, v),
            confidence: 0.9,
        };
        FishDetection {
            id: id.to_string(),
            bbox: BoundingBox {
                center: Pixel::new(512.25, 300.5),
                width: 90.0,
                height: 30.0,
            },
            keypoints: [
                kp(550.0, 300.0),
                kp(540.0, 298.0),
                kp(510.0, 290.0),
                kp(505.0, 310.0),
                kp(470.0, 301.0),
            ],
            quality: QualityClass::High,
            quality_scores: [0.05, 0.15, 0.8],
        }
    }

    fn sample_frames() -> Vec<DetectionFrame> {
        vec![
            DetectionFrame {
                frame_id: 0,
                camera: CameraSide::Left,
                image_path: Some("frames/0000_left.pgm".into()),
                detections: vec![sample_detection("f0"), sample_detection("f1")],
            },
            DetectionFrame {
                frame_id: 0,
                camera: CameraSide::Right,
                image_path: None,
                detections: vec![sample_detection("f0")],
            },
        ]
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("detections.jsonl");
        let frames = sample_frames();
        write_detection_file(&frames, &path).unwrap();
        let first = fs::read(&path).unwrap();

        let read_back = read_detection_file(&path).unwrap();
        let path2 = dir.path().join("detections2.jsonl");
        write_detection_file(&read_back, &path2).unwrap();
        let second = fs::read(&path2).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn empty_detection_list_is_valid() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        let frames = vec![DetectionFrame {
            frame_id: 7,
            camera: CameraSide::Left,
            image_path: None,
            detections: vec![],
        }];
        write_detection_file(&frames, &path).unwrap();
        let back = read_detection_file(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert!(back[0].detections.is_empty());
    }

    #[test]
    fn missing_keypoint_is_named() {
        let frames = sample_frames();
        let mut line = frame_json(&frames[1]);
        line = line.replace("\"caudal_fin\":{\"confidence\":0.900000,\"u\":470.000000,\"v\":301.000000},", "");
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        fs::write(&path, format!("{line}\n")).unwrap();
        let err = read_detection_file(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("caudal_fin"), "message was: {msg}");
    }

    #[test]
    fn unknown_schema_version_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("future.jsonl");
        let line = frame_json(&sample_frames()[0]).replace("\"schema_version\":1", "\"schema_version\":99");
        fs::write(&path, format!("{line}\n")).unwrap();
        let err = read_detection_file(&path).unwrap_err();
        assert!(err.to_string().contains("schema_version"));
    }

    #[test]
    fn quality_argmax_mismatch_is_rejected() {
        let mut det = sample_detection("f0");
        det.quality = QualityClass::Low;
        assert!(det.validate().is_err());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let frame = DetectionFrame {
            frame_id: 0,
            camera: CameraSide::Left,
            image_path: None,
            detections: vec![sample_detection("dup"), sample_detection("dup")],
        };
        assert!(frame.validate().is_err());
    }

    #[test]
    fn golden_single_detection_frame() {
        let frame = DetectionFrame {
            frame_id: 3,
            camera: CameraSide::Right,
            image_path: None,
            detections: vec![sample_detection("f2")],
        };
        let expected = concat!(
            "{\"camera\":\"right\",\"detections\":[",
            "{\"bbox\":{\"cx\":512.250000,\"cy\":300.500000,\"h\":30.000000,\"w\":90.000000},",
            "\"id\":\"f2\",\"keypoints\":{",
            "\"caudal_fin\":{\"confidence\":0.900000,\"u\":470.000000,\"v\":301.000000},",
            "\"dorsal_fin\":{\"confidence\":0.900000,\"u\":510.000000,\"v\":290.000000},",
            "\"eye\":{\"confidence\":0.900000,\"u\":540.000000,\"v\":298.000000},",
            "\"mouth\":{\"confidence\":0.900000,\"u\":550.000000,\"v\":300.000000},",
            "\"ventral_fin\":{\"confidence\":0.900000,\"u\":505.000000,\"v\":310.000000}},",
            "\"quality\":\"high\",\"quality_scores\":[0.050000,0.150000,0.800000]}",
            "],\"frame_id\":3,\"schema_version\":1}\n",
        );
        assert_eq!(detection_file_string(&[frame]), expected);
    }
}
