//! Rig calibration file: two pinhole cameras sharing one refractive port.
//!
//! JSON layout:
//!
//! ```json
//! {
//!   "cameras": {
//!     "left":  {"fx":..., "fy":..., "cx":..., "cy":..., "width":..., "height":...,
//!               "k1":0.0, "k2":0.0, "rotation":[...9 row-major...], "translation":[...3, mm...]},
//!     "right": { ... }
//!   },
//!   "port": {"n_air":1.0, "n_glass":1.5, "n_water":1.33,
//!            "d_glass_mm":{"left":40.0, "right":40.0}, "t_glass_mm":8.0,
//!            "normal":[0.0, 0.0, 1.0]},
//!   "tank_depth_mm": 360.0
//! }
//! ```
//!
//! The rig frame is the left camera frame; rotations map rig points into
//! the camera frame. `t_glass_mm` has no default on purpose: a silently
//! assumed glass thickness would bias every measurement.

use std::path::Path;

use serde::Deserialize;

use crate::camera::{CameraPose, FlatPortCamera, Mat3, PinholeIntrinsics, RefractivePort, Vec3};
use crate::epipolar::{DEFAULT_MAX_DEPTH_MM, DEFAULT_MIN_DEPTH_MM};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RigCalibration {
    pub left: FlatPortCamera,
    pub right: FlatPortCamera,
    /// Water depth covered by the tank, mm; bounds the default epipolar
    /// sampling range.
    pub tank_depth_mm: Option<f64>,
}

#[derive(Deserialize)]
struct WireCamera {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
    #[serde(default)]
    k1: f64,
    #[serde(default)]
    k2: f64,
    rotation: [f64; 9],
    translation: [f64; 3],
}

#[derive(Deserialize)]
struct WireDGlass {
    left: f64,
    right: f64,
}

#[derive(Deserialize)]
struct WirePort {
    n_air: f64,
    n_glass: f64,
    n_water: f64,
    d_glass_mm: WireDGlass,
    t_glass_mm: f64,
    normal: [f64; 3],
}

#[derive(Deserialize)]
struct WireCameras {
    left: WireCamera,
    right: WireCamera,
}

#[derive(Deserialize)]
struct WireRig {
    cameras: WireCameras,
    port: WirePort,
    #[serde(default)]
    tank_depth_mm: Option<f64>,
}

fn build_camera(wire: &WireCamera, port: &WirePort, d_glass: f64) -> FlatPortCamera {
    let r = &wire.rotation;
    FlatPortCamera {
        intrinsics: PinholeIntrinsics {
            fx: wire.fx,
            fy: wire.fy,
            cx: wire.cx,
            cy: wire.cy,
            width: wire.width,
            height: wire.height,
            distortion: if wire.k1 == 0.0 && wire.k2 == 0.0 {
                None
            } else {
                Some((wire.k1, wire.k2))
            },
        },
        pose: CameraPose {
            rotation: Mat3::new(r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8]),
            translation: Vec3::new(wire.translation[0], wire.translation[1], wire.translation[2]),
        },
        port: RefractivePort {
            n_air: port.n_air,
            n_glass: port.n_glass,
            n_water: port.n_water,
            d_glass,
            t_glass: port.t_glass_mm,
            normal: Vec3::new(port.normal[0], port.normal[1], port.normal[2]),
        },
    }
}

impl RigCalibration {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let wire: WireRig = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;

        let rig = RigCalibration {
            left: build_camera(&wire.cameras.left, &wire.port, wire.port.d_glass_mm.left),
            right: build_camera(&wire.cameras.right, &wire.port, wire.port.d_glass_mm.right),
            tank_depth_mm: wire.tank_depth_mm,
        };
        rig.left.validate()?;
        rig.right.validate()?;
        if let Some(depth) = rig.tank_depth_mm {
            if !depth.is_finite() || depth <= 0.0 {
                return Err(Error::validation("rig", "tank_depth_mm must be positive"));
            }
        }
        Ok(rig)
    }

    /// Depth range used when none is configured explicitly.
    pub fn default_depth_range(&self) -> (f64, f64) {
        (
            DEFAULT_MIN_DEPTH_MM,
            self.tank_depth_mm.unwrap_or(DEFAULT_MAX_DEPTH_MM),
        )
    }

    pub fn to_json_string(&self) -> String {
        fn mm(x: f64) -> String {
            let s = format!("{x:.9}");
            if s == "-0.000000000" {
                "0.000000000".into()
            } else {
                s
            }
        }
        fn camera_json(cam: &FlatPortCamera) -> String {
            let i = &cam.intrinsics;
            let (k1, k2) = i.distortion.unwrap_or((0.0, 0.0));
            let r = &cam.pose.rotation;
            let rotation: Vec<String> = (0..3)
                .flat_map(|row| (0..3).map(move |col| (row, col)))
                .map(|(row, col)| mm(r[(row, col)]))
                .collect();
            let t = &cam.pose.translation;
            format!(
                "{{\"cx\":{},\"cy\":{},\"fx\":{},\"fy\":{},\"height\":{},\"k1\":{},\"k2\":{},\"rotation\":[{}],\"translation\":[{},{},{}],\"width\":{}}}",
                mm(i.cx), mm(i.cy), mm(i.fx), mm(i.fy), i.height,
                mm(k1), mm(k2),
                rotation.join(","),
                mm(t.x), mm(t.y), mm(t.z),
                i.width,
            )
        }
        let port = &self.left.port;
        let tank = match self.tank_depth_mm {
            Some(d) => format!(",\"tank_depth_mm\":{}", mm(d)),
            None => String::new(),
        };
        format!(
            "{{\"cameras\":{{\"left\":{},\"right\":{}}},\"port\":{{\"d_glass_mm\":{{\"left\":{},\"right\":{}}},\"n_air\":{},\"n_glass\":{},\"n_water\":{},\"normal\":[{},{},{}],\"t_glass_mm\":{}}}{}}}\n",
            camera_json(&self.left),
            camera_json(&self.right),
            mm(self.left.port.d_glass),
            mm(self.right.port.d_glass),
            mm(port.n_air),
            mm(port.n_glass),
            mm(port.n_water),
            mm(port.normal.x),
            mm(port.normal.y),
            mm(port.normal.z),
            mm(port.t_glass),
            tank,
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{standard_rig, STANDARD_TANK_DEPTH_MM};
    use tempfile::tempdir;

    fn standard_calibration() -> RigCalibration {
        let (left, right) = standard_rig();
        RigCalibration {
            left,
            right,
            tank_depth_mm: Some(STANDARD_TANK_DEPTH_MM),
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rig.json");
        let rig = standard_calibration();
        rig.save(&path).unwrap();
        let loaded = RigCalibration::load(&path).unwrap();

        assert_eq!(loaded.left.intrinsics.fx, rig.left.intrinsics.fx);
        assert_eq!(loaded.right.pose.translation, rig.right.pose.translation);
        assert_eq!(loaded.left.port.t_glass, rig.left.port.t_glass);
        assert_eq!(loaded.tank_depth_mm, rig.tank_depth_mm);

        // Canonical writer is stable under a round trip.
        let again = dir.path().join("rig2.json");
        loaded.save(&again).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }

    #[test]
    fn missing_glass_thickness_is_an_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rig.json");
        let text = standard_calibration().to_json_string().replace("\"t_glass_mm\":8.000000000", "\"ignored\":0");
        std::fs::write(&path, text).unwrap();
        let err = RigCalibration::load(&path).unwrap_err();
        assert!(err.to_string().contains("t_glass_mm"), "got: {err}");
    }

    #[test]
    fn invalid_rotation_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rig.json");
        let text = standard_calibration()
            .to_json_string()
            .replacen("\"rotation\":[1.000000000", "\"rotation\":[1.700000000", 1);
        std::fs::write(&path, text).unwrap();
        assert!(RigCalibration::load(&path).is_err());
    }

    #[test]
    fn default_depth_range_uses_tank_depth() {
        let rig = standard_calibration();
        assert_eq!(rig.default_depth_range(), (5.0, STANDARD_TANK_DEPTH_MM));
    }
}
