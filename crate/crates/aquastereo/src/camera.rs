//! Flat-port refractive camera model.
//!
//! A pinhole camera looks through a planar air-glass-water interface stack
//! (the "port"). Viewing rays refract twice and no longer meet in a single
//! center; they intersect a common axis through the camera center along the
//! port normal. This module provides the two primitive mappings the rest of
//! the pipeline builds on:
//!
//! - [`FlatPortCamera::trace_pixel_ray`]: pixel → ray in the water (exact).
//! - [`FlatPortCamera::forward_project`]: 3D water point → pixel (iterative).
//!
//! # Coordinate conventions
//!
//! - The **rig frame** is the left camera frame; all 3D quantities
//!   (port normal, water rays, triangulated points) live there, in mm.
//! - [`CameraPose`] maps rig-frame points into the camera frame:
//!   `X_cam = R · X_rig + t`.
//! - Pixels are **undistorted** image coordinates. Radial distortion
//!   `(k1, k2)` is applied only by [`PinholeIntrinsics::distort_pixel`] /
//!   [`PinholeIntrinsics::undistort_pixel`] when converting from or to raw
//!   detector coordinates; everything downstream works undistorted.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Image position in undistorted pixel coordinates. May lie outside the
/// sensor bounds; projection results are never clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub fn new(u: f64, v: f64) -> Self {
        Pixel { u, v }
    }

    pub fn distance(&self, other: &Pixel) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

/// Pinhole intrinsics with optional two-term radial distortion.
#[derive(Debug, Clone)]
pub struct PinholeIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Radial distortion `(k1, k2)`; `None` means an ideal lens.
    pub distortion: Option<(f64, f64)>,
}

const UNDISTORT_MAX_ITERATIONS: usize = 30;
const UNDISTORT_TOLERANCE: f64 = 1e-12;

impl PinholeIntrinsics {
    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::validation("intrinsics", "fx and fy must be positive"));
        }
        if !(self.cx > 0.0 && self.cx < self.width as f64) {
            return Err(Error::validation("intrinsics", "cx must lie inside the image"));
        }
        if !(self.cy > 0.0 && self.cy < self.height as f64) {
            return Err(Error::validation("intrinsics", "cy must lie inside the image"));
        }
        Ok(())
    }

    /// Normalized image coordinates of an undistorted pixel.
    fn normalized(&self, px: Pixel) -> (f64, f64) {
        ((px.u - self.cx) / self.fx, (px.v - self.cy) / self.fy)
    }

    /// Undistorted pixel for normalized image coordinates.
    fn pixel(&self, x: f64, y: f64) -> Pixel {
        Pixel::new(self.fx * x + self.cx, self.fy * y + self.cy)
    }

    fn distortion_factor(&self, x: f64, y: f64) -> f64 {
        match self.distortion {
            None => 1.0,
            Some((k1, k2)) => {
                let r2 = x * x + y * y;
                1.0 + k1 * r2 + k2 * r2 * r2
            }
        }
    }

    /// Map an undistorted pixel to raw detector coordinates.
    pub fn distort_pixel(&self, undistorted: Pixel) -> Pixel {
        let (x, y) = self.normalized(undistorted);
        let f = self.distortion_factor(x, y);
        self.pixel(f * x, f * y)
    }

    /// Map a raw detector pixel to undistorted coordinates (fixed-point
    /// inversion of the radial model).
    pub fn undistort_pixel(&self, raw: Pixel) -> Pixel {
        if self.distortion.is_none() {
            return raw;
        }
        let (dx, dy) = self.normalized(raw);
        let (mut x, mut y) = (dx, dy);
        for _ in 0..UNDISTORT_MAX_ITERATIONS {
            let f = self.distortion_factor(x, y);
            let (nx, ny) = (dx / f, dy / f);
            let step = (nx - x).hypot(ny - y);
            x = nx;
            y = ny;
            if step < UNDISTORT_TOLERANCE {
                break;
            }
        }
        self.pixel(x, y)
    }

    pub fn contains(&self, px: Pixel) -> bool {
        px.u >= 0.0 && px.u < self.width as f64 && px.v >= 0.0 && px.v < self.height as f64
    }
}

/// Rigid transform mapping rig-frame points to camera-frame points.
#[derive(Debug, Clone)]
pub struct CameraPose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl CameraPose {
    pub fn identity() -> Self {
        CameraPose {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let gram = self.rotation.transpose() * self.rotation;
        let dev = (gram - Mat3::identity()).abs().max();
        if dev > 1e-9 {
            return Err(Error::validation(
                "pose",
                format!("rotation is not orthonormal (|RᵀR − I| = {dev:e})"),
            ));
        }
        let det = self.rotation.determinant();
        if (det - 1.0).abs() > 1e-9 {
            return Err(Error::validation(
                "pose",
                format!("rotation determinant is {det}, expected +1"),
            ));
        }
        Ok(())
    }

    /// Camera center expressed in the rig frame: `-Rᵀ·t`.
    pub fn center(&self) -> Vec3 {
        -(self.rotation.transpose() * self.translation)
    }
}

/// Planar air-glass-water interface stack in front of one camera.
///
/// The normal points from the camera toward the water and is shared by both
/// cameras of a rig (a single aquarium pane); only `d_glass` is per camera.
#[derive(Debug, Clone)]
pub struct RefractivePort {
    pub n_air: f64,
    pub n_glass: f64,
    pub n_water: f64,
    /// Distance from the camera center to the inner (air-side) glass plane,
    /// measured along the port normal, mm.
    pub d_glass: f64,
    /// Glass thickness, mm.
    pub t_glass: f64,
    /// Unit port normal in the rig frame, camera → water.
    pub normal: Vec3,
}

impl RefractivePort {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("n_air", self.n_air),
            ("n_glass", self.n_glass),
            ("n_water", self.n_water),
        ] {
            if !n.is_finite() || n < 1.0 {
                return Err(Error::validation("port", format!("{name} must be ≥ 1, got {n}")));
            }
        }
        if !self.d_glass.is_finite() || self.d_glass <= 0.0 {
            return Err(Error::validation("port", "d_glass must be positive"));
        }
        if !self.t_glass.is_finite() || self.t_glass <= 0.0 {
            return Err(Error::validation("port", "t_glass must be positive"));
        }
        if (self.normal.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::validation("port", "normal must be a unit vector"));
        }
        Ok(())
    }
}

/// A viewing ray on the water side of the port, in the rig frame.
///
/// `origin` lies on the outer (water-side) glass plane. The port normal is
/// carried along so depths measured along it need no camera handle.
#[derive(Debug, Clone, Copy)]
pub struct WaterRay {
    pub origin: Vec3,
    pub direction: Vec3,
    pub port_normal: Vec3,
}

impl WaterRay {
    /// Point at `depth` mm along the port normal beyond the outer glass
    /// plane: `(P − origin)·normal = depth` and `P − origin ∥ direction`.
    pub fn point_at_depth(&self, depth: f64) -> Vec3 {
        let along = self.direction.dot(&self.port_normal);
        self.origin + self.direction * (depth / along)
    }
}

/// Refract a unit direction at a planar interface.
///
/// `surface_normal` must be oriented along the propagation direction
/// (`incident·normal > 0`). Conserves `n·sinθ` and keeps the refracted
/// direction in the plane spanned by the incident ray and the normal.
pub fn refract_direction(incident: Vec3, surface_normal: Vec3, n1: f64, n2: f64) -> Result<Vec3> {
    if n1 == n2 {
        return Ok(incident);
    }
    let cos1 = incident.dot(&surface_normal);
    let tangential = incident - surface_normal * cos1;
    let eta = n1 / n2;
    let sin2 = eta * tangential.norm();
    if sin2 > 1.0 {
        return Err(Error::TotalInternalReflection { ratio: sin2 });
    }
    let cos2 = (1.0 - sin2 * sin2).max(0.0).sqrt();
    Ok((surface_normal * cos2 + tangential * eta).normalize())
}

/// Convergence parameters for the iterative forward projection.
#[derive(Debug, Clone, Copy)]
pub struct ProjectionSolver {
    pub max_iterations: usize,
    /// Radial miss distance at the target depth plane, mm.
    pub tolerance_mm: f64,
}

impl Default for ProjectionSolver {
    fn default() -> Self {
        ProjectionSolver {
            max_iterations: 50,
            tolerance_mm: 1e-9,
        }
    }
}

/// A pinhole camera behind a flat refractive port.
#[derive(Debug, Clone)]
pub struct FlatPortCamera {
    pub intrinsics: PinholeIntrinsics,
    pub pose: CameraPose,
    pub port: RefractivePort,
}

impl FlatPortCamera {
    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        self.pose.validate()?;
        self.port.validate()
    }

    /// Camera center in the rig frame.
    pub fn center(&self) -> Vec3 {
        self.pose.center()
    }

    /// Unit viewing direction of the camera in the rig frame (`Rᵀ·e_z`).
    pub fn optical_axis(&self) -> Vec3 {
        self.pose.rotation.transpose() * Vec3::new(0.0, 0.0, 1.0)
    }

    /// Back-project an undistorted pixel into a unit rig-frame direction.
    fn pixel_direction(&self, pixel: Pixel) -> Vec3 {
        let (x, y) = self.intrinsics.normalized(pixel);
        let cam_dir = Vec3::new(x, y, 1.0).normalize();
        self.pose.rotation.transpose() * cam_dir
    }

    /// Project a unit rig-frame direction from the camera center to a pixel.
    fn direction_pixel(&self, dir: Vec3) -> Pixel {
        let d = self.pose.rotation * dir;
        self.intrinsics.pixel(d.x / d.z, d.y / d.z)
    }

    /// Trace the viewing ray of `pixel` through both interfaces into the
    /// water. The returned ray starts on the outer glass plane.
    pub fn trace_pixel_ray(&self, pixel: Pixel) -> Result<WaterRay> {
        let center = self.center();
        let normal = self.port.normal;
        let dir_air = self.pixel_direction(pixel);

        let along = dir_air.dot(&normal);
        if along <= 1e-12 {
            return Err(Error::RayParallelToPort);
        }
        let inner_hit = center + dir_air * (self.port.d_glass / along);

        let dir_glass = refract_direction(dir_air, normal, self.port.n_air, self.port.n_glass)?;
        let outer_hit = inner_hit + dir_glass * (self.port.t_glass / dir_glass.dot(&normal));

        let dir_water = refract_direction(dir_glass, normal, self.port.n_glass, self.port.n_water)?;

        Ok(WaterRay {
            origin: outer_hit,
            direction: dir_water,
            port_normal: normal,
        })
    }

    /// Project a rig-frame point on the water side of the port to a pixel,
    /// using the default solver settings.
    pub fn forward_project(&self, point: Vec3) -> Result<Pixel> {
        self.forward_project_with(point, &ProjectionSolver::default())
    }

    /// Forward projection with explicit convergence parameters.
    ///
    /// The flat port is rotationally symmetric about the axis through the
    /// camera center along the port normal, so the search for the refraction
    /// point on the inner glass plane reduces exactly to one radial unknown.
    /// A safeguarded Newton iteration (bisection fallback on a maintained
    /// bracket) drives the radial miss at the target depth below tolerance.
    pub fn forward_project_with(&self, point: Vec3, solver: &ProjectionSolver) -> Result<Pixel> {
        let center = self.center();
        let normal = self.port.normal;
        let rel = point - center;

        let axial = rel.dot(&normal);
        let behind = axial - (self.port.d_glass + self.port.t_glass);
        if behind <= 0.0 {
            return Err(Error::PointBehindPort { depth_mm: behind });
        }

        let radial_vec = rel - normal * axial;
        let target_radius = radial_vec.norm();

        // On-axis point: the undeviated principal ray.
        if target_radius < 1e-12 * axial.max(1.0) {
            return Ok(self.direction_pixel(normal));
        }
        let radial_dir = radial_vec / target_radius;

        // Radial coordinate reached at the target depth by the ray that
        // crosses the inner glass plane at radius r.
        let reach = |r: f64| -> Result<f64> {
            let inner = center + normal * self.port.d_glass + radial_dir * r;
            let dir_air = (inner - center).normalize();
            let dir_glass =
                refract_direction(dir_air, normal, self.port.n_air, self.port.n_glass)?;
            let outer = inner + dir_glass * (self.port.t_glass / dir_glass.dot(&normal));
            let dir_water =
                refract_direction(dir_glass, normal, self.port.n_glass, self.port.n_water)?;
            let s = (axial - (self.port.d_glass + self.port.t_glass)) / dir_water.dot(&normal);
            let hit = outer + dir_water * s;
            Ok((hit - center).dot(&radial_dir))
        };

        // reach(0) = 0 and reach(target_radius) > target_radius: the root is
        // bracketed by [0, target_radius].
        let mut lo = 0.0_f64;
        let mut hi = target_radius;
        let mut r = target_radius * self.port.d_glass / axial;
        let mut residual = f64::INFINITY;

        for iteration in 0..solver.max_iterations {
            let miss = reach(r)? - target_radius;
            residual = miss.abs();
            if residual < solver.tolerance_mm {
                let inner = center + normal * self.port.d_glass + radial_dir * r;
                return Ok(self.direction_pixel((inner - center).normalize()));
            }
            if miss < 0.0 {
                lo = r;
            } else {
                hi = r;
            }

            // Newton step on a central-difference slope, clipped to the
            // bracket; bisect whenever the step is unusable.
            let h = (1e-7 * target_radius).max(1e-9);
            let slope = (reach(r + h)? - reach(r - h)?) / (2.0 * h);
            let newton = r - miss / slope;
            r = if slope.is_finite() && newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let _ = iteration;
        }

        Err(Error::NoConvergence {
            iterations: solver.max_iterations,
            residual,
        })
    }
}
