//! Coordinate systems and the world → camera → image → pixel projection.
//!
//! World (WCS) and camera (CCS) coordinates are metres, image-plane (ICS)
//! coordinates are millimetres and pixel (PCS) coordinates are pixels. The
//! rotation `R = Rx(θx)·Ry(θy)·Rz(θz)` maps world directions into the camera
//! frame; the camera looks along its own `+Z` axis.

use core::f64::consts::{FRAC_PI_2, TAU};
use core::ops::Mul;

use crate::error::{Error, Result};

/// Depths with `|Z|` under this value are treated as lying in the camera plane.
pub const DEPTH_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl WorldPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn horizontal_distance_sq(&self, other: &WorldPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Image-plane coordinates in millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePoint {
    pub x: f64,
    pub y: f64,
}

/// Pixel coordinates, continuous or quantized.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// Counter-clockwise rotation angles from WCS to CCS, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RotationAngles {
    pub theta_x: f64,
    pub theta_y: f64,
    pub theta_z: f64,
}

impl RotationAngles {
    /// Validates `θx, θy ∈ (−π/2, π/2)` and wraps `θz` into `[0, 2π)`.
    pub fn new(theta_x: f64, theta_y: f64, theta_z: f64) -> Result<Self> {
        let tilt_ok = |t: f64| t.is_finite() && t > -FRAC_PI_2 && t < FRAC_PI_2;
        if !tilt_ok(theta_x) || !tilt_ok(theta_y) {
            return Err(Error::InvalidParameter("tilt angles must lie in (-pi/2, pi/2)"));
        }
        if !theta_z.is_finite() {
            return Err(Error::InvalidParameter("theta_z must be finite"));
        }
        Ok(Self { theta_x, theta_y, theta_z: wrap_turn(theta_z) })
    }

    pub fn from_degrees(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(x.to_radians(), y.to_radians(), z.to_radians())
    }

    /// Receiver plane parallel to the LED plane, rotated by `theta_z` about the vertical.
    pub fn horizontal(theta_z: f64) -> Self {
        Self { theta_x: 0.0, theta_y: 0.0, theta_z: wrap_turn(theta_z) }
    }

    pub const fn zero() -> Self {
        Self { theta_x: 0.0, theta_y: 0.0, theta_z: 0.0 }
    }

    pub fn is_parallel(&self) -> bool {
        self.theta_x == 0.0 && self.theta_y == 0.0
    }

    pub fn matrix(&self) -> RotationMatrix {
        rotation_matrix(self)
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_turn(t: f64) -> f64 {
    let r = libm::fmod(t, TAU);
    let r = if r < 0.0 { r + TAU } else { r };
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Row-major 3×3 rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(pub [[f64; 3]; 3]);

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix =
        RotationMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn about_x(t: f64) -> Self {
        let (s, c) = libm::sincos(t);
        RotationMatrix([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    }

    pub fn about_y(t: f64) -> Self {
        let (s, c) = libm::sincos(t);
        RotationMatrix([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    }

    pub fn about_z(t: f64) -> Self {
        let (s, c) = libm::sincos(t);
        RotationMatrix([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Entry `R_{row,col}` with zero-based indices.
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.0[row][col]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        RotationMatrix([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        RotationMatrix(out)
    }
}

/// `R = Rx(θx)·Ry(θy)·Rz(θz)`.
pub fn rotation_matrix(angles: &RotationAngles) -> RotationMatrix {
    RotationMatrix::about_x(angles.theta_x)
        * RotationMatrix::about_y(angles.theta_y)
        * RotationMatrix::about_z(angles.theta_z)
}

/// Pixel quantization rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Quantization {
    /// Centre of the containing pixel, `floor(x) + 0.5`.
    #[default]
    Half,
    /// Round to the nearest integer.
    Integer,
}

impl Quantization {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Quantization::Half => libm::floor(x) + 0.5,
            Quantization::Integer => libm::round(x),
        }
    }
}

/// Relative orientation of the image axes (x, y) and the pixel axes (u, v).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PixelAxes {
    /// `u` runs against `x`: `(u − u0)·s = −f·X/Z`. This is the form the
    /// positioning equations are written in.
    #[default]
    Opposite,
    /// `u` runs along `x`: `(u − u0)·s = f·X/Z`.
    Same,
}

impl PixelAxes {
    /// `+1` when pixel axes follow the image axes, `−1` otherwise.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            PixelAxes::Same => 1.0,
            PixelAxes::Opposite => -1.0,
        }
    }
}

/// Pinhole camera parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CameraIntrinsics {
    /// Focal length, mm.
    pub focal_length: f64,
    /// Pixel pitch along x, mm/pixel.
    pub pixel_size_x: f64,
    /// Pixel pitch along y, mm/pixel.
    pub pixel_size_y: f64,
    pub u0: f64,
    pub v0: f64,
    pub width: u32,
    pub height: u32,
    /// Full cone angle, radians.
    pub fov: f64,
    pub beta: f64,
    pub quantization: Quantization,
    pub axes: PixelAxes,
}

impl Default for CameraIntrinsics {
    /// Default smartphone camera: 2.4 mm lens,
    /// 1.675 µm pixels, 2560×1536 sensor, 90° capture cone.
    fn default() -> Self {
        Self {
            focal_length: 2.4,
            pixel_size_x: 1.675e-3,
            pixel_size_y: 1.675e-3,
            u0: 1305.0,
            v0: 774.0,
            width: 2560,
            height: 1536,
            fov: core::f64::consts::FRAC_PI_2,
            beta: crate::DEFAULT_BETA,
            quantization: Quantization::Half,
            axes: PixelAxes::Opposite,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        if !(self.focal_length > 0.0) {
            return Err(Error::InvalidParameter("focal length must be positive"));
        }
        if !(self.pixel_size_x > 0.0 && self.pixel_size_y > 0.0) {
            return Err(Error::InvalidParameter("pixel size must be positive"));
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidParameter("beta must be positive"));
        }
        if !(self.fov > 0.0 && self.fov < core::f64::consts::PI) {
            return Err(Error::InvalidParameter("fov must lie in (0, pi)"));
        }
        Ok(())
    }

    /// Focal length expressed in pixels, `f / s_x`.
    pub fn focal_px(&self) -> f64 {
        self.focal_length / self.pixel_size_x
    }

    pub fn half_fov_tan(&self) -> f64 {
        libm::tan(0.5 * self.fov)
    }

    /// Same optics with both pixel pitches multiplied by `scale`.
    pub fn with_pixel_scale(&self, scale: f64) -> Self {
        Self {
            pixel_size_x: self.pixel_size_x * scale,
            pixel_size_y: self.pixel_size_y * scale,
            ..*self
        }
    }

    /// Unit pixel pitch with the given focal length (in pixel units).
    pub fn with_unit_pixels(&self, focal: f64) -> Self {
        Self { focal_length: focal, pixel_size_x: 1.0, pixel_size_y: 1.0, ..*self }
    }

    pub fn contains(&self, p: &PixelPoint) -> bool {
        p.u >= 0.0 && p.v >= 0.0 && p.u < self.width as f64 && p.v < self.height as f64
    }
}

/// Camera centre in world coordinates plus its orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CameraPose {
    pub center: WorldPoint,
    pub angles: RotationAngles,
}

impl CameraPose {
    pub const fn new(center: WorldPoint, angles: RotationAngles) -> Self {
        Self { center, angles }
    }

    pub const fn horizontal(center: WorldPoint) -> Self {
        Self { center, angles: RotationAngles::zero() }
    }
}

/// `R·(p − c)`.
pub fn world_to_camera(p: &WorldPoint, pose: &CameraPose) -> CameraPoint {
    world_to_camera_with(p, &pose.center, &pose.angles.matrix())
}

pub(crate) fn world_to_camera_with(p: &WorldPoint, center: &WorldPoint, r: &RotationMatrix) -> CameraPoint {
    let [x, y, z] = r.apply([p.x - center.x, p.y - center.y, p.z - center.z]);
    CameraPoint { x, y, z }
}

/// Inverse of [`world_to_camera`]: `Rᵀ·p + c`.
pub fn camera_to_world(p: &CameraPoint, pose: &CameraPose) -> WorldPoint {
    let [x, y, z] = pose.angles.matrix().transpose().apply([p.x, p.y, p.z]);
    WorldPoint::new(x + pose.center.x, y + pose.center.y, z + pose.center.z)
}

/// Perspective division onto the image plane: `(f·X/Z, f·Y/Z)`.
pub fn camera_to_image(p: &CameraPoint, intr: &CameraIntrinsics) -> Result<ImagePoint> {
    if p.z.abs() < DEPTH_EPSILON {
        return Err(Error::DegenerateDepth);
    }
    Ok(ImagePoint { x: intr.focal_length * p.x / p.z, y: intr.focal_length * p.y / p.z })
}

/// Image plane to pixel grid, with optional quantization.
pub fn image_to_pixel(p: &ImagePoint, intr: &CameraIntrinsics, quantize: bool) -> PixelPoint {
    let sign = intr.axes.sign();
    let u = intr.u0 + sign * p.x / intr.pixel_size_x;
    let v = intr.v0 + sign * p.y / intr.pixel_size_y;
    if quantize {
        PixelPoint { u: intr.quantization.apply(u), v: intr.quantization.apply(v) }
    } else {
        PixelPoint { u, v }
    }
}

/// Full projection of an LED into the pixel grid of a posed camera.
pub fn project_world_to_pixel(
    led: &WorldPoint,
    pose: &CameraPose,
    intr: &CameraIntrinsics,
    quantize: bool,
) -> Result<PixelPoint> {
    project_with(led, &pose.center, &pose.angles.matrix(), intr, quantize)
}

pub(crate) fn project_with(
    led: &WorldPoint,
    center: &WorldPoint,
    r: &RotationMatrix,
    intr: &CameraIntrinsics,
    quantize: bool,
) -> Result<PixelPoint> {
    let cam = world_to_camera_with(led, center, r);
    if cam.z.abs() < DEPTH_EPSILON {
        return Err(Error::DegenerateDepth);
    }
    if cam.z < 0.0 {
        return Err(Error::BehindCamera);
    }
    let img = camera_to_image(&cam, intr)?;
    Ok(image_to_pixel(&img, intr, quantize))
}

/// Residuals of the two projection constraints
/// `(u − u0)·s_x·A + f·B = 0` and `(v − v0)·s_y·A + f·C = 0`, normalized by `A`
/// and written for the configured pixel-axis orientation.
pub fn projection_residual(
    led: &WorldPoint,
    pixel: &PixelPoint,
    pose: &CameraPose,
    intr: &CameraIntrinsics,
) -> [f64; 2] {
    let r = pose.angles.matrix();
    let d = [led.x - pose.center.x, led.y - pose.center.y, led.z - pose.center.z];
    let [b, c, a] = r.apply(d);
    let sign = intr.axes.sign();
    [
        (pixel.u - intr.u0) * intr.pixel_size_x - sign * intr.focal_length * b / a,
        (pixel.v - intr.v0) * intr.pixel_size_y - sign * intr.focal_length * c / a,
    ]
}
