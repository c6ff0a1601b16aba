//! Measured pixel coordinates of three LEDs under eight headings of a
//! horizontal smartphone camera.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vlp_core::{CameraIntrinsics, PixelPoint};

use crate::error::{CliError, CliResult};

const SHIPPED: &str = include_str!("../fixtures/table1_pixels.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measurement {
    pub theta_z_deg: f64,
    pub pixels: Vec<[f64; 2]>,
}

impl Measurement {
    pub fn pixel_points(&self) -> Vec<PixelPoint> {
        self.pixels.iter().map(|p| PixelPoint::new(p[0], p[1])).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationFixture {
    pub resolution: [u32; 2],
    pub focal_length_mm: f64,
    pub pixel_size_mm: f64,
    pub depth_m: f64,
    pub principal_point: [f64; 2],
    pub measurements: Vec<Measurement>,
}

impl RotationFixture {
    pub fn shipped() -> Self {
        serde_json::from_str(SHIPPED).expect("shipped fixture parses")
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|_| CliError::FixtureMissing(path.to_path_buf()))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Camera parameters of the measurement, other fields from `base`.
    pub fn intrinsics(&self, base: &CameraIntrinsics) -> CameraIntrinsics {
        CameraIntrinsics {
            focal_length: self.focal_length_mm,
            pixel_size_x: self.pixel_size_mm,
            pixel_size_y: self.pixel_size_mm,
            u0: self.principal_point[0],
            v0: self.principal_point[1],
            width: self.resolution[0],
            height: self.resolution[1],
            ..*base
        }
    }
}
