//! Experiment configuration: one JSON document, every field optional, with
//! command-line overrides on top.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vlp_core::layout::{inclusive_range, receiver_grid};
use vlp_core::npem::AngleGrid;
use vlp_core::optimizer::{GaConfig, SpacingSearch};
use vlp_core::simulator::{linspace, ZSearch};
use vlp_core::{CameraIntrinsics, LayoutKind, MetricConvention, Quantization, RoomSpec, WorldPoint};

use crate::error::{CliError, CliResult};

/// Rectangular receiver grid with inclusive endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub step: f64,
}

impl GridSpec {
    pub fn points(&self, z: f64) -> CliResult<Vec<WorldPoint>> {
        Ok(receiver_grid((self.x[0], self.x[1]), (self.y[0], self.y[1]), self.step, z)?)
    }

    pub fn xy(&self) -> CliResult<Vec<(f64, f64)>> {
        let xs = inclusive_range(self.x[0], self.x[1], self.step)?;
        let ys = inclusive_range(self.y[0], self.y[1], self.step)?;
        Ok(xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect())
    }

    /// Largest distance from the origin to a grid corner.
    pub fn extent(&self) -> f64 {
        let ax = self.x[0].abs().max(self.x[1].abs());
        let ay = self.y[0].abs().max(self.y[1].abs());
        ax.hypot(ay)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationConfig {
    pub center: [f64; 3],
    /// Grid steps for θx, θy, θz in degrees.
    pub step_deg: [f64; 3],
}

impl Default for RotationConfig {
    fn default() -> Self {
        Self { center: [2.5, 2.5, 1.0], step_deg: [10.0, 10.0, 50.0] }
    }
}

impl RotationConfig {
    pub fn grid(&self) -> CliResult<AngleGrid> {
        let [x, y, z] = self.step_deg;
        Ok(AngleGrid::uniform(x.to_radians(), y.to_radians(), z.to_radians())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Pixel-size multipliers `[first, last]`, evenly spaced.
    pub pixel_scale: [f64; 2],
    pub pixel_scale_count: usize,
    pub receivers: GridSpec,
    pub z_step: f64,
    /// Gap kept between the top of the height search and the LED plane.
    pub z_margin: f64,
    /// Fit bin means rather than raw samples.
    pub per_bin: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            pixel_scale: [0.5, 5.0],
            pixel_scale_count: 50,
            receivers: GridSpec { x: [0.0, 2.5], y: [0.0, 5.0], step: 0.1 },
            z_step: 1e-3,
            z_margin: 0.05,
            per_bin: true,
        }
    }
}

impl SimulationConfig {
    pub fn scales(&self) -> Vec<f64> {
        linspace(self.pixel_scale[0], self.pixel_scale[1], self.pixel_scale_count)
    }

    pub fn search(&self, led_height: f64) -> ZSearch {
        ZSearch { min: 0.0, max: led_height - self.z_margin, step: self.z_step }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub rows: usize,
    pub cols: usize,
    pub receivers: GridSpec,
    pub height: f64,
    pub spacing: SpacingSearch,
    pub ga: GaConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            rows: 5,
            cols: 5,
            receivers: GridSpec { x: [0.0, 5.0], y: [0.0, 5.0], step: 1.0 },
            height: 1.0,
            spacing: SpacingSearch::default(),
            ga: GaConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub room: RoomSpec,
    pub intrinsics: CameraIntrinsics,
    pub convention: MetricConvention,
    /// `None` runs square, hexagonal and triangular.
    pub layout: Option<LayoutKind>,
    pub density: f64,
    pub infinite: bool,
    pub receivers: GridSpec,
    pub infinite_receivers: GridSpec,
    pub heights: Vec<f64>,
    pub rotation: RotationConfig,
    pub simulation: SimulationConfig,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            room: RoomSpec::default(),
            intrinsics: CameraIntrinsics::default(),
            convention: MetricConvention::normalized(),
            layout: None,
            density: 1.0,
            infinite: false,
            receivers: GridSpec { x: [0.0, 2.5], y: [0.0, 5.0], step: 0.1 },
            infinite_receivers: GridSpec { x: [0.0, 0.5], y: [0.0, 0.5], step: 0.01 },
            heights: vec![0.0, 0.5, 1.0],
            rotation: RotationConfig::default(),
            simulation: SimulationConfig::default(),
            optimizer: OptimizerConfig::default(),
            seed: 0,
        }
    }
}

/// Command-line overrides applied on top of the JSON file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub layout: Option<LayoutKind>,
    pub height: Option<f64>,
    pub infinite: bool,
    pub quantization: Option<Quantization>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
            self.optimizer.ga.seed = seed;
        }
        if o.layout.is_some() {
            self.layout = o.layout;
        }
        if let Some(h) = o.height {
            self.heights = vec![h];
            self.optimizer.height = h;
        }
        if o.infinite {
            self.infinite = true;
        }
        if let Some(q) = o.quantization {
            self.intrinsics.quantization = q;
        }
    }

    pub fn beta(&self) -> f64 {
        self.intrinsics.beta
    }

    pub fn layouts(&self) -> Vec<LayoutKind> {
        match self.layout {
            Some(k) => vec![k],
            None => vec![LayoutKind::Square, LayoutKind::Hexagonal, LayoutKind::Triangular],
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        self.room.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.intrinsics.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.intrinsics.pixel_size_x != self.intrinsics.pixel_size_y {
            return bad("square pixels are required (pixel_size_x = pixel_size_y)");
        }
        if !(self.density > 0.0) {
            return bad("density must be positive");
        }
        if self.heights.is_empty() {
            return bad("at least one receiver height is required");
        }
        if let Some(h) = self.heights.iter().find(|h| !(**h >= 0.0 && **h < self.room.led_height)) {
            return bad(&format!("receiver height {h} must lie in [0, led_height)"));
        }
        if matches!(self.layout, Some(LayoutKind::Rectangular | LayoutKind::Free)) {
            return bad("layout must be square, hex or tri");
        }
        for g in [&self.receivers, &self.infinite_receivers, &self.simulation.receivers, &self.optimizer.receivers] {
            g.xy().map_err(|e| CliError::Config(e.to_string()))?;
        }
        self.rotation.grid().map_err(|e| CliError::Config(e.to_string()))?;
        if self.simulation.pixel_scale_count == 0 || !(self.simulation.pixel_scale[0] > 0.0) {
            return bad("pixel scales must be positive and non-empty");
        }
        self.simulation.search(self.room.led_height).validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.optimizer.height >= 0.0 && self.optimizer.height < self.room.led_height) {
            return bad("optimizer receiver height must lie in [0, led_height)");
        }
        self.optimizer.ga.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }
}

pub fn parse_layout(s: &str) -> Result<LayoutKind, String> {
    match s {
        "square" => Ok(LayoutKind::Square),
        "hex" | "hexagonal" => Ok(LayoutKind::Hexagonal),
        "tri" | "triangular" => Ok(LayoutKind::Triangular),
        _ => Err(format!("unknown layout `{s}` (expected square, hex or tri)")),
    }
}

pub fn parse_quantization(s: &str) -> Result<Quantization, String> {
    match s {
        "half" => Ok(Quantization::Half),
        "integer" => Ok(Quantization::Integer),
        _ => Err(format!("unknown quantization `{s}` (expected integer or half)")),
    }
}
