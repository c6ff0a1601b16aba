//! Quantized-pixel observations and the averaging estimator with exhaustive
//! height search.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::fitting::{aggregate_mean, bin_points, fit, FitModel, FitResult, GroupMean};
use crate::geometry::{project_with, world_to_camera_with, CameraIntrinsics, CameraPose, PixelPoint, WorldPoint};
use crate::layout::in_fov;

/// Bins with fewer samples are left out of the per-bin fit.
pub const MIN_BIN_SAMPLES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub led: WorldPoint,
    pub pixel: PixelPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionEstimate {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// `D(ẑ)`, m².
    pub distortion: f64,
    pub n: usize,
    /// A single observation fits every height equally well.
    pub underdetermined: bool,
}

impl PositionEstimate {
    pub fn error_to(&self, truth: &WorldPoint) -> f64 {
        let (dx, dy, dz) = (self.x - truth.x, self.y - truth.y, self.z - truth.z);
        libm::sqrt(dx * dx + dy * dy + dz * dz)
    }
}

/// Height search grid `min, min + step, …, ≤ max`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZSearch {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl ZSearch {
    /// `[0, led_height − 0.05]` at 1 mm.
    pub fn for_led_height(led_height: f64) -> Self {
        Self { min: 0.0, max: led_height - 0.05, step: 1e-3 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::InvalidGrid("height step must be positive"));
        }
        if !(self.max >= self.min) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::InvalidGrid("height range is empty"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        libm::floor((self.max - self.min) / self.step + 1e-9) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn at(&self, k: usize) -> f64 {
        self.min + k as f64 * self.step
    }
}

/// Pixels of the LEDs a horizontal, unrotated camera captures.
pub fn synthesize_observations(
    leds: &[WorldPoint],
    pose: &CameraPose,
    intr: &CameraIntrinsics,
    quantize: bool,
) -> Result<Vec<Observation>> {
    if pose.angles.theta_x != 0.0 || pose.angles.theta_y != 0.0 || pose.angles.theta_z != 0.0 {
        return Err(Error::InvalidParameter("observations are synthesized for an unrotated camera"));
    }
    let r = pose.angles.matrix();
    let mut out = Vec::new();
    for led in leds {
        if in_fov(&world_to_camera_with(led, &pose.center, &r), intr) {
            let pixel = project_with(led, &pose.center, &r, intr, quantize)?;
            out.push(Observation { led: *led, pixel });
        }
    }
    if out.is_empty() {
        return Err(Error::NoCapturedLeds);
    }
    Ok(out)
}

/// Per-observation back-projection `x_i − ±(u_i − u0)·s_x·(z_i − z)/f` written
/// as `p + q·z`.
fn linear_terms(o: &Observation, intr: &CameraIntrinsics) -> [f64; 4] {
    let sign = intr.axes.sign();
    let a = sign * (o.pixel.u - intr.u0) * intr.pixel_size_x / intr.focal_length;
    let b = sign * (o.pixel.v - intr.v0) * intr.pixel_size_y / intr.focal_length;
    [o.led.x - a * o.led.z, a, o.led.y - b * o.led.z, b]
}

/// Mean of the per-LED horizontal solutions at height `z`.
pub fn estimate_xy(obs: &[Observation], z: f64, intr: &CameraIntrinsics) -> Result<(f64, f64)> {
    if obs.is_empty() {
        return Err(Error::EmptyObservations);
    }
    let n = obs.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for o in obs {
        let [px, qx, py, qy] = linear_terms(o, intr);
        sx += px + qx * z;
        sy += py + qy * z;
    }
    Ok((sx / n, sy / n))
}

/// Mean squared spread of the per-LED solutions around their mean at height `z`.
pub fn distortion(obs: &[Observation], z: f64, intr: &CameraIntrinsics) -> Result<f64> {
    let (xh, yh) = estimate_xy(obs, z, intr)?;
    let mut d = 0.0;
    for o in obs {
        let [px, qx, py, qy] = linear_terms(o, intr);
        let ex = px + qx * z - xh;
        let ey = py + qy * z - yh;
        d += ex * ex + ey * ey;
    }
    Ok(d / obs.len() as f64)
}

/// Exhaustive minimization of the distortion over the height grid; the first
/// (lowest) minimizer wins.
pub fn estimate_position(obs: &[Observation], search: &ZSearch, intr: &CameraIntrinsics) -> Result<PositionEstimate> {
    if obs.is_empty() {
        return Err(Error::EmptyObservations);
    }
    search.validate()?;
    let n = obs.len() as f64;
    let terms: Vec<[f64; 4]> = obs.iter().map(|o| linear_terms(o, intr)).collect();
    let mut mean = [0.0; 4];
    for t in &terms {
        for k in 0..4 {
            mean[k] += t[k] / n;
        }
    }
    // D(z) = Spp + 2·Spq·z + Sqq·z² over centred terms.
    let (mut spp, mut spq, mut sqq) = (0.0, 0.0, 0.0);
    for t in &terms {
        let (px, qx, py, qy) = (t[0] - mean[0], t[1] - mean[1], t[2] - mean[2], t[3] - mean[3]);
        spp += px * px + py * py;
        spq += px * qx + py * qy;
        sqq += qx * qx + qy * qy;
    }
    let (spp, spq, sqq) = (spp / n, spq / n, sqq / n);

    let mut best_z = search.at(0);
    let mut best_d = f64::INFINITY;
    for k in 0..search.len() {
        let z = search.at(k);
        let d = spp + z * (2.0 * spq + sqq * z);
        if d < best_d {
            best_d = d;
            best_z = z;
        }
    }
    let (x, y) = (mean[0] + mean[1] * best_z, mean[2] + mean[3] * best_z);
    Ok(PositionEstimate {
        x,
        y,
        z: best_z,
        distortion: best_d.max(0.0),
        n: obs.len(),
        underdetermined: obs.len() == 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorSample {
    pub point_x: f64,
    pub point_y: f64,
    pub h: f64,
    pub pixel_scale: f64,
    pub n_c: usize,
    pub error_m: f64,
}

/// Rows sorted by receiver point, then height, then pixel scale.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorTable {
    pub rows: Vec<ErrorSample>,
}

impl ErrorTable {
    pub fn heights(&self) -> Vec<f64> {
        let mut hs: Vec<f64> = self.rows.iter().map(|r| r.h).collect();
        hs.sort_by(f64::total_cmp);
        hs.dedup();
        hs
    }

    /// Mean error per capture count at one height.
    pub fn bin_means(&self, h: f64) -> Vec<GroupMean<usize>> {
        aggregate_mean(self.rows.iter().filter(|r| r.h == h).map(|r| (r.n_c, r.error_m)))
    }

    /// Fit over the bin means that hold at least [`MIN_BIN_SAMPLES`] rows.
    pub fn fit_bins(&self, h: f64, model: FitModel) -> Result<FitResult> {
        fit(model, &bin_points(&self.bin_means(h), MIN_BIN_SAMPLES))
    }

    /// Fit over every raw row at one height.
    pub fn fit_samples(&self, h: f64, model: FitModel) -> Result<FitResult> {
        let pts: Vec<(f64, f64)> =
            self.rows.iter().filter(|r| r.h == h).map(|r| (r.n_c as f64, r.error_m)).collect();
        fit(model, &pts)
    }
}

/// Positioning error of a horizontal camera for every receiver point, height
/// and pixel-size multiplier. Receivers that capture nothing are skipped.
///
/// `search` defaults to [`ZSearch::for_led_height`] of the highest LED.
pub fn run_error_experiment<E: Executor>(
    leds: &[WorldPoint],
    receivers: &[(f64, f64)],
    heights: &[f64],
    pixel_scales: &[f64],
    intr: &CameraIntrinsics,
    search: Option<ZSearch>,
    exec: &E,
) -> Result<ErrorTable> {
    if leds.is_empty() {
        return Err(Error::EmptyScene);
    }
    if receivers.is_empty() || heights.is_empty() || pixel_scales.is_empty() {
        return Err(Error::InvalidParameter("experiment needs receivers, heights and pixel scales"));
    }
    let top = leds.iter().map(|l| l.z).fold(f64::NEG_INFINITY, f64::max);
    let search = search.unwrap_or_else(|| ZSearch::for_led_height(top));
    search.validate()?;

    let mut cases = Vec::with_capacity(receivers.len() * heights.len());
    for &(x, y) in receivers {
        for &h in heights {
            cases.push(WorldPoint::new(x, y, h));
        }
    }
    let per_case = exec.map(&cases, |c| -> Result<Vec<ErrorSample>> {
        let pose = CameraPose::horizontal(*c);
        let mut rows = Vec::with_capacity(pixel_scales.len());
        for &scale in pixel_scales {
            let scaled = intr.with_pixel_scale(scale);
            let obs = match synthesize_observations(leds, &pose, &scaled, true) {
                Ok(o) => o,
                Err(Error::NoCapturedLeds) => continue,
                Err(e) => return Err(e),
            };
            let est = estimate_position(&obs, &search, &scaled)?;
            rows.push(ErrorSample {
                point_x: c.x,
                point_y: c.y,
                h: c.z,
                pixel_scale: scale,
                n_c: obs.len(),
                error_m: est.error_to(c),
            });
        }
        Ok(rows)
    });
    let mut rows = Vec::new();
    for r in per_case {
        rows.extend(r?);
    }
    Ok(ErrorTable { rows })
}

/// `count` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => alloc::vec![a],
        _ => (0..count).map(|k| a + (b - a) * k as f64 / (count - 1) as f64).collect(),
    }
}
