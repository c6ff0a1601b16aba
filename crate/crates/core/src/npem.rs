//! Pixel-domain Jacobian with respect to the camera centre, its singular
//! spectrum and the normalized positioning error metric.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::geometry::{
    world_to_camera_with, CameraIntrinsics, CameraPose, PixelPoint, RotationAngles, RotationMatrix,
    WorldPoint, DEPTH_EPSILON,
};
use crate::layout::in_fov;
use crate::linalg::{symmetric_eigen, Mat3};

/// Singular values at or below `RANK_TOLERANCE · σ_max` are discarded.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Eigenvalues of the closed form under this fraction of the largest are dropped.
const CLOSED_FORM_NULL: f64 = 1e-12;

const RADICAND_TOLERANCE: f64 = 1e-9;

/// Stacked `(∂u_i/∂c, ∂v_i/∂c)` row pairs, one pair per LED.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    pub rows: Vec<[f64; 3]>,
}

impl JacobianMatrix {
    pub fn from_rows(rows: Vec<[f64; 3]>) -> Self {
        Self { rows }
    }

    /// Number of LEDs (row pairs).
    pub fn n(&self) -> usize {
        self.rows.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn gram(&self) -> Mat3 {
        let mut g = [[0.0; 3]; 3];
        for r in &self.rows {
            for i in 0..3 {
                for j in 0..3 {
                    g[i][j] += r[i] * r[j];
                }
            }
        }
        g
    }

    pub fn apply(&self, v: [f64; 3]) -> Vec<f64> {
        self.rows.iter().map(|r| r[0] * v[0] + r[1] * v[1] + r[2] * v[2]).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { rows: self.rows.iter().map(|r| [r[0] * c, r[1] * c, r[2] * c]).collect() }
    }

    /// Appends the row pairs of `other`.
    pub fn stack(&self, other: &JacobianMatrix) -> Self {
        let mut rows = self.rows.clone();
        rows.extend_from_slice(&other.rows);
        Self { rows }
    }
}

/// Singular values of a Jacobian, descending. Only the first `rank` are retained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularSpectrum {
    pub values: [f64; 3],
    pub rank: usize,
}

impl SingularSpectrum {
    pub fn sigma(&self) -> &[f64] {
        &self.values[..self.rank]
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn inverse_square_sum(&self) -> f64 {
        self.sigma().iter().map(|s| 1.0 / (s * s)).sum()
    }
}

/// NPEM value together with the rank it was computed at.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Npem {
    pub value: f64,
    pub rank: usize,
}

impl Npem {
    pub fn is_rank_deficient(&self) -> bool {
        self.rank < 3
    }
}

/// How the focal length is expressed when pixels are normalized to unit size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FocalNormalization {
    /// `s := 1` and `f := f / s_x`, i.e. focal length in pixels.
    PixelUnits,
    /// `s := 1` with the focal length kept at its numeric millimetre value.
    #[default]
    UnitPixel,
}

/// How `β` enters the metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NoiseScale {
    /// Covariance `β·I`: `sqrt(β·Σσ⁻²)`.
    Variance,
    /// Covariance `β²·I`: `β·sqrt(Σσ⁻²)`.
    #[default]
    StdDev,
}

/// Unit and noise conventions used when turning a Jacobian into a metric value.
///
/// [`MetricConvention::normalized`] takes unit pixel pitch and treats β as a noise standard deviation;
/// [`MetricConvention::literal`] is `sqrt(β·Σσ⁻²)` on the focal length in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricConvention {
    pub focal: FocalNormalization,
    pub noise: NoiseScale,
}

impl MetricConvention {
    pub const fn normalized() -> Self {
        Self { focal: FocalNormalization::UnitPixel, noise: NoiseScale::StdDev }
    }

    pub const fn literal() -> Self {
        Self { focal: FocalNormalization::PixelUnits, noise: NoiseScale::Variance }
    }

    /// Factor applied to a Jacobian computed with the physical intrinsics.
    pub fn jacobian_scale(&self, intr: &CameraIntrinsics) -> f64 {
        match self.focal {
            FocalNormalization::PixelUnits => 1.0,
            FocalNormalization::UnitPixel => intr.pixel_size_x,
        }
    }

    pub fn from_inverse_square_sum(&self, sum: f64, beta: f64) -> f64 {
        match self.noise {
            NoiseScale::Variance => libm::sqrt(beta * sum),
            NoiseScale::StdDev => beta * libm::sqrt(sum),
        }
    }

    /// Metric of a Jacobian computed with the physical intrinsics `intr`.
    pub fn npem(&self, j: &JacobianMatrix, intr: &CameraIntrinsics, beta: f64) -> Result<Npem> {
        let spec = singular_spectrum(j);
        if spec.rank == 0 {
            return Err(Error::RankZero);
        }
        let c = self.jacobian_scale(intr);
        let sum = spec.inverse_square_sum() / (c * c);
        Ok(Npem { value: self.from_inverse_square_sum(sum, beta), rank: spec.rank })
    }

    /// Closed-form parallel-plane value under this convention.
    pub fn closed_form(
        &self,
        leds: &[WorldPoint],
        pose: &CameraPose,
        intr: &CameraIntrinsics,
        beta: f64,
    ) -> Result<Npem> {
        let (sum, rank) = parallel_inverse_square_sum(leds, pose, intr)?;
        let c = self.jacobian_scale(intr);
        Ok(Npem { value: self.from_inverse_square_sum(sum / (c * c), beta), rank })
    }
}

/// `∂(u, v)/∂c` for every LED under a general pose.
///
/// With `(B, C, A) = R·(L − c)`, `M = B/A` and `N = C/A`, row `k` of the pair is
/// `±f/(s·A)·(M·R3k − R1k)` and `±f/(s·A)·(N·R3k − R2k)`; the sign is the pixel
/// axis orientation (`−` for the opposite-axes default).
pub fn jacobian_general(leds: &[WorldPoint], pose: &CameraPose, intr: &CameraIntrinsics) -> Result<JacobianMatrix> {
    jacobian_with(leds, &pose.center, &pose.angles.matrix(), intr)
}

pub(crate) fn jacobian_with(
    leds: &[WorldPoint],
    center: &WorldPoint,
    r: &RotationMatrix,
    intr: &CameraIntrinsics,
) -> Result<JacobianMatrix> {
    if leds.is_empty() {
        return Err(Error::EmptyScene);
    }
    let sign = intr.axes.sign();
    let mut rows = Vec::with_capacity(2 * leds.len());
    for led in leds {
        let cam = world_to_camera_with(led, center, r);
        if cam.z.abs() < DEPTH_EPSILON {
            return Err(Error::DegenerateDepth);
        }
        let (m, n) = (cam.x / cam.z, cam.y / cam.z);
        let gu = sign * intr.focal_length / (intr.pixel_size_x * cam.z);
        let gv = sign * intr.focal_length / (intr.pixel_size_y * cam.z);
        let mut ru = [0.0; 3];
        let mut rv = [0.0; 3];
        for k in 0..3 {
            ru[k] = gu * (m * r.at(2, k) - r.at(0, k));
            rv[k] = gv * (n * r.at(2, k) - r.at(1, k));
        }
        rows.push(ru);
        rows.push(rv);
    }
    Ok(JacobianMatrix { rows })
}

/// Parallel-plane Jacobian rebuilt from observed pixels.
///
/// `depth` is the LED height above the camera. Each pair is
/// `±f/(s·d)·(−cos θz, sin θz, M_i)` and `±f/(s·d)·(−sin θz, −cos θz, N_i)`
/// with `M_i = ±(u_i − u0)·s_x/f`.
pub fn jacobian_from_pixels(
    pixels: &[PixelPoint],
    theta_z: f64,
    depth: f64,
    intr: &CameraIntrinsics,
) -> Result<JacobianMatrix> {
    if depth.abs() < DEPTH_EPSILON {
        return Err(Error::DegenerateDepth);
    }
    if pixels.is_empty() {
        return Err(Error::EmptyScene);
    }
    let sign = intr.axes.sign();
    let (sz, cz) = libm::sincos(theta_z);
    let gu = sign * intr.focal_length / (intr.pixel_size_x * depth);
    let gv = sign * intr.focal_length / (intr.pixel_size_y * depth);
    let mut rows = Vec::with_capacity(2 * pixels.len());
    for p in pixels {
        let m = sign * (p.u - intr.u0) * intr.pixel_size_x / intr.focal_length;
        let n = sign * (p.v - intr.v0) * intr.pixel_size_y / intr.focal_length;
        rows.push([-gu * cz, gu * sz, gu * m]);
        rows.push([-gv * sz, -gv * cz, gv * n]);
    }
    Ok(JacobianMatrix { rows })
}

/// Singular values from the Gram matrix eigenvectors: `σ_i = ‖J·v_i‖`.
pub fn singular_spectrum(j: &JacobianMatrix) -> SingularSpectrum {
    let eig = symmetric_eigen(&j.gram());
    let mut values = [0.0; 3];
    for (k, v) in values.iter_mut().enumerate() {
        let jv = j.apply(eig.vector(k));
        *v = libm::sqrt(jv.iter().map(|x| x * x).sum::<f64>());
    }
    values.sort_by(|a, b| b.total_cmp(a));
    let rank = if values[0] > 0.0 {
        values.iter().filter(|&&s| s > RANK_TOLERANCE * values[0]).count()
    } else {
        0
    };
    SingularSpectrum { values, rank }
}

/// `sqrt(β·Σ 1/σ_i²)` over the retained singular values.
pub fn npem(j: &JacobianMatrix, beta: f64) -> Result<Npem> {
    let spec = singular_spectrum(j);
    if spec.rank == 0 {
        return Err(Error::RankZero);
    }
    Ok(Npem { value: libm::sqrt(beta * spec.inverse_square_sum()), rank: spec.rank })
}

/// Closed-form NPEM for a horizontal camera under a common-height LED plane,
/// `sqrt(β·Σ 1/σ_i²)` with the sum evaluated from the slopes
/// `m_i = −(x_i − x_c)/d`, `n_i = −(y_i − y_c)/d`.
pub fn npem_closed_form_parallel(
    leds: &[WorldPoint],
    pose: &CameraPose,
    intr: &CameraIntrinsics,
    beta: f64,
) -> Result<Npem> {
    let (sum, rank) = parallel_inverse_square_sum(leds, pose, intr)?;
    Ok(Npem { value: libm::sqrt(beta * sum), rank })
}

/// `Σ 1/σ_i²` and rank for the parallel-plane case.
pub fn parallel_inverse_square_sum(
    leds: &[WorldPoint],
    pose: &CameraPose,
    intr: &CameraIntrinsics,
) -> Result<(f64, usize)> {
    if !pose.angles.is_parallel() {
        return Err(Error::InvalidParameter("closed form needs theta_x = theta_y = 0"));
    }
    if intr.pixel_size_x != intr.pixel_size_y {
        return Err(Error::InvalidParameter("closed form needs square pixels"));
    }
    let first = leds.first().ok_or(Error::EmptyScene)?;
    if leds.iter().any(|l| l.z != first.z) {
        return Err(Error::InvalidParameter("closed form needs a common LED height"));
    }
    let d = first.z - pose.center.z;
    if d.abs() < DEPTH_EPSILON {
        return Err(Error::DegenerateDepth);
    }

    let m: Vec<f64> = leds.iter().map(|l| -(l.x - pose.center.x) / d).collect();
    let nn: Vec<f64> = leds.iter().map(|l| -(l.y - pose.center.y) / d).collect();
    let n = leds.len();
    let nf = n as f64;

    let q: f64 = m.iter().zip(&nn).map(|(a, b)| a * a + b * b).sum();
    let quartic: f64 = m.iter().zip(&nn).map(|(a, b)| a * a * a * a + b * b * b * b).sum();
    let mut pair_sq = 0.0;
    let mut pair_lin = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            pair_sq += m[i] * m[i] * m[j] * m[j] + nn[i] * nn[i] * nn[j] * nn[j];
            pair_lin += m[i] * m[j] + nn[i] * nn[j];
        }
    }
    let sm2: f64 = m.iter().map(|a| a * a).sum();
    let sn2: f64 = nn.iter().map(|b| b * b).sum();
    let cross = sm2 * sn2;

    let radicand = quartic + 2.0 * pair_sq + 2.0 * cross - 2.0 * (nf - 2.0) * q + 8.0 * pair_lin + nf * nf;
    let scale = (q + nf) * (q + nf);
    if radicand < -RADICAND_TOLERANCE * scale {
        return Err(Error::NumericalConsistency { what: "closed-form radicand", value: radicand });
    }
    let two_r = libm::sqrt(radicand.max(0.0));

    let lo = q - two_r + nf;
    let hi = q + two_r + nf;
    if lo < -RADICAND_TOLERANCE * hi {
        return Err(Error::NumericalConsistency { what: "closed-form eigenvalue", value: lo });
    }
    let mut bracket = 2.0 / hi + 1.0 / nf;
    let mut rank = 2;
    if lo > CLOSED_FORM_NULL * hi {
        bracket += 2.0 / lo;
        rank = 3;
    }
    let k = d * intr.pixel_size_x / intr.focal_length;
    Ok((k * k * bracket, rank))
}

/// Rotation grid for pose sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    pub theta_x: Vec<f64>,
    pub theta_y: Vec<f64>,
    pub theta_z: Vec<f64>,
}

impl AngleGrid {
    /// Tilts `k·step` strictly inside `(−π/2, π/2)` and headings `k·step_z` in `[0, 2π)`.
    pub fn uniform(step_x: f64, step_y: f64, step_z: f64) -> Result<Self> {
        if !(step_x > 0.0 && step_y > 0.0 && step_z > 0.0) {
            return Err(Error::InvalidGrid("angle steps must be positive"));
        }
        Ok(Self { theta_x: open_tilts(step_x), theta_y: open_tilts(step_y), theta_z: turn(step_z) })
    }

    pub fn single(angles: RotationAngles) -> Self {
        Self { theta_x: alloc::vec![angles.theta_x], theta_y: alloc::vec![angles.theta_y], theta_z: alloc::vec![angles.theta_z] }
    }

    pub fn len(&self) -> usize {
        self.theta_x.len() * self.theta_y.len() * self.theta_z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All triples, `θx` outermost and `θz` innermost.
    pub fn angles(&self) -> Result<Vec<RotationAngles>> {
        let mut out = Vec::with_capacity(self.len());
        for &x in &self.theta_x {
            for &y in &self.theta_y {
                for &z in &self.theta_z {
                    out.push(RotationAngles::new(x, y, z)?);
                }
            }
        }
        Ok(out)
    }
}

fn open_tilts(step: f64) -> Vec<f64> {
    let kmax = libm::ceil(FRAC_PI_2 / step) as i64;
    (-kmax..=kmax)
        .map(|k| k as f64 * step)
        .filter(|t| libm::fabs(*t) < FRAC_PI_2 - 1e-12)
        .collect()
}

fn turn(step: f64) -> Vec<f64> {
    let kmax = libm::ceil(TAU / step) as i64;
    (0..kmax).map(|k| k as f64 * step).filter(|t| *t < TAU - 1e-12).collect()
}

/// One cell of a rotation sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationSample {
    pub angles: RotationAngles,
    pub captured: usize,
    /// `None` when fewer than three LEDs are captured.
    pub npem: Option<Npem>,
}

/// Capture count and metric for every grid rotation at a fixed centre.
pub fn rotation_sweep<E: Executor>(
    leds: &[WorldPoint],
    center: &WorldPoint,
    intr: &CameraIntrinsics,
    beta: f64,
    convention: &MetricConvention,
    grid: &AngleGrid,
    exec: &E,
) -> Result<Vec<RotationSample>> {
    let angles = grid.angles()?;
    let results = exec.map(&angles, |a| {
        let r = a.matrix();
        let seen: Vec<WorldPoint> =
            leds.iter().copied().filter(|l| in_fov(&world_to_camera_with(l, center, &r), intr)).collect();
        let npem = if seen.len() >= 3 {
            Some(jacobian_with(&seen, center, &r, intr).and_then(|j| convention.npem(&j, intr, beta)))
        } else {
            None
        };
        (seen.len(), npem)
    });
    angles
        .into_iter()
        .zip(results)
        .map(|(angles, (captured, npem))| Ok(RotationSample { angles, captured, npem: npem.transpose()? }))
        .collect()
}

/// Grid rotation with the smallest metric among poses capturing at least three LEDs.
/// Ties keep the first grid entry.
pub fn min_npem_over_rotations<E: Executor>(
    leds: &[WorldPoint],
    center: &WorldPoint,
    intr: &CameraIntrinsics,
    beta: f64,
    convention: &MetricConvention,
    grid: &AngleGrid,
    exec: &E,
) -> Result<(RotationAngles, Npem)> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty angle grid"));
    }
    let sweep = rotation_sweep(leds, center, intr, beta, convention, grid, exec)?;
    let mut best: Option<(RotationAngles, Npem)> = None;
    for s in sweep {
        if let Some(n) = s.npem {
            if best.is_none_or(|(_, b)| n.value < b.value) {
                best = Some((s.angles, n));
            }
        }
    }
    best.ok_or(Error::NoValidPose)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::geometry::{project_world_to_pixel, PixelAxes};
    use approx::assert_relative_eq;

    fn room_leds() -> Vec<WorldPoint> {
        let mut v = Vec::new();
        for i in 1..=5 {
            for j in 1..=5 {
                v.push(WorldPoint::new(i as f64 - 0.5, j as f64 - 0.5, 2.75));
            }
        }
        v
    }

    #[test]
    fn stacked_identity_spectrum() {
        let j = JacobianMatrix::from_rows(alloc::vec![
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ]);
        let s = singular_spectrum(&j);
        assert_eq!(s.rank, 3);
        for v in s.values {
            assert_relative_eq!(v, 2f64.sqrt(), max_relative = 1e-14);
        }
    }

    #[test]
    fn unit_spectrum_npem() {
        let j = JacobianMatrix::from_rows(alloc::vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert_relative_eq!(npem(&j, 1.0).unwrap().value, 3f64.sqrt(), max_relative = 1e-14);
        let scaled = npem(&j.scaled(4.0), 1.0).unwrap().value;
        assert_relative_eq!(scaled, 3f64.sqrt() / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_matrix_is_rank_zero() {
        let j = JacobianMatrix::from_rows(alloc::vec![[0.0; 3], [0.0; 3]]);
        assert_eq!(npem(&j, 1.0), Err(Error::RankZero));
    }

    #[test]
    fn on_axis_led_has_zero_depth_column() {
        let intr = CameraIntrinsics::default();
        let pose = CameraPose::horizontal(WorldPoint::new(1.0, 1.0, 0.0));
        let j = jacobian_general(&[WorldPoint::new(1.0, 1.0, 2.0)], &pose, &intr).unwrap();
        assert_eq!(j.rows[0][2], 0.0);
        assert_eq!(j.rows[1][2], 0.0);
    }

    #[test]
    fn parallel_jacobian_has_rotation_columns() {
        let intr = CameraIntrinsics::default();
        let pose = CameraPose::new(WorldPoint::new(2.0, 2.0, 1.0), RotationAngles::horizontal(0.7));
        let leds = room_leds();
        let j = jacobian_general(&leds[..4], &pose, &intr).unwrap();
        let g = intr.focal_length / (intr.pixel_size_x * 1.75);
        let (s, c) = libm::sincos(0.7);
        for pair in j.rows.chunks(2) {
            assert_relative_eq!(pair[0][0], g * c, max_relative = 1e-12);
            assert_relative_eq!(pair[0][1], -g * s, max_relative = 1e-12);
            assert_relative_eq!(pair[1][0], g * s, max_relative = 1e-12);
            assert_relative_eq!(pair[1][1], g * c, max_relative = 1e-12);
        }
    }

    #[test]
    fn pixel_jacobian_matches_general() {
        for axes in [PixelAxes::Opposite, PixelAxes::Same] {
            let intr = CameraIntrinsics { axes, ..CameraIntrinsics::default() };
            let pose = CameraPose::new(WorldPoint::new(2.1, 2.7, 0.4), RotationAngles::horizontal(2.3));
            let leds = room_leds();
            let near: Vec<WorldPoint> = leds.into_iter().filter(|l| l.horizontal_distance_sq(&pose.center) < 4.0).collect();
            let pixels: Vec<PixelPoint> =
                near.iter().map(|l| project_world_to_pixel(l, &pose, &intr, false).unwrap()).collect();
            let a = jacobian_general(&near, &pose, &intr).unwrap();
            let b = jacobian_from_pixels(&pixels, 2.3, 2.75 - 0.4, &intr).unwrap();
            for (ra, rb) in a.rows.iter().zip(&b.rows) {
                for k in 0..3 {
                    assert!((ra[k] - rb[k]).abs() < 1e-9 * ra[0].abs().max(1.0), "{ra:?} {rb:?}");
                }
            }
        }
    }

    #[test]
    fn closed_form_agrees_at_room_centre() {
        let intr = CameraIntrinsics::default();
        let pose = CameraPose::horizontal(WorldPoint::new(2.5, 2.5, 1.0));
        let leds: Vec<WorldPoint> =
            room_leds().into_iter().filter(|l| l.horizontal_distance_sq(&pose.center) <= 1.75 * 1.75).collect();
        assert_eq!(leds.len(), 9);
        let svd = npem(&jacobian_general(&leds, &pose, &intr).unwrap(), 1.7857).unwrap();
        let closed = npem_closed_form_parallel(&leds, &pose, &intr, 1.7857).unwrap();
        assert_relative_eq!(svd.value, closed.value, max_relative = 1e-12);
        assert_eq!(closed.rank, 3);
    }

    #[test]
    fn single_led_closed_form_is_rank_deficient() {
        let intr = CameraIntrinsics::default();
        let pose = CameraPose::horizontal(WorldPoint::new(0.0, 0.0, 0.0));
        let leds = [WorldPoint::new(0.3, -0.2, 2.0)];
        let closed = npem_closed_form_parallel(&leds, &pose, &intr, 1.0).unwrap();
        let svd = npem(&jacobian_general(&leds, &pose, &intr).unwrap(), 1.0).unwrap();
        assert_eq!(closed.rank, 2);
        assert_eq!(svd.rank, 2);
        assert_relative_eq!(closed.value, svd.value, max_relative = 1e-9);
    }

    #[test]
    fn closed_form_rejects_tilt() {
        let intr = CameraIntrinsics::default();
        let pose = CameraPose::new(WorldPoint::new(0.0, 0.0, 0.0), RotationAngles::new(0.1, 0.0, 0.0).unwrap());
        assert!(matches!(
            npem_closed_form_parallel(&room_leds(), &pose, &intr, 1.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn conventions_relate_by_pixel_size() {
        let intr = CameraIntrinsics::default();
        let pose = CameraPose::horizontal(WorldPoint::new(2.5, 2.5, 1.0));
        let j = jacobian_general(&room_leds()[6..9], &pose, &intr).unwrap();
        let lit = MetricConvention::literal().npem(&j, &intr, 1.7857).unwrap().value;
        assert_relative_eq!(lit, npem(&j, 1.7857).unwrap().value, max_relative = 1e-14);
        let tab = MetricConvention::normalized().npem(&j, &intr, 1.7857).unwrap().value;
        assert_relative_eq!(tab, lit * 1.7857f64.sqrt() / intr.pixel_size_x, max_relative = 1e-12);
    }

    #[test]
    fn angle_grid_ranges() {
        let g = AngleGrid::uniform(core::f64::consts::PI / 9.0, core::f64::consts::PI / 9.0, core::f64::consts::PI / 2.0).unwrap();
        assert_eq!(g.theta_x.len(), 9);
        assert_eq!(g.theta_z.len(), 4);
        assert!(g.theta_x.iter().all(|t| t.abs() < FRAC_PI_2));
    }

    #[test]
    fn single_angle_grid_returns_it() {
        let intr = CameraIntrinsics::default();
        let c = WorldPoint::new(2.5, 2.5, 1.0);
        let (a, n) = min_npem_over_rotations(
            &room_leds(),
            &c,
            &intr,
            1.7857,
            &MetricConvention::normalized(),
            &AngleGrid::single(RotationAngles::zero()),
            &Sequential,
        )
        .unwrap();
        assert_eq!(a, RotationAngles::zero());
        assert_eq!(n.rank, 3);
    }

    #[test]
    fn no_valid_pose_when_nothing_seen() {
        let intr = CameraIntrinsics { fov: 0.01, ..CameraIntrinsics::default() };
        let c = WorldPoint::new(0.0, 0.0, 1.0);
        let r = min_npem_over_rotations(
            &room_leds(),
            &c,
            &intr,
            1.7857,
            &MetricConvention::normalized(),
            &AngleGrid::single(RotationAngles::zero()),
            &Sequential,
        );
        assert_eq!(r, Err(Error::NoValidPose));
    }
}
