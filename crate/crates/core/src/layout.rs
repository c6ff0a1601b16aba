//! LED cell layouts and the field-of-view capture model.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::geometry::{world_to_camera_with, CameraIntrinsics, CameraPoint, CameraPose, WorldPoint};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Boundary slack for room clipping, metres.
pub const ROOM_TOLERANCE: f64 = 1e-9;

/// Relative slack on the closed capture cone.
pub const CAPTURE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoomSpec {
    pub width: f64,
    pub length: f64,
    pub height: f64,
    pub led_height: f64,
}

impl Default for RoomSpec {
    /// 5 m × 5 m × 3 m room with the LED plane at 2.75 m.
    fn default() -> Self {
        Self { width: 5.0, length: 5.0, height: 3.0, led_height: 2.75 }
    }
}

impl RoomSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.length > 0.0) {
            return Err(Error::InvalidParameter("room width and length must be positive"));
        }
        if !(self.led_height > 0.0 && self.led_height <= self.height) {
            return Err(Error::InvalidParameter("led height must lie in (0, room height]"));
        }
        Ok(())
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * self.width, 0.5 * self.length)
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x >= -ROOM_TOLERANCE
            && y >= -ROOM_TOLERANCE
            && x <= self.width + ROOM_TOLERANCE
            && y <= self.length + ROOM_TOLERANCE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LayoutKind {
    /// Square cells: LEDs on a square lattice.
    Square,
    /// Hexagonal cells: LEDs on a triangular lattice.
    Hexagonal,
    /// Triangular cells: LEDs at triangle centroids (honeycomb point set).
    Triangular,
    /// Non-uniform rectangular cells, produced by the optimizer.
    Rectangular,
    /// Free LED positions, produced by the genetic algorithm.
    Free,
}

impl LayoutKind {
    pub fn name(self) -> &'static str {
        match self {
            LayoutKind::Square => "square",
            LayoutKind::Hexagonal => "hex",
            LayoutKind::Triangular => "tri",
            LayoutKind::Rectangular => "rectangular",
            LayoutKind::Free => "free",
        }
    }

    /// Nearest-neighbour LED distance at the given density.
    pub fn spacing(self, density: f64) -> Result<f64> {
        let l = Lattice::new(self, density)?;
        Ok(match self {
            LayoutKind::Triangular => l.side / SQRT_3,
            _ => l.side,
        })
    }
}

/// Where a finite region sits relative to the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AnchorMode {
    /// An LED sits exactly at the anchor point.
    #[default]
    Site,
    /// The lattice's highest-symmetry point sits at the anchor. That is an
    /// LED for square and hexagonal cells and a shared triangle vertex for
    /// triangular cells.
    SymmetryCenter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Anchor {
    pub x: f64,
    pub y: f64,
    pub mode: AnchorMode,
}

impl Anchor {
    pub const fn site(x: f64, y: f64) -> Self {
        Self { x, y, mode: AnchorMode::Site }
    }

    pub const fn symmetry_center(x: f64, y: f64) -> Self {
        Self { x, y, mode: AnchorMode::SymmetryCenter }
    }

    /// Default for a finite room: symmetry centre at the room centre.
    pub fn room(room: &RoomSpec) -> Self {
        let (x, y) = room.center();
        Self::symmetry_center(x, y)
    }
}

/// Region the lattice is clipped to.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Extent {
    Room(RoomSpec),
    /// Disc of `radius` around the anchor.
    Infinite { radius: f64, led_height: f64 },
}

impl Extent {
    /// A disc wide enough that no receiver within `receiver_extent` of the
    /// anchor has its capture disc truncated: capture radius, receiver extent
    /// and two LED spacings.
    pub fn infinite_for(
        kind: LayoutKind,
        density: f64,
        led_height: f64,
        capture_radius: f64,
        receiver_extent: f64,
    ) -> Result<Self> {
        let radius = capture_radius + receiver_extent + 2.0 * kind.spacing(density)?;
        Ok(Extent::Infinite { radius, led_height })
    }

    pub fn led_height(&self) -> f64 {
        match self {
            Extent::Room(r) => r.led_height,
            Extent::Infinite { led_height, .. } => *led_height,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LedLayout {
    pub kind: LayoutKind,
    /// LEDs per square metre.
    pub density: f64,
    pub leds: Vec<WorldPoint>,
}

impl LedLayout {
    pub fn new(kind: LayoutKind, density: f64, leds: Vec<WorldPoint>) -> Self {
        Self { kind, density, leds }
    }

    pub fn len(&self) -> usize {
        self.leds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leds.is_empty()
    }
}

struct Lattice {
    side: f64,
    a1: (f64, f64),
    a2: (f64, f64),
    sites: &'static [(f64, f64)],
    /// Symmetry centre relative to the first site, in units of `side`.
    center: (f64, f64),
}

impl Lattice {
    fn new(kind: LayoutKind, density: f64) -> Result<Self> {
        if !(density > 0.0 && density.is_finite()) {
            return Err(Error::InvalidParameter("density must be positive"));
        }
        match kind {
            LayoutKind::Square => {
                let a = libm::sqrt(1.0 / density);
                Ok(Self { side: a, a1: (a, 0.0), a2: (0.0, a), sites: &[(0.0, 0.0)], center: (0.0, 0.0) })
            }
            LayoutKind::Hexagonal => {
                let a = libm::sqrt(2.0 / (SQRT_3 * density));
                Ok(Self {
                    side: a,
                    a1: (a, 0.0),
                    a2: (0.5 * a, 0.5 * SQRT_3 * a),
                    sites: &[(0.0, 0.0)],
                    center: (0.0, 0.0),
                })
            }
            LayoutKind::Triangular => {
                // Two LEDs per rhombic cell of area (√3/2)·s².
                let s = libm::sqrt(4.0 / (SQRT_3 * density));
                Ok(Self {
                    side: s,
                    a1: (s, 0.0),
                    a2: (0.5 * s, 0.5 * SQRT_3 * s),
                    sites: &[(0.0, 0.0), (0.5, SQRT_3 / 6.0)],
                    center: (-0.5, -SQRT_3 / 6.0),
                })
            }
            LayoutKind::Rectangular | LayoutKind::Free => Err(Error::UnsupportedKind),
        }
    }

    /// Lattice points whose position satisfies `keep`, within `reach` of `origin`.
    fn points(&self, origin: (f64, f64), reach: f64, mut keep: impl FnMut(f64, f64) -> bool) -> Vec<(f64, f64)> {
        // Smallest distance between adjacent lattice lines bounds the index range.
        let cross = (self.a1.0 * self.a2.1 - self.a1.1 * self.a2.0).abs();
        let n1 = libm::hypot(self.a1.0, self.a1.1);
        let n2 = libm::hypot(self.a2.0, self.a2.1);
        let gap = (cross / n1).min(cross / n2);
        let k = libm::ceil(reach / gap) as i64 + 2;
        let mut out = Vec::new();
        for j in -k..=k {
            for i in -k..=k {
                let bx = origin.0 + i as f64 * self.a1.0 + j as f64 * self.a2.0;
                let by = origin.1 + i as f64 * self.a1.1 + j as f64 * self.a2.1;
                for s in self.sites {
                    let x = bx + s.0 * self.side;
                    let y = by + s.1 * self.side;
                    if keep(x, y) {
                        out.push((x, y));
                    }
                }
            }
        }
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
        out
    }
}

/// LED positions for a periodic cell layout clipped to `extent`.
///
/// LEDs are sorted by `y` then `x`.
pub fn generate_layout(kind: LayoutKind, extent: &Extent, density: f64, anchor: &Anchor) -> Result<LedLayout> {
    let lattice = Lattice::new(kind, density)?;
    let origin = match anchor.mode {
        AnchorMode::Site => (anchor.x, anchor.y),
        AnchorMode::SymmetryCenter => {
            (anchor.x - lattice.center.0 * lattice.side, anchor.y - lattice.center.1 * lattice.side)
        }
    };
    let z = extent.led_height();
    let xy = match extent {
        Extent::Room(room) => {
            room.validate()?;
            let reach = libm::hypot(
                (anchor.x).abs().max((room.width - anchor.x).abs()),
                (anchor.y).abs().max((room.length - anchor.y).abs()),
            ) + lattice.side;
            lattice.points(origin, reach, |x, y| room.contains_xy(x, y))
        }
        Extent::Infinite { radius, .. } => {
            if !(*radius > 0.0) {
                return Err(Error::InvalidParameter("infinite layout radius must be positive"));
            }
            let r2 = radius * radius;
            lattice.points(origin, radius + lattice.side, |x, y| {
                let dx = x - anchor.x;
                let dy = y - anchor.y;
                dx * dx + dy * dy <= r2
            })
        }
    };
    Ok(LedLayout { kind, density, leds: xy.into_iter().map(|(x, y)| WorldPoint::new(x, y, z)).collect() })
}

/// Indices of captured LEDs, their count and, for a horizontal camera, the
/// radius of the capture disc on the LED plane.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureResult {
    pub indices: Vec<usize>,
    pub count: usize,
    pub radius: Option<f64>,
}

/// Inside the closed FOV cone and in front of the camera.
#[inline]
pub fn in_fov(p: &CameraPoint, intr: &CameraIntrinsics) -> bool {
    if !(p.z > 0.0) {
        return false;
    }
    let t = intr.half_fov_tan();
    p.x * p.x + p.y * p.y <= t * t * p.z * p.z * (1.0 + CAPTURE_TOLERANCE)
}

/// LEDs inside the camera's field of view.
pub fn captured_leds(layout: &LedLayout, pose: &CameraPose, intr: &CameraIntrinsics) -> CaptureResult {
    let r = pose.angles.matrix();
    let indices: Vec<usize> = layout
        .leds
        .iter()
        .enumerate()
        .filter(|(_, l)| in_fov(&world_to_camera_with(l, &pose.center, &r), intr))
        .map(|(i, _)| i)
        .collect();
    let radius = match layout.leds.first() {
        Some(l) if pose.angles.is_parallel() => Some((l.z - pose.center.z) * intr.half_fov_tan()),
        _ => None,
    };
    CaptureResult { count: indices.len(), indices, radius }
}

/// Captured LEDs of a horizontal camera, by the disc test on the LED plane.
pub fn captured_horizontal(leds: &[WorldPoint], center: &WorldPoint, intr: &CameraIntrinsics) -> Vec<WorldPoint> {
    let t2 = intr.half_fov_tan() * intr.half_fov_tan();
    leds.iter()
        .copied()
        .filter(|l| {
            let d = l.z - center.z;
            d > 0.0 && l.horizontal_distance_sq(center) <= t2 * d * d * (1.0 + CAPTURE_TOLERANCE)
        })
        .collect()
}

/// Capture count of a horizontal camera at every receiver point.
pub fn capture_count_map<E: Executor>(
    layout: &LedLayout,
    receivers: &[WorldPoint],
    intr: &CameraIntrinsics,
    exec: &E,
) -> Vec<(WorldPoint, usize)> {
    let counts = exec.map(receivers, |p| captured_horizontal(&layout.leds, p, intr).len());
    receivers.iter().copied().zip(counts).collect()
}

/// Receiver grid `x ∈ [x0, x1]`, `y ∈ [y0, y1]` with inclusive endpoints, all at height `z`.
pub fn receiver_grid(x: (f64, f64), y: (f64, f64), step: f64, z: f64) -> Result<Vec<WorldPoint>> {
    let xs = inclusive_range(x.0, x.1, step)?;
    let ys = inclusive_range(y.0, y.1, step)?;
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &px in &xs {
        for &py in &ys {
            out.push(WorldPoint::new(px, py, z));
        }
    }
    Ok(out)
}

/// `a, a + s, …, b` with `b` included when it lies on the grid.
pub fn inclusive_range(a: f64, b: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(b >= a) {
        return Err(Error::InvalidGrid("range needs step > 0 and end >= start"));
    }
    let n = libm::floor((b - a) / step + 1e-9) as usize;
    Ok((0..=n).map(|k| a + k as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::geometry::RotationAngles;
    use approx::assert_abs_diff_eq;

    fn nearest(leds: &[WorldPoint]) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in leds.iter().enumerate() {
            for b in &leds[i + 1..] {
                best = best.min(libm::sqrt(a.horizontal_distance_sq(b)));
            }
        }
        best
    }

    #[test]
    fn square_room_has_25_leds() {
        let room = RoomSpec::default();
        let l = generate_layout(LayoutKind::Square, &Extent::Room(room), 1.0, &Anchor::room(&room)).unwrap();
        assert_eq!(l.len(), 25);
        for i in 1..=5 {
            for j in 1..=5 {
                let want = WorldPoint::new(i as f64 - 0.5, j as f64 - 0.5, 2.75);
                assert!(l.leds.iter().any(|p| p.horizontal_distance_sq(&want) < 1e-20));
            }
        }
    }

    #[test]
    fn nearest_neighbour_spacings() {
        let ext = Extent::Infinite { radius: 6.0, led_height: 2.75 };
        let a = Anchor::site(0.0, 0.0);
        let hex = generate_layout(LayoutKind::Hexagonal, &ext, 1.0, &a).unwrap();
        assert_abs_diff_eq!(nearest(&hex.leds), libm::sqrt(2.0 / SQRT_3), epsilon = 1e-9);
        let tri = generate_layout(LayoutKind::Triangular, &ext, 1.0, &a).unwrap();
        assert_abs_diff_eq!(nearest(&tri.leds), 2.0 * libm::sqrt(1.0 / (3.0 * SQRT_3)), epsilon = 1e-9);
        assert_abs_diff_eq!(LayoutKind::Triangular.spacing(1.0).unwrap(), 0.8774, epsilon = 1e-4);
        assert_abs_diff_eq!(LayoutKind::Hexagonal.spacing(1.0).unwrap(), 1.0746, epsilon = 1e-4);
    }

    #[test]
    fn room_layouts_stay_inside() {
        let room = RoomSpec::default();
        for kind in [LayoutKind::Square, LayoutKind::Hexagonal, LayoutKind::Triangular] {
            let l = generate_layout(kind, &Extent::Room(room), 1.0, &Anchor::room(&room)).unwrap();
            assert!(l.leds.iter().all(|p| room.contains_xy(p.x, p.y)));
            assert!(l.len() >= 20, "{kind:?} {}", l.len());
        }
    }

    #[test]
    fn triangular_vertex_at_room_centre() {
        let room = RoomSpec::default();
        let l = generate_layout(LayoutKind::Triangular, &Extent::Room(room), 1.0, &Anchor::room(&room)).unwrap();
        let c = WorldPoint::new(2.5, 2.5, 2.75);
        let mut d: Vec<f64> = l.leds.iter().map(|p| p.horizontal_distance_sq(&c)).collect();
        d.sort_by(f64::total_cmp);
        // six LEDs equidistant from the shared vertex
        let s = LayoutKind::Triangular.spacing(1.0).unwrap();
        for v in &d[..6] {
            assert_abs_diff_eq!(*v, s * s, epsilon = 1e-9);
        }
        assert!(d[6] > s * s + 1e-6);
    }

    #[test]
    fn rectangular_kind_is_unsupported() {
        let room = RoomSpec::default();
        let r = generate_layout(LayoutKind::Rectangular, &Extent::Room(room), 1.0, &Anchor::room(&room));
        assert_eq!(r, Err(Error::UnsupportedKind));
    }

    #[test]
    fn nine_leds_at_room_centre() {
        let room = RoomSpec::default();
        let l = generate_layout(LayoutKind::Square, &Extent::Room(room), 1.0, &Anchor::room(&room)).unwrap();
        let pose = CameraPose::horizontal(WorldPoint::new(2.5, 2.5, 1.0));
        let c = captured_leds(&l, &pose, &CameraIntrinsics::default());
        assert_eq!(c.count, 9);
        assert_abs_diff_eq!(c.radius.unwrap(), 1.75, epsilon = 1e-12);
        let rotated = CameraPose::new(pose.center, RotationAngles::horizontal(1.1));
        assert_eq!(captured_leds(&l, &rotated, &CameraIntrinsics::default()).indices, c.indices);
    }

    #[test]
    fn boundary_led_is_captured() {
        let intr = CameraIntrinsics::default();
        let leds = [WorldPoint::new(1.0, 0.0, 1.0)];
        assert_eq!(captured_horizontal(&leds, &WorldPoint::new(0.0, 0.0, 0.0), &intr).len(), 1);
    }

    #[test]
    fn empty_layout_counts_zero() {
        let l = LedLayout::new(LayoutKind::Square, 1.0, Vec::new());
        let rx = receiver_grid((0.0, 1.0), (0.0, 1.0), 0.5, 0.0).unwrap();
        let m = capture_count_map(&l, &rx, &CameraIntrinsics::default(), &Sequential);
        assert_eq!(m.len(), 9);
        assert!(m.iter().all(|(_, n)| *n == 0));
    }

    #[test]
    fn inclusive_grid_counts() {
        assert_eq!(inclusive_range(0.0, 2.5, 0.1).unwrap().len(), 26);
        assert_eq!(inclusive_range(0.0, 5.0, 0.1).unwrap().len(), 51);
        assert_eq!(inclusive_range(0.0, 5.0, 1.0).unwrap().len(), 6);
        assert!(inclusive_range(0.0, 1.0, 0.0).is_err());
    }
}
