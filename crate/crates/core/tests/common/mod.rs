//! Independent reference computations used only by the tests.
#![allow(dead_code)]

use vlp_core::geometry::project_world_to_pixel;
use vlp_core::{CameraIntrinsics, CameraPose, WorldPoint};

/// Singular values of a tall `m×3` matrix by one-sided Jacobi rotations on
/// its columns, descending.
pub fn one_sided_jacobi_svd(rows: &[[f64; 3]]) -> [f64; 3] {
    let mut a: Vec<[f64; 3]> = rows.to_vec();
    for _ in 0..100 {
        let mut off = 0.0f64;
        for p in 0..3 {
            for q in p + 1..3 {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in &a {
                    alpha += r[p] * r[p];
                    beta += r[q] * r[q];
                    gamma += r[p] * r[q];
                }
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in a.iter_mut() {
                    let (x, y) = (r[p], r[q]);
                    r[p] = c * x - s * y;
                    r[q] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut s = [0.0; 3];
    for (k, v) in s.iter_mut().enumerate() {
        *v = a.iter().map(|r| r[k] * r[k]).sum::<f64>().sqrt();
    }
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

fn inverse3(m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    inv
}

/// `‖J⁺‖_F²` with `J⁺ = (JᵀJ)⁻¹Jᵀ` for a full-column-rank `J`.
pub fn pseudoinverse_frobenius_sq(rows: &[[f64; 3]]) -> f64 {
    let mut g = [[0.0; 3]; 3];
    for r in rows {
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] += r[i] * r[j];
            }
        }
    }
    let gi = inverse3(g);
    let mut sum = 0.0;
    for r in rows {
        for i in 0..3 {
            let e: f64 = (0..3).map(|k| gi[i][k] * r[k]).sum();
            sum += e * e;
        }
    }
    sum
}

/// Central differences of the unquantized pixel coordinates with respect to
/// the camera centre; rows `(∂u/∂c, ∂v/∂c)` per LED.
pub fn finite_difference_jacobian(
    leds: &[WorldPoint],
    pose: &CameraPose,
    intr: &CameraIntrinsics,
    h: f64,
) -> Vec<[f64; 3]> {
    let mut rows = Vec::new();
    for led in leds {
        let mut ru = [0.0; 3];
        let mut rv = [0.0; 3];
        for k in 0..3 {
            let shift = |d: f64| {
                let mut c = pose.center;
                match k {
                    0 => c.x += d,
                    1 => c.y += d,
                    _ => c.z += d,
                }
                project_world_to_pixel(led, &CameraPose::new(c, pose.angles), intr, false).unwrap()
            };
            let (p, m) = (shift(h), shift(-h));
            ru[k] = (p.u - m.u) / (2.0 * h);
            rv[k] = (p.v - m.v) / (2.0 * h);
        }
        rows.push(ru);
        rows.push(rv);
    }
    rows
}

/// Capture by the angle between the optical axis and the LED direction.
pub fn captured_by_angle(leds: &[WorldPoint], pose: &CameraPose, intr: &CameraIntrinsics) -> Vec<usize> {
    let r = pose.angles.matrix();
    let axis = [r.at(2, 0), r.at(2, 1), r.at(2, 2)];
    leds.iter()
        .enumerate()
        .filter(|(_, l)| {
            let d = [l.x - pose.center.x, l.y - pose.center.y, l.z - pose.center.z];
            let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if norm == 0.0 {
                return false;
            }
            let cos = (axis[0] * d[0] + axis[1] * d[1] + axis[2] * d[2]) / norm;
            cos.clamp(-1.0, 1.0).acos() <= 0.5 * intr.fov
        })
        .map(|(i, _)| i)
        .collect()
}
