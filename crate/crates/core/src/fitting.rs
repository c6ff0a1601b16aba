//! Closed-form least squares for `y = k/x` and `y = k/x + c`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FitModel {
    Inverse,
    InverseOffset,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub model: FitModel,
    pub k: f64,
    pub c: f64,
    /// `1 − SSE/SST` on raw `y`; negative for fits worse than the mean.
    pub r_square: f64,
    pub rmse: f64,
    pub n_points: usize,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        self.k / x + self.c
    }

    pub fn sse(&self, points: &[(f64, f64)]) -> f64 {
        points.iter().map(|&(x, y)| { let e = y - self.predict(x); e * e }).sum()
    }
}

fn check(points: &[(f64, f64)], needed: usize) -> Result<()> {
    if points.len() < needed {
        return Err(Error::InsufficientData { needed, got: points.len() });
    }
    if points.iter().any(|&(x, _)| !(x > 0.0)) {
        return Err(Error::NonPositiveX);
    }
    Ok(())
}

fn finish(model: FitModel, k: f64, c: f64, points: &[(f64, f64)]) -> FitResult {
    let n = points.len() as f64;
    let mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sst: f64 = points.iter().map(|&(_, y)| (y - mean) * (y - mean)).sum();
    let sse: f64 = points.iter().map(|&(x, y)| { let e = y - (k / x + c); e * e }).sum();
    let r_square = if sst > 0.0 {
        1.0 - sse / sst
    } else if sse == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    FitResult { model, k, c, r_square, rmse: libm::sqrt(sse / n), n_points: points.len() }
}

/// `y = k·x⁻¹` with `k = Σu·y / Σu²`, `u = 1/x`.
pub fn fit_inverse(points: &[(f64, f64)]) -> Result<FitResult> {
    check(points, 2)?;
    let (mut suy, mut suu) = (0.0, 0.0);
    for &(x, y) in points {
        let u = 1.0 / x;
        suy += u * y;
        suu += u * u;
    }
    Ok(finish(FitModel::Inverse, suy / suu, 0.0, points))
}

/// `y = k·x⁻¹ + c` from the 2×2 normal equations in `(1/x, 1)`.
pub fn fit_inverse_offset(points: &[(f64, f64)]) -> Result<FitResult> {
    check(points, 3)?;
    let n = points.len() as f64;
    let (mut su, mut suu, mut sy, mut suy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let u = 1.0 / x;
        su += u;
        suu += u * u;
        sy += y;
        suy += u * y;
    }
    let mu = su / n;
    let my = sy / n;
    let sxx = suu - n * mu * mu;
    if !(sxx > 1e-14 * suu) {
        return Err(Error::SingularDesign);
    }
    let k = (suy - n * mu * my) / sxx;
    let c = my - k * mu;
    Ok(finish(FitModel::InverseOffset, k, c, points))
}

pub fn fit(model: FitModel, points: &[(f64, f64)]) -> Result<FitResult> {
    match model {
        FitModel::Inverse => fit_inverse(points),
        FitModel::InverseOffset => fit_inverse_offset(points),
    }
}

/// Mean of a group of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupMean<K> {
    pub key: K,
    pub mean: f64,
    pub count: usize,
}

/// Arithmetic mean per key, in key order.
pub fn aggregate_mean<K: Ord + Copy>(samples: impl IntoIterator<Item = (K, f64)>) -> Vec<GroupMean<K>> {
    let mut acc: BTreeMap<K, (f64, usize)> = BTreeMap::new();
    for (k, v) in samples {
        let e = acc.entry(k).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    acc.into_iter().map(|(key, (s, count))| GroupMean { key, mean: s / count as f64, count }).collect()
}

/// Bin means with at least `min_count` samples as fit points `(x, mean)`.
pub fn bin_points(means: &[GroupMean<usize>], min_count: usize) -> Vec<(f64, f64)> {
    means.iter().filter(|g| g.count >= min_count).map(|g| (g.key as f64, g.mean)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_inverse() {
        let pts: Vec<(f64, f64)> = (1..=10).map(|x| (x as f64, 2.0 / x as f64)).collect();
        let f = fit_inverse(&pts).unwrap();
        assert_abs_diff_eq!(f.k, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.r_square, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.rmse, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn exact_inverse_offset() {
        let pts: Vec<(f64, f64)> = (1..=10).map(|x| (x as f64, 3.0 / x as f64 + 0.5)).collect();
        let f = fit_inverse_offset(&pts).unwrap();
        assert_abs_diff_eq!(f.k, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.c, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f.r_square, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn offset_free_data_gives_zero_offset() {
        let pts: Vec<(f64, f64)> = (1..=10).map(|x| (x as f64, 2.0 / x as f64)).collect();
        let f = fit_inverse_offset(&pts).unwrap();
        assert_abs_diff_eq!(f.c, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_data_reports_honest_r_square() {
        let pts: Vec<(f64, f64)> = (1..=5).map(|x| (x as f64, 1.0)).collect();
        let f = fit_inverse(&pts).unwrap();
        let su: f64 = (1..=5).map(|x| 1.0 / x as f64).sum();
        let suu: f64 = (1..=5).map(|x| 1.0 / (x * x) as f64).sum();
        assert_abs_diff_eq!(f.k, su / suu, epsilon = 1e-14);
        assert!(f.r_square <= 0.0);
    }

    #[test]
    fn errors() {
        assert_eq!(fit_inverse(&[(1.0, 1.0)]), Err(Error::InsufficientData { needed: 2, got: 1 }));
        assert_eq!(fit_inverse(&[(1.0, 1.0), (0.0, 1.0)]), Err(Error::NonPositiveX));
        assert_eq!(fit_inverse_offset(&[(2.0, 1.0), (2.0, 3.0), (2.0, 2.0)]), Err(Error::SingularDesign));
    }

    #[test]
    fn residuals_orthogonal_to_regressors() {
        let pts = [(1.0, 2.1), (2.0, 1.2), (3.0, 0.7), (5.0, 0.55), (8.0, 0.3)];
        let f = fit_inverse_offset(&pts).unwrap();
        let r: Vec<f64> = pts.iter().map(|&(x, y)| y - f.predict(x)).collect();
        let dot_u: f64 = pts.iter().zip(&r).map(|(p, e)| e / p.0).sum();
        let dot_1: f64 = r.iter().sum();
        assert!(dot_u.abs() < 1e-12 && dot_1.abs() < 1e-12);
        let g = fit_inverse(&pts).unwrap();
        let dot: f64 = pts.iter().map(|&(x, y)| (y - g.predict(x)) / x).sum();
        assert!(dot.abs() < 1e-12);
        assert!(f.sse(&pts) <= g.sse(&pts));
    }

    #[test]
    fn grouped_means() {
        let m = aggregate_mean([(3usize, 1.0), (1, 2.0), (3, 3.0)]);
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].key, m[0].mean, m[0].count), (1, 2.0, 1));
        assert_eq!((m[1].key, m[1].mean, m[1].count), (3, 2.0, 2));
        assert_eq!(bin_points(&m, 2), alloc::vec![(3.0, 2.0)]);
    }
}
