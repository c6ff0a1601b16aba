//! Layout optimization against the mean inverse capture count.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::geometry::{CameraIntrinsics, CameraPose, WorldPoint};
use crate::layout::{captured_horizontal, LayoutKind, LedLayout, RoomSpec};
use crate::npem::{jacobian_general, MetricConvention};

/// Contribution of a receiver that captures no LED.
pub const ZERO_CAPTURE_PENALTY: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObjectiveReport {
    pub mean_inverse_count: f64,
    /// Mean metric over receivers whose Jacobian has full rank.
    pub mean_npem: Option<f64>,
    pub npem_receivers: usize,
    pub counts: Vec<usize>,
}

fn inverse_count(n: usize) -> f64 {
    if n == 0 {
        ZERO_CAPTURE_PENALTY
    } else {
        1.0 / n as f64
    }
}

/// `(1/I)·Σ 1/n_c` for horizontal receivers.
pub fn mean_inverse_count(leds: &[WorldPoint], receivers: &[WorldPoint], intr: &CameraIntrinsics) -> f64 {
    let s: f64 = receivers.iter().map(|r| inverse_count(captured_horizontal(leds, r, intr).len())).sum();
    s / receivers.len() as f64
}

/// Inverse-count objective plus the mean metric it stands in for.
pub fn objective(
    leds: &[WorldPoint],
    receivers: &[WorldPoint],
    intr: &CameraIntrinsics,
    beta: f64,
    convention: &MetricConvention,
) -> Result<ObjectiveReport> {
    if receivers.is_empty() {
        return Err(Error::InvalidParameter("objective needs at least one receiver"));
    }
    let mut counts = Vec::with_capacity(receivers.len());
    let mut inv = 0.0;
    let mut npem_sum = 0.0;
    let mut npem_receivers = 0;
    for r in receivers {
        let seen = captured_horizontal(leds, r, intr);
        counts.push(seen.len());
        inv += inverse_count(seen.len());
        if seen.is_empty() {
            continue;
        }
        let j = jacobian_general(&seen, &CameraPose::horizontal(*r), intr)?;
        let n = convention.npem(&j, intr, beta)?;
        if !n.is_rank_deficient() {
            npem_sum += n.value;
            npem_receivers += 1;
        }
    }
    Ok(ObjectiveReport {
        mean_inverse_count: inv / receivers.len() as f64,
        mean_npem: (npem_receivers > 0).then(|| npem_sum / npem_receivers as f64),
        npem_receivers,
        counts,
    })
}

/// `M` rows × `N` columns of LEDs with mirror-symmetric spacings.
///
/// `d_r` holds the `M + 1` gaps along `y` (wall, rows, wall) and `d_c` the
/// `N + 1` gaps along `x`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SymmetricRectangularLayout {
    pub rows: usize,
    pub cols: usize,
    pub d_r: Vec<f64>,
    pub d_c: Vec<f64>,
}

fn uniform_gaps(count: usize, extent: f64) -> Vec<f64> {
    let cell = extent / count as f64;
    let mut d = alloc::vec![cell; count + 1];
    d[0] = 0.5 * cell;
    d[count] = 0.5 * cell;
    d
}

/// Symmetric gaps from the first `free` values; the middle gap(s) absorb the remainder.
fn gaps_from_free(free: &[f64], count: usize, extent: f64) -> Vec<f64> {
    let len = count + 1;
    let mut d = alloc::vec![0.0; len];
    for (i, &v) in free.iter().enumerate() {
        d[i] = v;
        d[len - 1 - i] = v;
    }
    let used: f64 = 2.0 * free.iter().sum::<f64>();
    let mid = free.len();
    if len % 2 == 1 {
        d[mid] = extent - used;
    } else {
        d[mid] = 0.5 * (extent - used);
        d[len - 1 - mid] = d[mid];
    }
    d
}

fn free_count(count: usize) -> usize {
    (count + 2) / 2 - 1
}

impl SymmetricRectangularLayout {
    /// Equal cells with LEDs at their centres.
    pub fn uniform(rows: usize, cols: usize, room: &RoomSpec) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter("rectangular layout needs rows and columns"));
        }
        Ok(Self { rows, cols, d_r: uniform_gaps(rows, room.length), d_c: uniform_gaps(cols, room.width) })
    }

    pub fn leds(&self, led_height: f64) -> Vec<WorldPoint> {
        let ys = cumulative(&self.d_r[..self.rows]);
        let xs = cumulative(&self.d_c[..self.cols]);
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for &y in &ys {
            for &x in &xs {
                out.push(WorldPoint::new(x, y, led_height));
            }
        }
        out
    }

    pub fn to_layout(&self, room: &RoomSpec) -> LedLayout {
        let density = (self.rows * self.cols) as f64 / (room.width * room.length);
        LedLayout::new(LayoutKind::Rectangular, density, self.leds(room.led_height))
    }

    pub fn is_symmetric(&self) -> bool {
        let mirror = |d: &[f64]| (0..d.len()).all(|i| d[i] == d[d.len() - 1 - i]);
        mirror(&self.d_r) && mirror(&self.d_c)
    }

    fn free_params(&self) -> (Vec<f64>, Vec<f64>) {
        (self.d_r[..free_count(self.rows)].to_vec(), self.d_c[..free_count(self.cols)].to_vec())
    }

    fn from_free(rows: usize, cols: usize, fr: &[f64], fc: &[f64], room: &RoomSpec) -> Self {
        Self { rows, cols, d_r: gaps_from_free(fr, rows, room.length), d_c: gaps_from_free(fc, cols, room.width) }
    }
}

fn cumulative(d: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    d.iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpacingSearch {
    pub d_min: f64,
    pub step: f64,
}

impl Default for SpacingSearch {
    fn default() -> Self {
        Self { d_min: 0.1, step: 0.05 }
    }
}

/// Coordinate descent over the free symmetric gaps on the grid
/// `d_min + k·step`, repeated until a full pass changes nothing. A move is
/// taken only when it strictly lowers the objective.
pub fn optimize_rectangular(
    rows: usize,
    cols: usize,
    room: &RoomSpec,
    receivers: &[WorldPoint],
    intr: &CameraIntrinsics,
    search: &SpacingSearch,
) -> Result<(SymmetricRectangularLayout, f64)> {
    room.validate()?;
    if receivers.is_empty() {
        return Err(Error::InvalidParameter("objective needs at least one receiver"));
    }
    if !(search.d_min > 0.0 && search.step > 0.0) {
        return Err(Error::InvalidGrid("spacing search needs d_min > 0 and step > 0"));
    }
    if (rows + 1) as f64 * search.d_min > room.length + 1e-9 || (cols + 1) as f64 * search.d_min > room.width + 1e-9 {
        return Err(Error::InfeasibleSpacing);
    }
    let init = SymmetricRectangularLayout::uniform(rows, cols, room)?;
    let eval = |l: &SymmetricRectangularLayout| mean_inverse_count(&l.leds(room.led_height), receivers, intr);
    let mut best = eval(&init);
    if search.step >= room.width.min(room.length) {
        return Ok((init, best));
    }

    let (mut fr, mut fc) = init.free_params();
    let mut current = init;
    loop {
        let mut changed = false;
        for axis in 0..2 {
            let (count, extent) = if axis == 0 { (rows, room.length) } else { (cols, room.width) };
            let nfree = if axis == 0 { fr.len() } else { fc.len() };
            for p in 0..nfree {
                let params = if axis == 0 { &fr } else { &fc };
                let others: f64 = params.iter().enumerate().filter(|(i, _)| *i != p).map(|(_, v)| v).sum();
                let middle_slots = if (count + 1) % 2 == 1 { 1.0 } else { 2.0 };
                let mut pick: Option<(f64, f64)> = None;
                let mut k = 0usize;
                loop {
                    let v = search.d_min + k as f64 * search.step;
                    let mid = (extent - 2.0 * (others + v)) / middle_slots;
                    if mid < search.d_min - 1e-9 {
                        break;
                    }
                    let mut trial = params.clone();
                    trial[p] = v;
                    let cand = if axis == 0 {
                        SymmetricRectangularLayout::from_free(rows, cols, &trial, &fc, room)
                    } else {
                        SymmetricRectangularLayout::from_free(rows, cols, &fr, &trial, room)
                    };
                    let obj = eval(&cand);
                    if obj < pick.map_or(best, |(o, _)| o) {
                        pick = Some((obj, v));
                    }
                    k += 1;
                }
                if let Some((obj, v)) = pick {
                    best = obj;
                    if axis == 0 {
                        fr[p] = v;
                    } else {
                        fc[p] = v;
                    }
                    current = SymmetricRectangularLayout::from_free(rows, cols, &fr, &fc, room);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok((current, best))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaConfig {
    pub population: usize,
    pub iterations: usize,
    pub selection_rate: f64,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elitism: bool,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 5071,
            iterations: 10,
            selection_rate: 0.5,
            crossover_rate: 0.7,
            mutation_rate: 0.001,
            elitism: true,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidParameter("population must be at least 2"));
        }
        let unit = |r: f64| (0.0..=1.0).contains(&r);
        if !unit(self.selection_rate) || !unit(self.crossover_rate) || !unit(self.mutation_rate) {
            return Err(Error::InvalidParameter("GA rates must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaOutcome {
    pub layout: LedLayout,
    pub objective: f64,
    pub history: Vec<GenerationStats>,
}

/// Real-coded genetic algorithm over free LED `(x, y)` positions.
///
/// Each chromosome holds `2·n_leds` genes. The fittest `selection_rate`
/// fraction is kept as the parent pool (and carried over unchanged with
/// elitism); children mix two parents gene by gene with probability
/// `crossover_rate` and reset each gene uniformly with probability
/// `mutation_rate`. Fitness is the reciprocal of the inverse-count objective.
pub fn optimize_ga<E: Executor>(
    n_leds: usize,
    room: &RoomSpec,
    receivers: &[WorldPoint],
    intr: &CameraIntrinsics,
    cfg: &GaConfig,
    exec: &E,
) -> Result<GaOutcome> {
    cfg.validate()?;
    room.validate()?;
    if n_leds == 0 {
        return Err(Error::InvalidParameter("GA needs at least one LED"));
    }
    if receivers.is_empty() {
        return Err(Error::InvalidParameter("objective needs at least one receiver"));
    }
    let bounds = [room.width, room.length];
    let genes = 2 * n_leds;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let decode = |c: &Vec<f64>| -> Vec<WorldPoint> {
        c.chunks(2).map(|g| WorldPoint::new(g[0], g[1], room.led_height)).collect()
    };
    let score = |c: &Vec<f64>| mean_inverse_count(&decode(c), receivers, intr);

    let mut pop: Vec<Vec<f64>> =
        (0..cfg.population).map(|_| (0..genes).map(|g| rng.gen::<f64>() * bounds[g % 2]).collect()).collect();
    let parents = (libm::round(cfg.selection_rate * cfg.population as f64) as usize).clamp(1, cfg.population);
    let mut history = Vec::with_capacity(cfg.iterations + 1);
    let mut generation = 0;
    loop {
        let obj = exec.map(&pop, score);
        let fit: Vec<f64> = obj.iter().map(|o| 1.0 / o).collect();
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| obj[a].total_cmp(&obj[b]).then(a.cmp(&b)));
        history.push(GenerationStats {
            generation,
            best_fitness: fit[order[0]],
            mean_fitness: fit.iter().sum::<f64>() / fit.len() as f64,
        });
        if generation == cfg.iterations {
            let best = &pop[order[0]];
            return Ok(GaOutcome {
                layout: LedLayout::new(
                    LayoutKind::Free,
                    n_leds as f64 / (room.width * room.length),
                    decode(best),
                ),
                objective: obj[order[0]],
                history,
            });
        }
        let pool: Vec<Vec<f64>> = order[..parents].iter().map(|&i| pop[i].clone()).collect();
        let mut next = if cfg.elitism { pool.clone() } else { Vec::with_capacity(cfg.population) };
        while next.len() < cfg.population {
            let a = &pool[rng.gen_range(0..pool.len())];
            let b = &pool[rng.gen_range(0..pool.len())];
            let mut child = if rng.gen::<f64>() < cfg.crossover_rate {
                (0..genes).map(|g| if rng.gen::<bool>() { a[g] } else { b[g] }).collect()
            } else {
                a.clone()
            };
            for (g, v) in child.iter_mut().enumerate() {
                if rng.gen::<f64>() < cfg.mutation_rate {
                    *v = rng.gen::<f64>() * bounds[g % 2];
                }
            }
            next.push(child);
        }
        pop = next;
        generation += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::layout::receiver_grid;
    use approx::assert_abs_diff_eq;

    fn receivers() -> Vec<WorldPoint> {
        receiver_grid((0.0, 5.0), (0.0, 5.0), 1.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_matches_room_grid() {
        let room = RoomSpec::default();
        let l = SymmetricRectangularLayout::uniform(5, 5, &room).unwrap();
        assert_eq!(l.d_c, alloc::vec![0.5, 1.0, 1.0, 1.0, 1.0, 0.5]);
        let leds = l.leds(2.75);
        assert_eq!(leds.len(), 25);
        assert_abs_diff_eq!(leds[0].x, 0.5);
        assert_abs_diff_eq!(leds[24].y, 4.5);
        assert!(l.is_symmetric());
    }

    #[test]
    fn gaps_reassemble() {
        let d = gaps_from_free(&[0.3, 0.8], 5, 5.0);
        assert_eq!(d.len(), 6);
        assert_abs_diff_eq!(d.iter().sum::<f64>(), 5.0, epsilon = 1e-12);
        assert_eq!(d[0], d[5]);
        assert_eq!(d[2], d[3]);
        let odd = gaps_from_free(&[0.4], 2, 3.0);
        assert_abs_diff_eq!(odd[1], 2.2, epsilon = 1e-12);
        assert_eq!(free_count(5), 2);
        assert_eq!(free_count(4), 2);
        assert_eq!(free_count(1), 0);
    }

    #[test]
    fn objective_examples() {
        let intr = CameraIntrinsics::default();
        let room = RoomSpec::default();
        let leds = SymmetricRectangularLayout::uniform(5, 5, &room).unwrap().leds(2.75);
        let one = objective(&leds, &[WorldPoint::new(2.5, 2.5, 1.0)], &intr, 1.7857, &MetricConvention::normalized())
            .unwrap();
        assert_abs_diff_eq!(one.mean_inverse_count, 1.0 / 9.0, epsilon = 1e-15);
        assert_eq!(one.counts, alloc::vec![9]);
        let single = [WorldPoint::new(0.0, 0.0, 2.75)];
        let r = [WorldPoint::new(0.0, 0.0, 0.0), WorldPoint::new(0.5, 0.5, 0.0)];
        assert_abs_diff_eq!(mean_inverse_count(&single, &r, &intr), 1.0);
        let far = [WorldPoint::new(50.0, 50.0, 0.0)];
        assert_abs_diff_eq!(mean_inverse_count(&single, &far, &intr), ZERO_CAPTURE_PENALTY);
    }

    #[test]
    fn rectangular_descent_never_worse() {
        let intr = CameraIntrinsics::default();
        let room = RoomSpec::default();
        let rx = receivers();
        let uni = SymmetricRectangularLayout::uniform(5, 5, &room).unwrap();
        let base = mean_inverse_count(&uni.leds(2.75), &rx, &intr);
        let (l, obj) = optimize_rectangular(5, 5, &room, &rx, &intr, &SpacingSearch::default()).unwrap();
        assert!(obj <= base);
        assert!(l.is_symmetric());
        assert_abs_diff_eq!(l.d_r.iter().sum::<f64>(), 5.0, epsilon = 1e-9);
        assert!(l.d_c.iter().all(|&d| d >= 0.1 - 1e-9));
    }

    #[test]
    fn degenerate_step_keeps_uniform() {
        let intr = CameraIntrinsics::default();
        let room = RoomSpec::default();
        let search = SpacingSearch { d_min: 0.1, step: 6.0 };
        let (l, _) = optimize_rectangular(5, 5, &room, &receivers(), &intr, &search).unwrap();
        assert_eq!(l, SymmetricRectangularLayout::uniform(5, 5, &room).unwrap());
    }

    #[test]
    fn infeasible_spacing() {
        let intr = CameraIntrinsics::default();
        let room = RoomSpec::default();
        let search = SpacingSearch { d_min: 1.0, step: 0.1 };
        assert_eq!(
            optimize_rectangular(5, 5, &room, &receivers(), &intr, &search),
            Err(Error::InfeasibleSpacing)
        );
    }

    #[test]
    fn ga_without_iterations_returns_best_initial() {
        let intr = CameraIntrinsics::default();
        let room = RoomSpec::default();
        let cfg = GaConfig { population: 2, iterations: 0, seed: 3, ..GaConfig::default() };
        let out = optimize_ga(4, &room, &receivers(), &intr, &cfg, &Sequential).unwrap();
        assert_eq!(out.history.len(), 1);
        assert_abs_diff_eq!(out.objective, 1.0 / out.history[0].best_fitness, epsilon = 1e-15);
        assert_eq!(out.layout.len(), 4);
    }

    #[test]
    fn ga_is_monotone_and_reproducible() {
        let intr = CameraIntrinsics::default();
        let room = RoomSpec::default();
        let cfg = GaConfig { population: 60, iterations: 8, seed: 11, ..GaConfig::default() };
        let a = optimize_ga(9, &room, &receivers(), &intr, &cfg, &Sequential).unwrap();
        let b = optimize_ga(9, &room, &receivers(), &intr, &cfg, &Sequential).unwrap();
        assert_eq!(a, b);
        assert!(a.history.windows(2).all(|w| w[1].best_fitness >= w[0].best_fitness));
        assert!(a.layout.leds.iter().all(|p| room.contains_xy(p.x, p.y)));
    }

    #[test]
    fn ga_rejects_bad_config() {
        let intr = CameraIntrinsics::default();
        let room = RoomSpec::default();
        let cfg = GaConfig { population: 1, ..GaConfig::default() };
        assert!(optimize_ga(4, &room, &receivers(), &intr, &cfg, &Sequential).is_err());
        let cfg = GaConfig { crossover_rate: 1.5, ..GaConfig::default() };
        assert!(optimize_ga(4, &room, &receivers(), &intr, &cfg, &Sequential).is_err());
    }
}
