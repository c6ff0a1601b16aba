//! Named experiments. Each `run_*` returns structured results; each `cmd_*`
//! runs it and writes CSV/JSON artifacts plus a manifest into the output dir.

use serde::Serialize;
use vlp_core::fitting::{aggregate_mean, fit, FitModel, FitResult, GroupMean};
use vlp_core::geometry::{camera_to_world, project_world_to_pixel, CameraPoint};
use vlp_core::layout::{captured_horizontal, generate_layout, Anchor, Extent};
use vlp_core::npem::{jacobian_from_pixels, jacobian_general, rotation_sweep, singular_spectrum, RotationSample};
use vlp_core::optimizer::{objective, optimize_ga, optimize_rectangular, GaOutcome, GenerationStats, ObjectiveReport, SymmetricRectangularLayout};
use vlp_core::simulator::{run_error_experiment, ErrorTable};
use vlp_core::{CameraPose, Error, Executor, LayoutKind, LedLayout, RotationAngles, WorldPoint};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::fixture::RotationFixture;
use crate::io::{fmt_sig, write_json, write_layout, Manifest, OutDir, Table};

const CLOSED_FORM_AGREEMENT: f64 = 1e-9;

fn write_manifest(out: &mut OutDir, command: &str, cfg: &impl Serialize, seed: u64) -> CliResult<()> {
    let path = out.file(&format!("{command}_manifest.json"))?;
    let m = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config: cfg,
        outputs: out.written().to_vec(),
    };
    write_json(&path, &m)
}

fn height_tag(h: f64) -> String {
    format!("h{}", fmt_sig(h))
}

/// Finite-room layout anchored at the room centre, or an infinite disc
/// around an LED at the origin that covers every receiver's capture disc.
pub fn build_layout(cfg: &ExperimentConfig, kind: LayoutKind, h: f64, infinite: bool) -> CliResult<LedLayout> {
    let room = &cfg.room;
    if infinite {
        let capture = (room.led_height - h) * cfg.intrinsics.half_fov_tan();
        let ext = Extent::infinite_for(kind, cfg.density, room.led_height, capture, cfg.infinite_receivers.extent())?;
        Ok(generate_layout(kind, &ext, cfg.density, &Anchor::site(0.0, 0.0))?)
    } else {
        Ok(generate_layout(kind, &Extent::Room(*room), cfg.density, &Anchor::room(room))?)
    }
}

// ---------------------------------------------------------------- rotation

pub fn run_rotation_sweep<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> CliResult<Vec<RotationSample>> {
    let kind = cfg.layout.unwrap_or(LayoutKind::Square);
    let layout = generate_layout(kind, &Extent::Room(cfg.room), cfg.density, &Anchor::room(&cfg.room))?;
    let [x, y, z] = cfg.rotation.center;
    let grid = cfg.rotation.grid()?;
    Ok(rotation_sweep(&layout.leds, &WorldPoint::new(x, y, z), &cfg.intrinsics, cfg.beta(), &cfg.convention, &grid, exec)?)
}

pub fn cmd_rotation_sweep<E: Executor>(cfg: &ExperimentConfig, out: &mut OutDir, exec: &E) -> CliResult<Vec<RotationSample>> {
    let samples = run_rotation_sweep(cfg, exec)?;
    let mut t = Table::new(&["theta_x_deg", "theta_y_deg", "theta_z_deg", "n_c", "npem", "rank"]);
    for s in &samples {
        let (v, r) = s.npem.map_or(("nan".to_string(), 0), |n| (fmt_sig(n.value), n.rank));
        t.push(vec![
            fmt_sig(s.angles.theta_x.to_degrees()),
            fmt_sig(s.angles.theta_y.to_degrees()),
            fmt_sig(s.angles.theta_z.to_degrees()),
            s.captured.to_string(),
            v,
            r.to_string(),
        ]);
    }
    t.write(&out.file("rotation_sweep.csv")?)?;
    write_manifest(out, "rotation-sweep", cfg, cfg.seed)?;
    Ok(samples)
}

// ---------------------------------------------------------------- heading invariance

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeadingRow {
    pub theta_z_deg: f64,
    pub sigma: Vec<f64>,
    pub npem: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub measured: Vec<HeadingRow>,
    /// `(max − min) / mean` over the measured headings.
    pub measured_spread: f64,
    pub synthetic: Vec<HeadingRow>,
    pub synthetic_spread: f64,
}

fn spread(rows: &[HeadingRow]) -> f64 {
    let v: Vec<f64> = rows.iter().map(|r| r.npem).collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    (max - min) / (v.iter().sum::<f64>() / v.len() as f64)
}

/// Metric per heading from measured pixels, and from noiseless pixels of the
/// LED geometry back-projected from the first heading.
pub fn run_theorem1(fixture: &RotationFixture, cfg: &ExperimentConfig) -> CliResult<Theorem1Report> {
    let first = fixture.measurements.first().ok_or_else(|| CliError::Config("fixture has no measurements".into()))?;
    let intr = fixture.intrinsics(&cfg.intrinsics);
    let d = fixture.depth_m;
    let row = |deg: f64, pixels: &[vlp_core::PixelPoint]| -> CliResult<HeadingRow> {
        let j = jacobian_from_pixels(pixels, deg.to_radians(), d, &intr)?;
        let n = cfg.convention.npem(&j, &intr, cfg.beta())?;
        let scale = cfg.convention.jacobian_scale(&intr);
        let sigma = singular_spectrum(&j).sigma().iter().map(|s| s * scale).collect();
        Ok(HeadingRow { theta_z_deg: deg, sigma, npem: n.value })
    };
    let measured =
        fixture.measurements.iter().map(|m| row(m.theta_z_deg, &m.pixel_points())).collect::<CliResult<Vec<_>>>()?;

    let sign = intr.axes.sign();
    let pose0 = CameraPose::new(WorldPoint::new(0.0, 0.0, 0.0), RotationAngles::horizontal(first.theta_z_deg.to_radians()));
    let leds: Vec<WorldPoint> = first
        .pixel_points()
        .iter()
        .map(|p| {
            let m = sign * (p.u - intr.u0) * intr.pixel_size_x / intr.focal_length;
            let n = sign * (p.v - intr.v0) * intr.pixel_size_y / intr.focal_length;
            camera_to_world(&CameraPoint { x: m * d, y: n * d, z: d }, &pose0)
        })
        .collect();
    let mut synthetic = Vec::new();
    for m in &fixture.measurements {
        let pose = CameraPose::new(pose0.center, RotationAngles::horizontal(m.theta_z_deg.to_radians()));
        let pixels = leds
            .iter()
            .map(|l| project_world_to_pixel(l, &pose, &intr, false))
            .collect::<Result<Vec<_>, _>>()?;
        synthetic.push(row(m.theta_z_deg, &pixels)?);
    }
    Ok(Theorem1Report { measured_spread: spread(&measured), synthetic_spread: spread(&synthetic), measured, synthetic })
}

pub fn cmd_theorem1(fixture: &RotationFixture, cfg: &ExperimentConfig, out: &mut OutDir) -> CliResult<Theorem1Report> {
    let rep = run_theorem1(fixture, cfg)?;
    let mut t = Table::new(&["theta_z_deg", "sigma_1", "sigma_2", "sigma_3", "npem", "synthetic_npem"]);
    for (m, s) in rep.measured.iter().zip(&rep.synthetic) {
        let sig = |k: usize| m.sigma.get(k).map_or("nan".to_string(), |v| fmt_sig(*v));
        t.push(vec![fmt_sig(m.theta_z_deg), sig(0), sig(1), sig(2), fmt_sig(m.npem), fmt_sig(s.npem)]);
    }
    t.write(&out.file("theorem1.csv")?)?;
    write_json(&out.file("theorem1.json")?, &rep)?;
    write_manifest(out, "theorem1", cfg, cfg.seed)?;
    Ok(rep)
}

// ---------------------------------------------------------------- NPEM tables

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NpemSample {
    pub x: f64,
    pub y: f64,
    pub n_c: usize,
    /// `None` below three captured LEDs or at reduced rank.
    pub npem: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NpemTable {
    pub layout: LayoutKind,
    pub h: f64,
    pub infinite: bool,
    pub led_count: usize,
    pub samples: Vec<NpemSample>,
    pub fit: FitResult,
    pub mean_npem: f64,
}

impl NpemTable {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.samples.iter().filter_map(|s| s.npem.map(|v| (s.n_c as f64, v))).collect()
    }
}

/// Metric over the receiver grid for one layout and height. The SVD route is
/// cross-checked against the closed form at every receiver.
pub fn run_npem_table<E: Executor>(
    cfg: &ExperimentConfig,
    kind: LayoutKind,
    h: f64,
    infinite: bool,
    exec: &E,
) -> CliResult<NpemTable> {
    let layout = build_layout(cfg, kind, h, infinite)?;
    let grid = if infinite { &cfg.infinite_receivers } else { &cfg.receivers };
    let receivers = grid.points(h)?;
    let intr = &cfg.intrinsics;
    let results = exec.map(&receivers, |r| -> Result<NpemSample, Error> {
        let seen = captured_horizontal(&layout.leds, r, intr);
        let mut s = NpemSample { x: r.x, y: r.y, n_c: seen.len(), npem: None };
        if seen.len() >= 3 {
            let pose = CameraPose::horizontal(*r);
            let svd = cfg.convention.npem(&jacobian_general(&seen, &pose, intr)?, intr, cfg.beta())?;
            let closed = cfg.convention.closed_form(&seen, &pose, intr, cfg.beta())?;
            let rel = (svd.value - closed.value).abs() / svd.value;
            if !(rel <= CLOSED_FORM_AGREEMENT) {
                return Err(Error::NumericalConsistency { what: "closed form vs SVD relative gap", value: rel });
            }
            if !svd.is_rank_deficient() {
                s.npem = Some(svd.value);
            }
        }
        Ok(s)
    });
    let samples = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let pts: Vec<(f64, f64)> = samples.iter().filter_map(|s| s.npem.map(|v| (s.n_c as f64, v))).collect();
    let model = if infinite { FitModel::InverseOffset } else { FitModel::Inverse };
    let fit = fit(model, &pts)?;
    let mean_npem = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    Ok(NpemTable { layout: kind, h, infinite, led_count: layout.len(), samples, fit, mean_npem })
}

pub fn run_npem_tables<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> CliResult<Vec<NpemTable>> {
    let mut out = Vec::new();
    for kind in cfg.layouts() {
        for &h in &cfg.heights {
            out.push(run_npem_table(cfg, kind, h, cfg.infinite, exec)?);
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct FitEntry<'a> {
    layout: &'a str,
    h: f64,
    infinite: bool,
    fit: &'a FitResult,
    mean_npem: f64,
}

pub fn cmd_npem_tables<E: Executor>(cfg: &ExperimentConfig, out: &mut OutDir, exec: &E) -> CliResult<Vec<NpemTable>> {
    let tables = run_npem_tables(cfg, exec)?;
    let mode = if cfg.infinite { "infinite" } else { "room" };
    let mut summary = Table::new(&["layout", "h", "mean_npem", "k", "c", "r_square", "rmse", "n_points"]);
    for t in &tables {
        let mut csv = Table::new(&["x", "y", "n_c", "npem"]);
        for s in &t.samples {
            csv.push(vec![
                fmt_sig(s.x),
                fmt_sig(s.y),
                s.n_c.to_string(),
                s.npem.map_or("nan".to_string(), fmt_sig),
            ]);
        }
        csv.write(&out.file(&format!("npem_{mode}_{}_{}.csv", t.layout.name(), height_tag(t.h)))?)?;
        summary.push(vec![
            t.layout.name().to_string(),
            fmt_sig(t.h),
            fmt_sig(t.mean_npem),
            fmt_sig(t.fit.k),
            fmt_sig(t.fit.c),
            fmt_sig(t.fit.r_square),
            fmt_sig(t.fit.rmse),
            t.fit.n_points.to_string(),
        ]);
    }
    summary.write(&out.file(&format!("npem_{mode}_summary.csv"))?)?;
    let fits: Vec<FitEntry> = tables
        .iter()
        .map(|t| FitEntry { layout: t.layout.name(), h: t.h, infinite: t.infinite, fit: &t.fit, mean_npem: t.mean_npem })
        .collect();
    write_json(&out.file(&format!("npem_{mode}_fits.json"))?, &fits)?;
    write_manifest(out, "npem-tables", cfg, cfg.seed)?;
    Ok(tables)
}

// ---------------------------------------------------------------- simulator

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeightFit {
    pub h: f64,
    pub fit: FitResult,
    pub bins: Vec<GroupMean<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub table: ErrorTable,
    pub fits: Vec<HeightFit>,
}

pub fn run_sim_error<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> CliResult<SimReport> {
    let kind = cfg.layout.unwrap_or(LayoutKind::Square);
    let layout = build_layout(cfg, kind, 0.0, false)?;
    let receivers = cfg.simulation.receivers.xy()?;
    let search = cfg.simulation.search(cfg.room.led_height);
    let table = run_error_experiment(
        &layout.leds,
        &receivers,
        &cfg.heights,
        &cfg.simulation.scales(),
        &cfg.intrinsics,
        Some(search),
        exec,
    )?;
    let mut fits = Vec::new();
    for &h in &cfg.heights {
        let fit = if cfg.simulation.per_bin {
            table.fit_bins(h, FitModel::InverseOffset)?
        } else {
            table.fit_samples(h, FitModel::InverseOffset)?
        };
        fits.push(HeightFit { h, fit, bins: table.bin_means(h) });
    }
    Ok(SimReport { table, fits })
}

pub fn cmd_sim_error<E: Executor>(cfg: &ExperimentConfig, out: &mut OutDir, exec: &E) -> CliResult<SimReport> {
    let rep = run_sim_error(cfg, exec)?;
    let mut t = Table::new(&["point_x", "point_y", "h", "pixel_scale", "n_c", "error_m"]);
    for r in &rep.table.rows {
        t.push(vec![
            fmt_sig(r.point_x),
            fmt_sig(r.point_y),
            fmt_sig(r.h),
            fmt_sig(r.pixel_scale),
            r.n_c.to_string(),
            fmt_sig(r.error_m),
        ]);
    }
    t.write(&out.file("sim_error.csv")?)?;
    for f in &rep.fits {
        let mut a = Table::new(&["n_c", "mean_error_m"]);
        for b in &f.bins {
            a.push(vec![b.key.to_string(), fmt_sig(b.mean)]);
        }
        a.write(&out.file(&format!("sim_error_mean_{}.csv", height_tag(f.h)))?)?;
    }
    write_json(&out.file("sim_error_fits.json")?, &rep.fits)?;
    write_manifest(out, "sim-error", cfg, cfg.seed)?;
    Ok(rep)
}

// ---------------------------------------------------------------- optimizers

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RectReport {
    pub uniform: ObjectiveReport,
    pub spacings: SymmetricRectangularLayout,
    pub optimized: ObjectiveReport,
}

fn report(cfg: &ExperimentConfig, leds: &[WorldPoint], receivers: &[WorldPoint]) -> CliResult<ObjectiveReport> {
    Ok(objective(leds, receivers, &cfg.intrinsics, cfg.beta(), &cfg.convention)?)
}

pub fn uniform_report(cfg: &ExperimentConfig) -> CliResult<ObjectiveReport> {
    let o = &cfg.optimizer;
    let receivers = o.receivers.points(o.height)?;
    let uni = SymmetricRectangularLayout::uniform(o.rows, o.cols, &cfg.room)?;
    report(cfg, &uni.leds(cfg.room.led_height), &receivers)
}

pub fn run_optimize_rect(cfg: &ExperimentConfig) -> CliResult<RectReport> {
    let o = &cfg.optimizer;
    let receivers = o.receivers.points(o.height)?;
    let (spacings, _) = optimize_rectangular(o.rows, o.cols, &cfg.room, &receivers, &cfg.intrinsics, &o.spacing)?;
    Ok(RectReport {
        uniform: uniform_report(cfg)?,
        optimized: report(cfg, &spacings.leds(cfg.room.led_height), &receivers)?,
        spacings,
    })
}

pub fn cmd_optimize_rect(cfg: &ExperimentConfig, out: &mut OutDir) -> CliResult<RectReport> {
    let rep = run_optimize_rect(cfg)?;
    write_layout(&out.file("rect_layout.json")?, &rep.spacings.to_layout(&cfg.room))?;
    write_json(&out.file("rect_report.json")?, &rep)?;
    write_manifest(out, "optimize-rect", cfg, cfg.seed)?;
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaReport {
    pub uniform: ObjectiveReport,
    pub outcome: GaOutcome,
    pub optimized: ObjectiveReport,
}

pub fn run_optimize_ga<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> CliResult<GaReport> {
    let o = &cfg.optimizer;
    let receivers = o.receivers.points(o.height)?;
    let outcome = optimize_ga(o.rows * o.cols, &cfg.room, &receivers, &cfg.intrinsics, &o.ga, exec)?;
    Ok(GaReport {
        uniform: uniform_report(cfg)?,
        optimized: report(cfg, &outcome.layout.leds, &receivers)?,
        outcome,
    })
}

#[derive(Serialize)]
struct GaSummary<'a> {
    uniform: &'a ObjectiveReport,
    optimized: &'a ObjectiveReport,
    objective: f64,
    history: &'a [GenerationStats],
}

pub fn cmd_optimize_ga<E: Executor>(cfg: &ExperimentConfig, out: &mut OutDir, exec: &E) -> CliResult<GaReport> {
    let rep = run_optimize_ga(cfg, exec)?;
    write_layout(&out.file("ga_layout.json")?, &rep.outcome.layout)?;
    let mut h = Table::new(&["generation", "best_fitness", "mean_fitness"]);
    for g in &rep.outcome.history {
        h.push(vec![g.generation.to_string(), fmt_sig(g.best_fitness), fmt_sig(g.mean_fitness)]);
    }
    h.write(&out.file("ga_history.csv")?)?;
    let summary = GaSummary {
        uniform: &rep.uniform,
        optimized: &rep.optimized,
        objective: rep.outcome.objective,
        history: &rep.outcome.history,
    };
    write_json(&out.file("ga_report.json")?, &summary)?;
    write_manifest(out, "optimize-ga", cfg, cfg.optimizer.ga.seed)?;
    Ok(rep)
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub per_bin: bool,
    pub fit: FitResult,
}

/// Fits raw points, or per-`x` means (bins under three samples dropped).
pub fn run_fit(points: &[(f64, f64)], model: FitModel, per_bin: bool) -> CliResult<FitReport> {
    let fit = if per_bin {
        let bins = aggregate_mean(points.iter().map(|&(x, y)| (x as usize, y)));
        let pts: Vec<(f64, f64)> =
            bins.iter().filter(|b| b.count >= vlp_core::simulator::MIN_BIN_SAMPLES).map(|b| (b.key as f64, b.mean)).collect();
        fit(model, &pts)?
    } else {
        fit(model, points)?
    };
    if fit.r_square < 0.0 {
        eprintln!("warning: negative R-square ({}); the model fits worse than the mean", fmt_sig(fit.r_square));
    }
    Ok(FitReport { per_bin, fit })
}

pub fn cmd_fit(points: &[(f64, f64)], model: FitModel, per_bin: bool, cfg: &ExperimentConfig, out: &mut OutDir) -> CliResult<FitReport> {
    let rep = run_fit(points, model, per_bin)?;
    write_json(&out.file("fit.json")?, &rep)?;
    write_manifest(out, "fit", cfg, cfg.seed)?;
    Ok(rep)
}
