use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use vlp::config::{parse_layout, parse_quantization};
use vlp::experiments::*;
use vlp::fixture::RotationFixture;
use vlp::io::{fmt_sig, read_fit_points, OutDir};
use vlp::{CliResult, ExperimentConfig, Overrides, Rayon};
use vlp_core::fitting::FitModel;
use vlp_core::{LayoutKind, Quantization};

#[derive(Parser, Debug)]
#[command(name = "vlp", version, about = "Camera-based 3D visible light positioning experiments")]
struct Cli {
    /// JSON experiment configuration; missing fields take the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// square, hex or tri.
    #[arg(long, global = true, value_parser = parse_layout)]
    layout: Option<LayoutKind>,
    /// Single receiver height in metres.
    #[arg(long, global = true)]
    height: Option<f64>,
    /// Infinite LED tiling instead of the finite room.
    #[arg(long, global = true)]
    infinite: bool,
    /// integer or half.
    #[arg(long, global = true, value_parser = parse_quantization)]
    quantization: Option<Quantization>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Model {
    Inverse,
    Offset,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Capture count and metric over a grid of camera rotations.
    RotationSweep,
    /// Heading invariance check on the measured pixel fixture.
    Theorem1 {
        /// Fixture JSON; the shipped measurements when omitted.
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
    /// Metric maps, inverse-law fits and mean values per layout and height.
    NpemTables,
    /// Quantized positioning error over receivers, heights and pixel sizes.
    SimError,
    /// Symmetric non-uniform rectangular spacing search.
    OptimizeRect,
    /// Genetic algorithm over free LED positions.
    OptimizeGa,
    /// Fit y = k/x or y = k/x + c to a CSV with an n_c column.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "inverse")]
        model: Model,
        /// Column holding y; npem, error_m or mean_error_m when omitted.
        #[arg(long)]
        column: Option<String>,
        /// Fit per-n_c means instead of raw rows.
        #[arg(long)]
        per_bin: bool,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        layout: cli.layout,
        height: cli.height,
        infinite: cli.infinite,
        quantization: cli.quantization,
    });
    cfg.validate()?;
    let mut out = OutDir::create(&cli.out)?;
    let exec = Rayon;
    match cli.command {
        Command::RotationSweep => {
            let s = cmd_rotation_sweep(&cfg, &mut out, &exec)?;
            let valid = s.iter().filter(|s| s.npem.is_some()).count();
            println!("rotation-sweep: {} poses, {} with at least three LEDs", s.len(), valid);
        }
        Command::Theorem1 { fixture } => {
            let f = match fixture {
                Some(p) => RotationFixture::load(&p)?,
                None => RotationFixture::shipped(),
            };
            let r = cmd_theorem1(&f, &cfg, &mut out)?;
            for m in &r.measured {
                println!("theta_z {:>5} deg  npem {}", fmt_sig(m.theta_z_deg), fmt_sig(m.npem));
            }
            println!("measured spread {}  synthetic spread {}", fmt_sig(r.measured_spread), fmt_sig(r.synthetic_spread));
        }
        Command::NpemTables => {
            for t in cmd_npem_tables(&cfg, &mut out, &exec)? {
                println!(
                    "{:<6} h={:<4} mean {}  k {}  c {}  R2 {}",
                    t.layout.name(),
                    fmt_sig(t.h),
                    fmt_sig(t.mean_npem),
                    fmt_sig(t.fit.k),
                    fmt_sig(t.fit.c),
                    fmt_sig(t.fit.r_square)
                );
            }
        }
        Command::SimError => {
            let r = cmd_sim_error(&cfg, &mut out, &exec)?;
            for f in &r.fits {
                println!("h={:<4} k {}  c {}  R2 {}", fmt_sig(f.h), fmt_sig(f.fit.k), fmt_sig(f.fit.c), fmt_sig(f.fit.r_square));
            }
        }
        Command::OptimizeRect => {
            let r = cmd_optimize_rect(&cfg, &mut out)?;
            let show = |o: &Option<f64>| o.map_or("n/a".to_string(), fmt_sig);
            println!("uniform   mean npem {}  mean 1/n_c {}", show(&r.uniform.mean_npem), fmt_sig(r.uniform.mean_inverse_count));
            println!("optimized mean npem {}  mean 1/n_c {}", show(&r.optimized.mean_npem), fmt_sig(r.optimized.mean_inverse_count));
        }
        Command::OptimizeGa => {
            let r = cmd_optimize_ga(&cfg, &mut out, &exec)?;
            let show = |o: &Option<f64>| o.map_or("n/a".to_string(), fmt_sig);
            println!("uniform   mean npem {}  mean 1/n_c {}", show(&r.uniform.mean_npem), fmt_sig(r.uniform.mean_inverse_count));
            println!("ga        mean npem {}  mean 1/n_c {}", show(&r.optimized.mean_npem), fmt_sig(r.optimized.mean_inverse_count));
        }
        Command::Fit { input, model, column, per_bin } => {
            let pts = read_fit_points(&input, column.as_deref())?;
            let model = match model {
                Model::Inverse => FitModel::Inverse,
                Model::Offset => FitModel::InverseOffset,
            };
            let r = cmd_fit(&pts, model, per_bin, &cfg, &mut out)?;
            println!("k {}  c {}  R2 {}  RMSE {}", fmt_sig(r.fit.k), fmt_sig(r.fit.c), fmt_sig(r.fit.r_square), fmt_sig(r.fit.rmse));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

