//! `world4d`: synthesize rigid-body datasets, evaluate predictions against
//! ground truth, aggregate reports.
//!
//! Exit codes: 0 success, 1 internal failure, 2 usage or validation error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use world4d_core::dataset::{synthesize, SynthOptions};
use world4d_core::eval::{evaluate, EvalConfig, GtPointSource, SeedRegion, Suite};
use world4d_core::io::report::{aggregate, read_report, report_csv, MetricsReport};
use world4d_core::metrics::DepthAlignment;
use world4d_core::synth::{randomize_scene, CameraMode, Complexity, SceneSpec};
use world4d_core::Error;

#[derive(Parser, Debug)]
#[command(name = "world4d", version, about = "4D world-consistency datasets and metrics")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "WORLD4D_WORKERS", default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a scene and write one sequence directory per camera view.
    Synth(SynthArgs),
    /// Evaluate a predicted sequence against ground truth.
    Eval(EvalArgs),
    /// Average metrics over many report files.
    Report(ReportArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CameraArg {
    Fixed,
    Orbit,
    Dolly,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ComplexityArg {
    Single,
    TwoBody,
    Multi,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Randomize a scene from this seed.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    seed: Option<u64>,
    /// Scene specification JSON.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Restrict the randomized scene to one complexity class.
    #[arg(long, value_enum)]
    complexity: Option<ComplexityArg>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    views: usize,
    /// WIDTHxHEIGHT.
    #[arg(long, default_value = "256x256", value_parser = parse_resolution)]
    resolution: (usize, usize),
    #[arg(long)]
    fps: Option<f64>,
    /// Seconds.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long, value_enum, default_value = "fixed")]
    camera: CameraArg,
    /// Orbit angular rate, rad/s.
    #[arg(long, default_value_t = 0.4)]
    orbit_rate: f64,
    /// Dolly velocity in world coordinates, m/s, as "x,y,z".
    #[arg(long, default_value = "0,0,0.3", value_parser = parse_vec3)]
    dolly_velocity: [f64; 3],
    #[arg(long, default_value_t = 2000)]
    points_per_object: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AlignArg {
    Metric,
    Median,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum GtPointsArg {
    Depth,
    Simulator,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SeedRegionArg {
    Objects,
    Depth,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// depth, warp, flow, chamfer4d, worldline, noveltime, physicsiq or all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Predicted sequence manifest.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth sequence manifest.
    #[arg(long)]
    gt: PathBuf,
    /// Temporal weight, meters per frame.
    #[arg(long, default_value_t = world4d_core::chamfer::DEFAULT_ALPHA)]
    alpha: f64,
    /// Scene-flow motion threshold, meters.
    #[arg(long, default_value_t = world4d_core::geometry::DEFAULT_SCENE_FLOW_DELTA_M)]
    delta: f64,
    /// Optical-flow motion threshold, pixels (when scene flow is absent).
    #[arg(long, default_value_t = world4d_core::geometry::DEFAULT_FLOW_DELTA_PX)]
    delta_px: f64,
    /// Worldline failure threshold, meters.
    #[arg(long, default_value_t = world4d_core::worldline::DEFAULT_FAIL_TAU_M)]
    fail_tau: f64,
    #[arg(long, default_value_t = world4d_core::warp::DEFAULT_CHARBONNIER_EPS)]
    charbonnier_eps: f64,
    #[arg(long, value_enum, default_value = "metric")]
    depth_align: AlignArg,
    /// Worldline seeds per sequence.
    #[arg(long, default_value_t = world4d_core::worldline::DEFAULT_NUM_SEEDS)]
    seeds: usize,
    /// Sampling seed for worldline seeds and point subsampling.
    #[arg(long, default_value_t = world4d_core::worldline::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value = "objects")]
    seed_region: SeedRegionArg,
    #[arg(long, value_enum, default_value = "depth")]
    gt_points: GtPointsArg,
    #[arg(long, default_value_t = world4d_core::chamfer::DEFAULT_POINT_BUDGET)]
    point_budget: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Report files produced by `eval`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once('x').ok_or("expected WIDTHxHEIGHT")?;
    let w: usize = w.parse().map_err(|_| format!("bad width {w:?}"))?;
    let h: usize = h.parse().map_err(|_| format!("bad height {h:?}"))?;
    if w == 0 || h == 0 {
        return Err("resolution must be positive".into());
    }
    Ok((w, h))
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad number {x:?}")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|_| "expected three comma-separated numbers".into())
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } | Error::Simulation(_) => 1,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn require_file(path: &Path, what: &str) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::usage(format!("{what} not found: {}", path.display())))
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run_synth(a: SynthArgs) -> Result<(), Failure> {
    let spec: SceneSpec = match (&a.spec, a.seed) {
        (Some(path), _) => {
            require_file(path, "scene spec")?;
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        }
        (None, Some(seed)) => {
            let complexity = a.complexity.map(|c| match c {
                ComplexityArg::Single => Complexity::Single,
                ComplexityArg::TwoBody => Complexity::TwoBody,
                ComplexityArg::Multi => Complexity::Multi,
            });
            randomize_scene(complexity, seed)
        }
        (None, None) => return Err(Failure::usage("one of --seed or --spec is required")),
    };
    if a.views == 0 {
        return Err(Failure::usage("--views must be ≥ 1"));
    }
    if let Some(d) = a.duration {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Failure::usage(format!("--duration must be > 0, got {d}")));
        }
    }
    if let Some(f) = a.fps {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Failure::usage(format!("--fps must be > 0, got {f}")));
        }
    }
    std::fs::create_dir_all(&a.out)
        .map_err(|e| Failure::usage(format!("cannot create output directory {}: {e}", a.out.display())))?;
    let camera = match a.camera {
        CameraArg::Fixed => CameraMode::FixedMultiview,
        CameraArg::Orbit => CameraMode::Orbit {
            angular_rate: a.orbit_rate,
        },
        CameraArg::Dolly => CameraMode::Dolly {
            velocity: a.dolly_velocity,
        },
    };
    let opts = SynthOptions {
        views: a.views,
        width: a.resolution.0,
        height: a.resolution.1,
        fps: a.fps,
        duration: a.duration,
        camera,
        points_per_object: a.points_per_object,
        ..Default::default()
    };
    let seed = if a.spec.is_some() { None } else { a.seed };
    for path in synthesize(&spec, seed, &opts, &a.out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn run_eval(a: EvalArgs) -> Result<(), Failure> {
    let suites = Suite::parse_list(&a.suite).map_err(|e| Failure::usage(e.to_string()))?;
    require_file(&a.pred, "prediction manifest")?;
    require_file(&a.gt, "ground-truth manifest")?;
    let cfg = EvalConfig {
        alpha: a.alpha,
        delta_m: a.delta,
        delta_px: a.delta_px,
        fail_tau: a.fail_tau,
        charbonnier_eps: a.charbonnier_eps,
        depth: world4d_core::metrics::DepthEvalConfig {
            alignment: match a.depth_align {
                AlignArg::Metric => DepthAlignment::Metric,
                AlignArg::Median => DepthAlignment::MedianScaled,
            },
            ..Default::default()
        },
        seeds: a.seeds,
        seed: a.seed,
        seed_region: match a.seed_region {
            SeedRegionArg::Objects => SeedRegion::Objects,
            SeedRegionArg::Depth => SeedRegion::Depth,
        },
        point_budget: a.point_budget,
        gt_points: match a.gt_points {
            GtPointsArg::Depth => GtPointSource::Depth,
            GtPointsArg::Simulator => GtPointSource::Simulator,
        },
        ..Default::default()
    };
    cfg.validate()?;
    let pred = world4d_core::dataset::Sequence::open(&a.pred)?;
    let gt = world4d_core::dataset::Sequence::open(&a.gt)?;
    let mut report = MetricsReport::new(a.pred.display().to_string(), a.gt.display().to_string());
    report.suites = evaluate(&pred, &gt, &suites, &cfg)?;
    let text = match a.format {
        FormatArg::Json => report.to_json(),
        FormatArg::Csv => report_csv(&report),
    };
    emit(a.out.as_deref(), &text)
}

fn run_report(a: ReportArgs) -> Result<(), Failure> {
    for p in &a.inputs {
        require_file(p, "report")?;
    }
    let reports = a
        .inputs
        .iter()
        .map(|p| read_report(p))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = aggregate(&reports)?;
    let text = match a.format {
        FormatArg::Json => summary.to_json(),
        FormatArg::Csv => summary.to_csv(),
    };
    emit(a.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global() {
            eprintln!("world4d: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Synth(a) => run_synth(a),
        Command::Eval(a) => run_eval(a),
        Command::Report(a) => run_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("world4d: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
