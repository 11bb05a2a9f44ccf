//! Batch CLI for the refractive stereo fish-measurement pipeline.
//!
//! Subcommands: `measure` (detections → lengths + evaluation), `simulate`
//! (synthetic benchmark scenes), `epipolar` (curve export for plotting),
//! and `ablate` (the 8-row toggle study). `measure` and `ablate` accept a
//! JSON config file via `--config`; explicit flags override its values, so
//! a config file is a complete, reproducible experiment record. Exit
//! codes: 0 success, 2 config error, 3 parse/validation error, 4 empty
//! result, 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use aquastereo::camera::Pixel;
use aquastereo::error::Error;
use aquastereo::pipeline::{
    self, ablation_csv, ablation_table_text, epipolar_csv, evaluation_json, results_csv,
    FramePairInput, PipelineOptions, PipelineToggles,
};
use aquastereo::synth::BenchmarkProfile;
use aquastereo::RigCalibration;

#[derive(Parser)]
#[command(name = "aquastereo")]
#[command(about = "Refraction-aware stereo measurement of fish length in aquariums")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Args, Clone)]
struct PipelineArgs {
    /// JSON config file holding any of the other options; explicit flags
    /// win over its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Rig calibration JSON.
    #[arg(long)]
    calibration: Option<PathBuf>,

    /// Detection JSON-lines file (left and right frames).
    #[arg(long)]
    detections: Option<PathBuf>,

    /// Ground-truth JSON for evaluation.
    #[arg(long)]
    ground_truth: Option<PathBuf>,

    /// Base directory for the images referenced by detections
    /// (default: the directory of the detections file).
    #[arg(long)]
    images: Option<PathBuf>,

    /// Output directory for results (default: current directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// Epipolar gate and normalizer in pixels (default 150).
    #[arg(long)]
    gate_px: Option<f64>,

    /// Epipolar curve segments (default 32).
    #[arg(long)]
    segments: Option<usize>,

    /// Depth sampling range as MIN,MAX in mm of water
    /// (default: 5 to the calibration's tank depth).
    #[arg(long, value_parser = parse_range)]
    depth_range: Option<(f64, f64)>,

    /// Optional cutoff on the total matching cost (default: none).
    #[arg(long)]
    tau_max: Option<f64>,

    /// Drop triangulations with a larger ray gap from statistics
    /// (default 5 mm).
    #[arg(long)]
    max_ray_gap_mm: Option<f64>,

    /// Ground-truth association gate in pixels (default 30).
    #[arg(long)]
    max_center_dist_px: Option<f64>,

    /// Template half-size for keypoint refinement (default 10).
    #[arg(long)]
    template_half: Option<u32>,

    /// Search half-size for keypoint refinement (default 30).
    #[arg(long)]
    search_half: Option<u32>,

    /// Epipolar gate for refinement candidates in px (default 5).
    #[arg(long)]
    epipolar_gate: Option<f64>,

    /// Minimum accepted NCC score (default 0.2).
    #[arg(long)]
    min_ncc: Option<f64>,

    /// Disable the quality filter (Qu).
    #[arg(long)]
    no_quality_filter: bool,

    /// Disable keypoint refinement by template matching (Te).
    #[arg(long)]
    no_template_refine: bool,

    /// Disable the aspect-ratio and swimming-direction filters (Di).
    #[arg(long)]
    no_direction_filter: bool,

    /// Print one JSON object per dropped pair to stderr.
    #[arg(long)]
    trace: bool,
}

/// The file-side counterpart of [`PipelineArgs`]. Unknown keys are
/// rejected so typos cannot silently fall back to defaults.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    calibration: Option<PathBuf>,
    detections: Option<PathBuf>,
    ground_truth: Option<PathBuf>,
    images: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    gate_px: Option<f64>,
    segments: Option<usize>,
    depth_range: Option<[f64; 2]>,
    tau_max: Option<f64>,
    max_ray_gap_mm: Option<f64>,
    max_center_dist_px: Option<f64>,
    template_half: Option<u32>,
    search_half: Option<u32>,
    epipolar_gate: Option<f64>,
    min_ncc: Option<f64>,
    quality_filter: Option<bool>,
    template_refine: Option<bool>,
    direction_filter: Option<bool>,
    /// Restrict refinement to these keypoint names; all five when absent.
    refine_keypoints: Option<Vec<String>>,
    trace: Option<bool>,
}

/// Fully resolved run parameters: flags over config file over defaults.
struct RunConfig {
    calibration: PathBuf,
    detections: PathBuf,
    ground_truth: Option<PathBuf>,
    images: Option<PathBuf>,
    out_dir: PathBuf,
    depth_range: Option<(f64, f64)>,
    options: PipelineOptions,
    trace: bool,
}

fn resolve(args: &PipelineArgs) -> aquastereo::Result<RunConfig> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };

    let defaults = PipelineOptions::default();
    let mut options = PipelineOptions {
        gate_px: args.gate_px.or(file.gate_px).unwrap_or(defaults.gate_px),
        segments: args.segments.or(file.segments).unwrap_or(defaults.segments),
        max_total_cost: args.tau_max.or(file.tau_max).unwrap_or(defaults.max_total_cost),
        max_ray_gap_mm: args
            .max_ray_gap_mm
            .or(file.max_ray_gap_mm)
            .unwrap_or(defaults.max_ray_gap_mm),
        max_center_dist_px: args
            .max_center_dist_px
            .or(file.max_center_dist_px)
            .unwrap_or(defaults.max_center_dist_px),
        toggles: PipelineToggles {
            quality: file.quality_filter.unwrap_or(true) && !args.no_quality_filter,
            template: file.template_refine.unwrap_or(true) && !args.no_template_refine,
            direction: file.direction_filter.unwrap_or(true) && !args.no_direction_filter,
        },
        ..defaults
    };
    let refinement = &mut options.refinement;
    refinement.template_half = args
        .template_half
        .or(file.template_half)
        .unwrap_or(refinement.template_half);
    refinement.search_half = args
        .search_half
        .or(file.search_half)
        .unwrap_or(refinement.search_half);
    refinement.epipolar_gate = args
        .epipolar_gate
        .or(file.epipolar_gate)
        .unwrap_or(refinement.epipolar_gate);
    refinement.min_ncc = args.min_ncc.or(file.min_ncc).unwrap_or(refinement.min_ncc);
    if let Some(names) = &file.refine_keypoints {
        let mut keypoints = Vec::with_capacity(names.len());
        for name in names {
            keypoints.push(aquastereo::KeypointName::from_key(name).ok_or_else(|| {
                Error::Config(format!("unknown keypoint name '{name}' in refine_keypoints"))
            })?);
        }
        refinement.keypoints = Some(keypoints);
    }

    Ok(RunConfig {
        calibration: args
            .calibration
            .clone()
            .or(file.calibration)
            .ok_or_else(|| Error::Config("missing --calibration (or config entry)".into()))?,
        detections: args
            .detections
            .clone()
            .or(file.detections)
            .ok_or_else(|| Error::Config("missing --detections (or config entry)".into()))?,
        ground_truth: args.ground_truth.clone().or(file.ground_truth),
        images: args.images.clone().or(file.images),
        out_dir: args
            .out_dir
            .clone()
            .or(file.out_dir)
            .unwrap_or_else(|| PathBuf::from(".")),
        depth_range: args
            .depth_range
            .or(file.depth_range.map(|[lo, hi]| (lo, hi))),
        options,
        trace: args.trace || file.trace.unwrap_or(false),
    })
}

#[derive(Subcommand)]
enum Commands {
    /// Measure fish lengths from a detection file.
    Measure {
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Generate a synthetic benchmark scene suite.
    Simulate {
        /// Benchmark profile: clean, noisy, or crowded.
        #[arg(long)]
        profile: String,

        /// Output directory.
        #[arg(long)]
        out_dir: PathBuf,

        /// Render PGM images for template matching.
        #[arg(long)]
        images: bool,

        /// Override the profile's frozen seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Export an epipolar curve as CSV (u,v,depth_mm).
    Epipolar {
        /// Rig calibration JSON.
        #[arg(long)]
        calibration: PathBuf,

        /// Source pixel in the left image as U,V.
        #[arg(long, value_parser = parse_pixel)]
        pixel: (f64, f64),

        /// Depth sampling range as MIN,MAX in mm of water.
        #[arg(long, value_parser = parse_range)]
        depth_range: Option<(f64, f64)>,

        /// Polyline segments.
        #[arg(long, default_value_t = 32)]
        segments: usize,

        /// Sample 4× denser.
        #[arg(long)]
        dense: bool,

        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full 8-row toggle ablation (Qu / Te / Di).
    Ablate {
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected MIN,MAX".into());
    }
    let min: f64 = parts[0].trim().parse().map_err(|_| "bad MIN value")?;
    let max: f64 = parts[1].trim().parse().map_err(|_| "bad MAX value")?;
    Ok((min, max))
}

fn parse_pixel(s: &str) -> Result<(f64, f64), String> {
    parse_range(s)
}

fn exit_code_of(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Parse { .. } | Error::Validation { .. } | Error::Json(_) => 3,
        Error::EmptyEvaluation => 4,
        _ => 1,
    }
}

fn load_inputs(run: &RunConfig, want_images: bool) -> aquastereo::Result<Vec<FramePairInput>> {
    if !run.calibration.exists() {
        return Err(Error::Config(format!(
            "calibration file {} does not exist",
            run.calibration.display()
        )));
    }
    if !run.detections.exists() {
        return Err(Error::Config(format!(
            "detection file {} does not exist",
            run.detections.display()
        )));
    }
    let frames = aquastereo::read_detection_file(&run.detections)?;
    let mut inputs = pipeline::pair_frames(frames)?;
    if want_images {
        let base = run
            .images
            .clone()
            .or_else(|| run.detections.parent().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        pipeline::load_frame_images(&mut inputs, &base)?;
    }
    Ok(inputs)
}

fn run_measure(args: &PipelineArgs) -> aquastereo::Result<()> {
    let mut run = resolve(args)?;
    let rig = RigCalibration::load(&run.calibration)?;
    run.options.depth_range = run.depth_range.unwrap_or_else(|| rig.default_depth_range());
    let inputs = load_inputs(&run, run.options.toggles.template)?;

    std::fs::create_dir_all(&run.out_dir)?;
    let output;
    if let Some(gt_path) = &run.ground_truth {
        let gt = aquastereo::synth::read_ground_truth(gt_path)?;
        let (out, report) =
            pipeline::run_and_evaluate(&rig.left, &rig.right, &inputs, &gt, &run.options)?;
        std::fs::write(run.out_dir.join("evaluation.json"), evaluation_json(&report))?;
        println!(
            "measured {} pairs ({} gap-dropped), RMSE {:.6} mm, bad matches {:.3}%",
            report.n_measured,
            report.n_gap_dropped,
            report.rmse_mm,
            report.bad_match_pct
        );
        output = out;
    } else {
        output = pipeline::run_measure(&rig.left, &rig.right, &inputs, &run.options)?;
        let kept = output.retained().count();
        println!("measured {} pairs ({} matched)", kept, output.records.len());
    }
    std::fs::write(run.out_dir.join("results.csv"), results_csv(&output))?;
    if run.trace {
        for line in &output.trace {
            eprintln!("{line}");
        }
    }
    Ok(())
}

fn run_simulate(
    profile: &str,
    out_dir: &Path,
    images: bool,
    seed: Option<u64>,
) -> aquastereo::Result<()> {
    let profile = BenchmarkProfile::parse(profile)
        .ok_or_else(|| Error::Config(format!("unknown profile '{profile}'")))?;
    let benchmark = match seed {
        Some(seed) => aquastereo::synth::standard_benchmark_with_seed(profile, seed)?,
        None => aquastereo::standard_benchmark(profile)?,
    };
    let detections = pipeline::write_benchmark(&benchmark, out_dir, images)?;
    println!(
        "wrote {} frames × {} fish to {}",
        benchmark.frames.len(),
        profile.scene_config().n_fish,
        detections.parent().unwrap_or(out_dir).display()
    );
    Ok(())
}

fn run_epipolar(
    calibration: &Path,
    pixel: (f64, f64),
    depth_range: Option<(f64, f64)>,
    segments: usize,
    dense: bool,
    out: Option<&PathBuf>,
) -> aquastereo::Result<()> {
    let rig = RigCalibration::load(calibration)?;
    let range = depth_range.unwrap_or_else(|| rig.default_depth_range());
    let segments = if dense { segments * 4 } else { segments };
    let curve = aquastereo::compute_epipolar_curve(
        &rig.left,
        &rig.right,
        Pixel::new(pixel.0, pixel.1),
        range,
        segments,
    )?;
    let csv = epipolar_csv(&curve);
    match out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn run_ablate(args: &PipelineArgs) -> aquastereo::Result<()> {
    let mut run = resolve(args)?;
    let rig = RigCalibration::load(&run.calibration)?;
    run.options.depth_range = run.depth_range.unwrap_or_else(|| rig.default_depth_range());
    let gt_path = run
        .ground_truth
        .as_ref()
        .ok_or_else(|| Error::Config("ablate requires --ground-truth".into()))?;
    let gt = aquastereo::synth::read_ground_truth(gt_path)?;
    let inputs = load_inputs(&run, true)?;

    let rows = pipeline::run_ablation(&rig.left, &rig.right, &inputs, &gt, &run.options)?;
    std::fs::create_dir_all(&run.out_dir)?;
    std::fs::write(run.out_dir.join("ablation.csv"), ablation_csv(&rows))?;
    print!("{}", ablation_table_text(&rows));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Commands::Measure { pipeline } => run_measure(pipeline),
        Commands::Simulate {
            profile,
            out_dir,
            images,
            seed,
        } => run_simulate(profile, out_dir, *images, *seed),
        Commands::Epipolar {
            calibration,
            pixel,
            depth_range,
            segments,
            dense,
            out,
        } => run_epipolar(calibration, *pixel, *depth_range, *segments, *dense, out.as_ref()),
        Commands::Ablate { pipeline } => run_ablate(pipeline),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_of(&err))
        }
    }
}
