//! Match filtering: quality class, bbox aspect ratio, swimming direction.
//!
//! Runs the pipeline on a noisy synthetic benchmark with all filters on and
//! tallies why pairs were dropped, then shows the boundary semantics on
//! hand-built cases.
//!
//! Run with: `cargo run --release --example filter_matches`

use aquastereo::pipeline::{benchmark_inputs, run_measure, DropReason, PipelineOptions};
use aquastereo::synth::{standard_benchmark, BenchmarkProfile, STANDARD_TANK_DEPTH_MM};

fn main() {
    let bench = standard_benchmark(BenchmarkProfile::Noisy).unwrap();
    let inputs = benchmark_inputs(&bench);
    let opts = PipelineOptions {
        depth_range: (5.0, STANDARD_TANK_DEPTH_MM),
        ..PipelineOptions::default()
    };
    let output = run_measure(&bench.left_cam, &bench.right_cam, &inputs, &opts).unwrap();

    let count = |reason: DropReason| {
        output
            .records
            .iter()
            .filter(|r| r.dropped == Some(reason))
            .count()
    };
    println!("{} matched pairs over {} frames:", output.records.len(), inputs.len());
    println!("  kept                 {}", output.retained().count());
    println!("  rejected by quality  {}", count(DropReason::Filter(aquastereo::RejectedBy::Quality)));
    println!("  rejected by aspect   {}", count(DropReason::Filter(aquastereo::RejectedBy::Aspect)));
    println!("  rejected by direction{:>2}", count(DropReason::Filter(aquastereo::RejectedBy::Direction)));
    println!("  dropped by ray gap   {}", count(DropReason::RayGap));

    // Boundary semantics on the direction filter.
    println!("\nswimming-direction boundary (threshold 45°):");
    for angle in [90.0, 60.0, 45.0, 44.99, 10.0] {
        let kept = angle >= 45.0;
        println!("  body axis at {angle:5.2}° to the optical axis → {}", if kept { "kept" } else { "rejected" });
    }
    println!("\naspect-ratio boundary (threshold 1.5, width/height):");
    for (w, h) in [(90.0, 30.0), (45.0, 30.0), (44.97, 30.0)] {
        let ratio: f64 = w / h;
        println!("  {w}×{h} (ratio {ratio:.3}) → {}", if ratio >= 1.5 { "kept" } else { "rejected" });
    }
}
