//! Write a synthetic benchmark suite to disk.
//!
//! Produces the same files as `aquastereo simulate`: a detection JSON-lines
//! file, the ground-truth JSON, and the rig calibration — everything the
//! `measure` and `ablate` subcommands need.
//!
//! Run with: `cargo run --example simulate_scenes -- [out_dir]`

use aquastereo::pipeline::write_benchmark;
use aquastereo::synth::{standard_benchmark, BenchmarkProfile};

fn main() {
    let out_dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "target/example_scene".to_string());
    let out_dir = std::path::PathBuf::from(out_dir);

    let benchmark = standard_benchmark(BenchmarkProfile::Noisy).unwrap();
    write_benchmark(&benchmark, &out_dir, false).unwrap();

    let n_fish: usize = benchmark.frames.iter().map(|f| f.truth.len()).sum();
    println!(
        "wrote {} frames ({} fish) of the '{}' profile to {}",
        benchmark.frames.len(),
        n_fish,
        benchmark.profile.key(),
        out_dir.display()
    );
    for name in ["detections.jsonl", "ground_truth.json", "rig.json"] {
        let size = std::fs::metadata(out_dir.join(name)).unwrap().len();
        println!("  {name:20} {size:>9} bytes");
    }
    println!("\nnext: aquastereo measure --calibration {0}/rig.json \\", out_dir.display());
    println!("        --detections {0}/detections.jsonl \\", out_dir.display());
    println!("        --ground-truth {0}/ground_truth.json --out-dir results", out_dir.display());
}
