//! The 8-row ablation over the pipeline toggles Qu / Te / Di.
//!
//! Qu = quality filter, Te = template-matching keypoint refinement,
//! Di = aspect-ratio + swimming-direction filters. Runs all toggle
//! combinations on the noisy benchmark, with rendered images so Te has
//! pixels to work with, and prints the RMSE / bad-match table.
//!
//! Run with: `cargo run --release --example ablation_study`

use aquastereo::pipeline::{
    ablation_table_text, benchmark_ground_truth, benchmark_inputs, run_ablation, PipelineOptions,
};
use aquastereo::synth::{rasterize_view, standard_benchmark, BenchmarkProfile, STANDARD_TANK_DEPTH_MM};

fn main() {
    let bench = standard_benchmark(BenchmarkProfile::Noisy).unwrap();
    let mut inputs = benchmark_inputs(&bench);
    eprintln!("rendering {} stereo views...", 2 * inputs.len());
    for (input, scene) in inputs.iter_mut().zip(&bench.frames) {
        let seed = bench.profile.seed() ^ scene.frame_id();
        input.left_image = Some(rasterize_view(&bench.left_cam, &scene.truth, seed).unwrap());
        input.right_image = Some(rasterize_view(&bench.right_cam, &scene.truth, seed).unwrap());
    }

    let ground_truth = benchmark_ground_truth(&bench);
    let opts = PipelineOptions {
        depth_range: (5.0, STANDARD_TANK_DEPTH_MM),
        ..PipelineOptions::default()
    };
    let rows = run_ablation(&bench.left_cam, &bench.right_cam, &inputs, &ground_truth, &opts).unwrap();

    println!(
        "noisy benchmark, {} frames × {} fish (seed {}):\n",
        bench.frames.len(),
        bench.profile.scene_config().n_fish,
        bench.profile.seed()
    );
    print!("{}", ablation_table_text(&rows));
}
