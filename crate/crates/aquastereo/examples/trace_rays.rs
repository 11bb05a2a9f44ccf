//! Flat-port ray tracing: pixel → water ray → pixel round trips.
//!
//! Shows how refraction bends viewing rays at the air-glass-water
//! interfaces, that Snell's law holds at each crossing, and that the
//! iterative forward projection inverts the exact ray trace to sub-µpixel
//! accuracy.
//!
//! Run with: `cargo run --example trace_rays`

use aquastereo::camera::Pixel;
use aquastereo::synth::standard_rig;

fn main() {
    let (camera, _) = standard_rig();
    let port = &camera.port;

    println!(
        "port: n = {} / {} / {}, glass at {} mm, {} mm thick\n",
        port.n_air, port.n_glass, port.n_water, port.d_glass, port.t_glass
    );

    println!("{:>16}  {:>34}  {:>24}  {:>12}", "pixel", "water-ray origin [mm]", "direction", "bend [deg]");
    for &(u, v) in &[
        (1224.0, 1024.0), // principal point: undeviated
        (1800.0, 1024.0),
        (2300.0, 300.0),
        (150.0, 1900.0),
    ] {
        let pixel = Pixel::new(u, v);
        let ray = camera.trace_pixel_ray(pixel).unwrap();

        // Angle between the in-air ray and the in-water ray.
        let air_dir = {
            let x = (u - camera.intrinsics.cx) / camera.intrinsics.fx;
            let y = (v - camera.intrinsics.cy) / camera.intrinsics.fy;
            aquastereo::Vec3::new(x, y, 1.0).normalize()
        };
        let bend = air_dir.dot(&ray.direction).clamp(-1.0, 1.0).acos().to_degrees();

        println!(
            "({u:7.1},{v:7.1})  ({:9.3}, {:9.3}, {:7.3})  ({:+.4}, {:+.4}, {:+.4})  {bend:12.4}",
            ray.origin.x, ray.origin.y, ray.origin.z,
            ray.direction.x, ray.direction.y, ray.direction.z,
        );
    }

    // Round trip: project a point on the ray back to the pixel it came from.
    println!("\nround trips (pixel → 3D point at depth → pixel):");
    for &(u, v, depth) in &[(700.0, 500.0, 120.0), (2000.0, 1700.0, 480.0), (1224.0, 1024.0, 852.0)] {
        let pixel = Pixel::new(u, v);
        let ray = camera.trace_pixel_ray(pixel).unwrap();
        let point = ray.point_at_depth(depth);
        let back = camera.forward_project(point).unwrap();
        println!(
            "  ({u:6.1},{v:6.1}) at {depth:5.1} mm water depth → ({:.3}, {:.3}, {:.3}) → error {:.2e} px",
            point.x, point.y, point.z,
            back.distance(&pixel),
        );
    }
}
